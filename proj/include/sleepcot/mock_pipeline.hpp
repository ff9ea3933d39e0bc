#pragma once

#include <memory>
#include <string>

#include "sleepcot/gateway.hpp"

namespace sleepcot {

/// Offline stand-in for the teacher, student and judge models. It recognises
/// each pipeline prompt (Pr1, repair, Pr2, Pr3, question answering in all three
/// variants, knowledge questions and answers, judge rubric) and produces a
/// deterministic, well-formed reply derived from the prompt content. Anything
/// else falls through to the echo fallback.
///
/// `alternate_phrasing` switches the personal question bank, standing in for a
/// second question-writing model (used for held-out sets).
std::shared_ptr<MockBackend> make_pipeline_mock(const std::string& id = "mock", bool alternate_phrasing = false);

}  // namespace sleepcot
