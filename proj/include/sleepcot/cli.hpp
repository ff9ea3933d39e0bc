#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sleepcot/gateway.hpp"
#include "sleepcot/report.hpp"
#include "sleepcot/util.hpp"

namespace sleepcot {

/// Runs one CLI invocation. `args` excludes the program name. Returns the
/// process exit code: 0 on success, 1 for a structured runtime error, 2 for
/// usage errors. Errors go to `err` as `error: <code>: <message>`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Registers the backends named in `cfg` (`backend.<id>.type = mock|mock-alt|http`
/// plus base_url, model_name, auth_env_var, timeout_s). The ids `mock` and
/// `mock-alt` are always present.
void register_configured_backends(Gateway& gw, const KeyValueConfig& cfg);

/// Reports from a .json file (one object or an array), a .txt rendering, or
/// a directory of <id>.json files (manifest.json skipped), in name order.
std::vector<SleepReport> load_reports(const std::filesystem::path& path);

}  // namespace sleepcot
