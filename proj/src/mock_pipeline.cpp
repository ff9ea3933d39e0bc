#include "sleepcot/mock_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "sleepcot/report.hpp"
#include "sleepcot/rng.hpp"
#include "sleepcot/util.hpp"

namespace sleepcot {

namespace {

const char* const kPersonalStemsA[] = {
    "Is my {t} normal?",
    "What does my {t} say about my recovery?",
    "Should I be worried about my {t}?",
    "How can I improve my {t}?",
    "Why did my {t} change across the nights?",
    "Does my {t} affect my daytime energy?",
    "What habits could be influencing my {t}?",
    "How does my {t} compare with healthy adults?",
    "Could my {t} explain feeling tired in the morning?",
    "What is the trend of my {t} over the monitoring period?",
    "Is my {t} something I should discuss with a doctor?",
    "What might be causing my {t} to look like this?",
    "Is my {t} consistent from night to night?",
    "Can regular exercise change my {t}?",
    "Does stress at work show up in my {t}?",
    "What would a better {t} look like for me?",
    "Is my {t} linked to my sleep apnea events?",
    "How quickly could my {t} improve?",
    "Does my age matter when judging my {t}?",
    "Should I track my {t} more closely?",
};

const char* const kPersonalStemsB[] = {
    "Looking at my report, is my {t} fine?",
    "According to my sleep data, what stands out about my {t}?",
    "Would changing my bedtime routine help my {t}?",
    "Is there anything unusual about my {t}?",
    "What does my {t} mean for my heart?",
};

const char* const kPersonalTopics[] = {
    "SDNN value",           "RMSSD value",        "LF/HF ratio",
    "PNN50 value",          "sleep duration",     "deep sleep time",
    "REM sleep time",       "light sleep time",   "number of sleep apnea events",
    "stress level",         "stress resilience",  "fatigue level",
    "autonomic nervous system activity", "cardiac health", "heart rate variability",
};

const char* const kKnowledgeStems[] = {
    "What is {t}?",
    "Why does {t} matter for sleep health?",
    "How can adults improve {t}?",
    "What are common myths about {t}?",
    "How is {t} measured?",
    "What factors influence {t}?",
    "How does ageing affect {t}?",
    "How does exercise affect {t}?",
    "How does caffeine affect {t}?",
    "How does alcohol affect {t}?",
    "What happens when {t} is disrupted?",
    "Can diet change {t}?",
    "How does stress relate to {t}?",
    "What should a clinician know about {t}?",
    "How do wearables estimate {t}?",
    "Is {t} different for shift workers?",
    "How does {t} change during illness?",
    "What open research questions exist about {t}?",
    "How does screen time interact with {t}?",
    "How do children differ from adults in {t}?",
};

const char* const kKnowledgeTopics[] = {
    "sleep architecture", "deep sleep", "REM sleep", "light sleep", "circadian rhythm",
    "melatonin secretion", "sleep apnea", "insomnia", "restless legs syndrome", "narcolepsy",
    "sleep hygiene", "heart rate variability", "the SDNN metric", "the RMSSD metric", "the LF/HF ratio",
    "the PNN50 metric", "parasympathetic activity", "sympathetic activity", "sleep latency", "sleep efficiency",
    "daytime napping", "sleep debt", "chronotype", "jet lag", "snoring",
    "nocturnal awakenings", "sleep pressure", "adenosine build-up", "night-time body temperature",
    "the bedroom environment", "blue light exposure", "sleep tracking accuracy", "dreaming", "sleep paralysis",
    "nightmares", "memory consolidation during sleep", "immune function and sleep", "metabolism and sleep",
    "mood and sleep", "cardiovascular health and sleep", "sleep in pregnancy", "sleep in older adults",
    "teenage sleep patterns", "weekend catch-up sleep", "relaxation before bed",
};

std::uint64_t text_seed(std::string_view text) { return std::stoull(sha256_hex(text).substr(0, 16), nullptr, 16); }

std::string fill(std::string_view stem, std::string_view topic) {
  std::string s(stem);
  const auto pos = s.find("{t}");
  return s.replace(pos, 3, topic);
}

int int_after(std::string_view text, std::string_view marker, int fallback) {
  const auto pos = text.find(marker);
  if (pos == std::string_view::npos) return fallback;
  std::size_t i = pos + marker.size();
  int v = 0;
  bool any = false;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    v = v * 10 + (text[i] - '0');
    any = true;
    ++i;
  }
  return any ? v : fallback;
}

std::string last_of_role(const std::vector<ChatMessage>& msgs, const char* role) {
  for (auto it = msgs.rbegin(); it != msgs.rend(); ++it)
    if (it->role == role) return it->content;
  return {};
}

std::string reports_for(std::uint64_t seed, int count, int nights) {
  auto profiles = sample_profiles(static_cast<std::size_t>(count), seed);
  const auto rules = PhysioRuleSet::defaults();
  const std::string tag = sha256_hex(std::to_string(seed)).substr(0, 6);
  std::string out;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    profiles[i].nights = nights;
    profiles[i].profile_id = "s" + tag + "-" + std::to_string(i + 1);
    if (!out.empty()) out += "\n\n";
    out += generate_report(profiles[i], rules).rendered_text;
  }
  return out;
}

std::string questions_for(std::string_view report, int n, std::size_t turn, bool alternate) {
  std::vector<std::string> bank;
  if (alternate) {
    for (const char* stem : kPersonalStemsB)
      for (const char* topic : kPersonalTopics) bank.push_back(fill(stem, topic));
  } else {
    for (const char* stem : kPersonalStemsA)
      for (const char* topic : kPersonalTopics) bank.push_back(fill(stem, topic));
  }
  Rng rng(derive_seed(text_seed(report), "questions", turn));
  rng.shuffle(bank);
  std::ostringstream os;
  for (int i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i) % bank.size();
    const std::size_t cycle = static_cast<std::size_t>(i) / bank.size();
    std::string q = bank[k];
    if (cycle > 0) q = "Thinking about my report again, " + std::string(1, static_cast<char>(std::tolower(q[0]))) + q.substr(1);
    os << "Question " << (i + 1) << ": " << q << "\n";
  }
  return os.str();
}

std::string knowledge_questions(int n) {
  std::ostringstream os;
  int i = 0;
  for (const char* topic : kKnowledgeTopics) {
    for (const char* stem : kKnowledgeStems) {
      if (i >= n) return os.str();
      os << "Question " << ++i << ": " << fill(stem, topic) << "\n";
    }
  }
  return os.str();
}

// Line of the report most relevant to the question, trimmed.
std::string relevant_line(std::string_view report, std::string_view question) {
  static const std::pair<const char*, const char*> keys[] = {
      {"SDNN", "- SDNN:"},
      {"RMSSD", "- RMSSD:"},
      {"LF/HF", "- LF/HF:"},
      {"PNN50", "- PNN50:"},
      {"stress", "Mean LF/HF ratio"},
      {"deep sleep", "Deep sleep (minutes)"},
      {"REM", "REM sleep (minutes)"},
      {"light sleep", "Light sleep (minutes)"},
      {"apnea", "Sleep apnea events per night"},
      {"sleep duration", "average sleep duration"},
      {"fatigue", "average sleep duration"},
      {"cardiac", "Mean SDNN"},
      {"heart", "Mean SDNN"},
      {"autonomic", "Mean SDNN"},
  };
  for (const auto& [needle, marker] : keys) {
    if (question.find(needle) == std::string_view::npos) continue;
    const auto pos = report.find(marker);
    if (pos == std::string_view::npos) continue;
    const auto start = report.rfind('\n', pos);
    const auto end = report.find('\n', pos);
    std::string line = trim(report.substr(start == std::string_view::npos ? 0 : start + 1,
                                          end == std::string_view::npos ? std::string_view::npos : end - start - 1));
    while (!line.empty() && line.front() == '-') line = trim(std::string_view(line).substr(1));
    while (!line.empty() && line.back() == '.') line.pop_back();
    return line;
  }
  return {};
}

std::string advice_for(std::string_view question) {
  if (question.find("apnea") != std::string_view::npos)
    return "frequent breathing interruptions fragment sleep, so positional changes and a clinical sleep study are "
           "worth considering if they persist";
  if (question.find("stress") != std::string_view::npos || question.find("LF/HF") != std::string_view::npos)
    return "a balanced LF/HF ratio reflects good sympathovagal balance, and relaxation before bed helps keep it there";
  if (question.find("deep") != std::string_view::npos || question.find("REM") != std::string_view::npos ||
      question.find("light") != std::string_view::npos || question.find("duration") != std::string_view::npos)
    return "a consistent sleep schedule and a dark, cool bedroom support healthy sleep stages";
  return "regular exercise, steady sleep timing and limited evening alcohol support heart rate variability";
}

std::string answer_qa(const std::string& prompt) {
  const auto qpos = prompt.rfind("\n\nQuestion: ");
  const auto rpos = prompt.rfind("Sleep report:\n");
  const std::string question = trim(std::string_view(prompt).substr(qpos + 12));
  const std::string_view report =
      rpos == std::string::npos ? std::string_view() : std::string_view(prompt).substr(rpos, qpos - rpos);
  const bool few_shot = prompt.find("Below is an example:") != std::string::npos;
  const bool cot = prompt.find("First, identify relevant information") != std::string::npos;
  const std::string line = relevant_line(report, question);
  const std::string advice = advice_for(question);
  if (!cot) return "Generally speaking, " + advice + ".";
  std::string evidence = line.empty() ? "your report does not list this directly, so I summarised the overall report"
                                      : "your report shows " + line;
  std::string out;
  if (few_shot) {
    const char* kind = line.empty() ? "not covered by the report" : "information found in the report";
    if (question.find("overall") != std::string::npos || question.find("check-up") != std::string::npos ||
        question.find("trend") != std::string::npos)
      kind = "global summary";
    out += std::string("Question type: ") + kind + ". ";
  }
  out += "First, find the relevant information: " + evidence + ". Then, " + advice + ".";
  return out;
}

std::string judge_reply(const std::vector<ChatMessage>& msgs) {
  std::string rubric;
  for (const auto& m : msgs)
    if (m.role == "user" && m.content.find("Answer to evaluate:") != std::string::npos) rubric = m.content;
  const auto apos = rubric.find("Answer to evaluate:\n");
  const auto end = rubric.find("\n\nReply with exactly");
  const std::string answer =
      apos == std::string::npos ? std::string() : rubric.substr(apos + 20, end == std::string::npos ? 0 : end - apos - 20);
  const bool grounded = answer.find("your report shows") != std::string::npos;
  const bool typed = answer.find("Question type:") != std::string::npos;
  const bool cot = answer.find("First, find the relevant information") != std::string::npos;
  const int personalization = grounded ? 5 : cot ? 4 : 3;
  const int relevance = cot ? 5 : 4;
  const int completeness = typed ? 5 : cot ? 4 : 3;
  const int accuracy = grounded || typed ? 5 : 4;
  std::ostringstream os;
  os << "personalization=" << personalization << "\nrelevance=" << relevance << "\ncompleteness=" << completeness
     << "\naccuracy=" << accuracy << "\nrationale=" << (grounded ? "Answer cites the user's own report values."
                                                                  : "Answer is generic rather than report-specific.");
  return os.str();
}

std::string suggestion_for(const std::string& prompt) {
  auto label = [&](const char* name) {
    const std::string marker = std::string("- **") + name + "**: ";
    const auto pos = prompt.find(marker);
    if (pos == std::string::npos) return std::string("Unknown");
    const auto end = prompt.find('\n', pos);
    return trim(std::string_view(prompt).substr(pos + marker.size(), end - pos - marker.size()));
  };
  std::ostringstream os;
  os << "Personalized recommendations:\n";
  os << "1. Stress: your stress level is " << label("Stress Level") << " and stress resilience is "
     << label("Stress Resilience") << "; keep a short wind-down routine before bed.\n";
  os << "2. Recovery: fatigue level is " << label("Fatigue Level")
     << "; keep bedtime and wake time within the same half hour every day.\n";
  os << "3. Heart: cardiac health is " << label("Cardiac Health") << " and autonomic activity is "
     << label("Autonomic Nervous System Activity") << "; moderate aerobic exercise supports both.\n";
  os << "4. Breathing: sleep apnea severity is " << label("Sleep Apnea Severity")
     << "; side sleeping and avoiding late alcohol reduce interruptions.\n";
  return os.str();
}

}  // namespace

std::shared_ptr<MockBackend> make_pipeline_mock(const std::string& id, bool alternate_phrasing) {
  auto mock = std::make_shared<MockBackend>(id);
  mock->set_responder([alternate_phrasing](const std::vector<ChatMessage>& msgs,
                                           double) -> std::optional<std::string> {
    const std::string user = last_of_role(msgs, "user");
    if (user.find("similar data in the same format") != std::string::npos) {
      const int count = std::max(1, int_after(user, "Please generate ", 1));
      const int nights = std::max(1, int_after(user, "is based on ", 6));
      return reports_for(text_seed(last_of_role(msgs, "system") + user), count, nights);
    }
    if (user.find("breaks the physiological rules") != std::string::npos) {
      const int nights = std::max(1, int_after(user, "Keep ", 6));
      return reports_for(text_seed(user), 1, nights);
    }
    if (user.rfind("You are a sleep expert.\nPlease generate personalized recommendations", 0) == 0) {
      return suggestion_for(user);
    }
    if (user.find("questions that users are most likely to ask") != std::string::npos) {
      const int n = std::max(1, int_after(user, "You need to generate ", 150));
      const auto report_pos = user.find(kReportHeader);
      const std::string_view report =
          report_pos == std::string::npos ? std::string_view(user) : std::string_view(user).substr(report_pos);
      const auto turn = static_cast<std::size_t>(
          std::count_if(msgs.begin(), msgs.end(), [](const ChatMessage& m) { return m.role == "user"; }));
      return questions_for(report, n, turn, alternate_phrasing);
    }
    if (user.find("general sleep-health knowledge") != std::string::npos) {
      return knowledge_questions(std::max(1, int_after(user, "Generate ", 1)));
    }
    if (user.rfind("You are a sleep expert. Please answer the following sleep-health question", 0) == 0) {
      const auto q = user.rfind("Question: ");
      const std::string question = trim(std::string_view(user).substr(q + 10));
      return "Regarding \"" + question + "\": " + advice_for(question) + ".";
    }
    for (const auto& m : msgs) {
      if (m.role == "user" && m.content.find("Answer to evaluate:") != std::string::npos) return judge_reply(msgs);
    }
    if (user.find("\n\nQuestion: ") != std::string::npos && user.find("Sleep report:\n") != std::string::npos) {
      return answer_qa(user);
    }
    return std::nullopt;
  });
  return mock;
}

}  // namespace sleepcot
