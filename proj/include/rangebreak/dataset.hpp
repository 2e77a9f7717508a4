#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rangebreak/ingest.hpp"
#include "rangebreak/oracle.hpp"

namespace rangebreak {

// Prompt texts are fixed strings: consistency measurement rests on every
// repeat of a question being byte-identical.
inline constexpr const char* kStageSystemText =
    "You are an assistant that analyzes footprint data tables for trading range breakouts. "
    "Each table lists, for every time tick, the open and close prices and the traded buy and "
    "sell volume at each price level. Answer the question that follows the table concisely.";

inline constexpr const char* kReportSystemText =
    "You are an assistant that writes trading range breakout detection reports. Combine the "
    "stage answers you are given into a short rationale followed by a final verdict sentence "
    "stating whether this is a true breakout or a false breakout.";

inline constexpr const char* kStage1Question =
    "Question (stage 1): In which direction does the current tick break out of the historical "
    "price range? Answer with Up or Down.";
inline constexpr const char* kStage2Question =
    "Question (stage 2): What is the resistance level for this breakout? Answer with the exact "
    "price.";
inline constexpr const char* kStage3Question =
    "Question (stage 3): Comparing buy and sell volume beyond the resistance level on the "
    "current and following ticks, which side is the stronger force? Answer with Buyers or "
    "Sellers.";
inline constexpr const char* kReportInstruction = "Write the detection report.";

inline const char* stage_question(StageId stage) {
  switch (stage) {
    case StageId::S1: return kStage1Question;
    case StageId::S2: return kStage2Question;
    case StageId::S3: return kStage3Question;
  }
  return "";
}

enum class TaskKind { S1, S2, S3, Report };

inline TaskKind task_of(StageId stage) {
  switch (stage) {
    case StageId::S1: return TaskKind::S1;
    case StageId::S2: return TaskKind::S2;
    case StageId::S3: return TaskKind::S3;
  }
  return TaskKind::S1;
}

struct ChatExample {
  std::string system;
  std::string user;
  std::string assistant;  // empty for test items; targets live in the sidecar
  TaskKind stage = TaskKind::S1;
  std::string case_id;

  auto operator<=>(const ChatExample&) const = default;
};

struct StageCounts {
  std::int64_t s1 = 0;
  std::int64_t s2 = 0;
  std::int64_t s3 = 0;

  auto operator<=>(const StageCounts&) const = default;
  std::int64_t total() const { return s1 + s2 + s3; }
};

struct DatasetManifest {
  StageCounts training_counts;
  std::int64_t report_training_count = 0;
  StageCounts test_counts;
  std::int64_t true_breakouts = 0;
  std::int64_t false_breakouts = 0;
  std::uint64_t seed = 0;

  auto operator<=>(const DatasetManifest&) const = default;
};

inline std::string stage_target(const BreakoutCase& bc, StageId stage) {
  StageAnswers answers = run_pipeline(bc);
  switch (stage) {
    case StageId::S1: return render_stage1_answer(answers.direction);
    case StageId::S2: return render_stage2_answer(answers.resistance, bc.tick_size);
    case StageId::S3: return render_stage3_answer(answers.force);
  }
  return "";
}

inline std::string stage_user_text(const BreakoutCase& bc, StageId stage) {
  return render_data_table(bc) + "\n" + stage_question(stage);
}

inline std::string report_user_text(const StageAnswers& answers, const TickSize& ts) {
  return "Stage 1 answer: " + render_stage1_answer(answers.direction) + "\n" +
         "Stage 2 answer: " + render_stage2_answer(answers.resistance, ts) + "\n" +
         "Stage 3 answer: " + render_stage3_answer(answers.force) + "\n" + kReportInstruction;
}

namespace detail {

// Picks `per_class` cases per verdict class, preserving input order.
inline std::vector<const BreakoutCase*> balanced_selection(const std::vector<BreakoutCase>& cases,
                                                           std::int64_t per_class) {
  std::vector<const BreakoutCase*> trues;
  std::vector<const BreakoutCase*> falses;
  for (const BreakoutCase& bc : cases) {
    if (!bc.labels) fail(Errc::insufficient_cases, bc.case_id + " has no labels");
    (bc.labels->verdict == Verdict::TrueBreakout ? trues : falses).push_back(&bc);
  }
  if (static_cast<std::int64_t>(trues.size()) < per_class ||
      static_cast<std::int64_t>(falses.size()) < per_class) {
    fail(Errc::imbalanced_cases,
         "need " + std::to_string(per_class) + " cases per verdict class, have " +
             std::to_string(trues.size()) + " true / " + std::to_string(falses.size()) + " false");
  }
  std::vector<const BreakoutCase*> picked;
  for (std::int64_t i = 0; i < per_class; ++i) {
    picked.push_back(trues[static_cast<std::size_t>(i)]);
    picked.push_back(falses[static_cast<std::size_t>(i)]);
  }
  return picked;
}

}  // namespace detail

// One example per (selected case, stage); verdict classes contribute equally.
inline std::vector<ChatExample> build_stage_training_set(const std::vector<BreakoutCase>& cases,
                                                         int shots_per_stage = 20) {
  if (shots_per_stage < 0) fail(Errc::insufficient_cases, "negative shots_per_stage");
  if (shots_per_stage % 2 != 0) {
    fail(Errc::imbalanced_cases, "shots_per_stage must be even to balance verdict classes");
  }
  if (static_cast<std::size_t>(shots_per_stage) > cases.size()) {
    fail(Errc::insufficient_cases, "need " + std::to_string(shots_per_stage) + " cases, have " +
                                       std::to_string(cases.size()));
  }
  std::vector<const BreakoutCase*> picked = detail::balanced_selection(cases, shots_per_stage / 2);
  std::vector<ChatExample> out;
  for (StageId stage : kAllStages) {
    for (const BreakoutCase* bc : picked) {
      ChatExample ex;
      ex.system = kStageSystemText;
      ex.user = stage_user_text(*bc, stage);
      ex.assistant = stage_target(*bc, stage);
      ex.stage = task_of(stage);
      ex.case_id = bc->case_id;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

inline std::vector<ChatExample> build_report_training_set(const std::vector<BreakoutCase>& cases,
                                                          int shots = 20) {
  if (shots < 0) fail(Errc::insufficient_cases, "negative shots");
  if (static_cast<std::size_t>(shots) > cases.size()) {
    fail(Errc::insufficient_cases,
         "need " + std::to_string(shots) + " cases, have " + std::to_string(cases.size()));
  }
  std::vector<ChatExample> out;
  for (int i = 0; i < shots; ++i) {
    const BreakoutCase& bc = cases[static_cast<std::size_t>(i)];
    StageAnswers answers = run_pipeline(bc);
    ChatExample ex;
    ex.system = kReportSystemText;
    ex.user = report_user_text(answers, bc.tick_size);
    ex.assistant = report_text(generate_report(answers, bc.tick_size));
    ex.stage = TaskKind::Report;
    ex.case_id = bc.case_id;
    out.push_back(std::move(ex));
  }
  return out;
}

struct TestItem {
  ChatExample chat;       // assistant left empty
  StageId stage = StageId::S1;
  std::string target;     // canonical oracle rendering, kept out of the chat file
  BreakoutCase source;    // retained so the oracle solver can recompute
};

inline std::vector<TestItem> build_test_set(const std::vector<BreakoutCase>& cases,
                                            int per_stage = 40) {
  if (per_stage < 0) fail(Errc::insufficient_cases, "negative per_stage");
  if (static_cast<std::size_t>(per_stage) > cases.size()) {
    fail(Errc::insufficient_cases, "need " + std::to_string(per_stage) + " cases, have " +
                                       std::to_string(cases.size()));
  }
  std::vector<TestItem> out;
  for (StageId stage : kAllStages) {
    for (int i = 0; i < per_stage; ++i) {
      const BreakoutCase& bc = cases[static_cast<std::size_t>(i)];
      TestItem item;
      item.chat.system = kStageSystemText;
      item.chat.user = stage_user_text(bc, stage);
      item.chat.stage = task_of(stage);
      item.chat.case_id = bc.case_id;
      item.stage = stage;
      item.target = stage_target(bc, stage);
      item.source = bc;
      out.push_back(std::move(item));
    }
  }
  return out;
}

inline std::string chat_line(const ChatExample& ex) {
  nlohmann::json messages = nlohmann::json::array();
  messages.push_back({{"role", "system"}, {"content", ex.system}});
  messages.push_back({{"role", "user"}, {"content", ex.user}});
  if (!ex.assistant.empty()) {
    messages.push_back({{"role", "assistant"}, {"content", ex.assistant}});
  }
  return nlohmann::json{{"messages", std::move(messages)}}.dump();
}

inline std::string render_chat_jsonl(const std::vector<ChatExample>& examples) {
  std::string out;
  for (const ChatExample& ex : examples) {
    out += chat_line(ex);
    out += '\n';
  }
  return out;
}

inline void write_chat_jsonl(const std::vector<ChatExample>& examples,
                             const std::filesystem::path& path) {
  atomic_write_file(path, render_chat_jsonl(examples));
}

inline std::string render_answers_jsonl(const std::vector<TestItem>& items) {
  std::string out;
  for (const TestItem& item : items) {
    out += nlohmann::json{{"case_id", item.chat.case_id},
                          {"stage", to_string(item.stage)},
                          {"target", item.target}}
               .dump();
    out += '\n';
  }
  return out;
}

// Recomputes per-stage counts from the file itself; lines with a third
// message are training examples, two-message lines are test items. Stage
// identity comes from the pinned question strings.
inline DatasetManifest validate_chat_jsonl(const std::filesystem::path& path) {
  DatasetManifest manifest;
  std::istringstream in(read_text_file(path));
  std::string line;
  int line_no = 0;
  static const std::array<const char*, 3> kRoles = {"system", "user", "assistant"};
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      fail(Errc::malformed_line, "line " + std::to_string(line_no) + " is not valid JSON");
    }
    if (!j.is_object() || !j.contains("messages") || !j["messages"].is_array()) {
      fail(Errc::malformed_line, "line " + std::to_string(line_no) + " has no messages array");
    }
    const nlohmann::json& messages = j["messages"];
    if (messages.size() < 2 || messages.size() > 3) {
      fail(Errc::malformed_line, "line " + std::to_string(line_no) + " has " +
                                     std::to_string(messages.size()) + " messages");
    }
    std::string user_text;
    for (std::size_t m = 0; m < messages.size(); ++m) {
      const nlohmann::json& msg = messages[m];
      if (!msg.is_object() || !msg.contains("role") || !msg.contains("content")) {
        fail(Errc::malformed_line, "line " + std::to_string(line_no) + " message " +
                                       std::to_string(m) + " lacks role/content");
      }
      if (msg["role"].get<std::string>() != kRoles[m]) {
        fail(Errc::role_order_error, "line " + std::to_string(line_no) + ": expected role '" +
                                         kRoles[m] + "' at position " + std::to_string(m) +
                                         ", got '" + msg["role"].get<std::string>() + "'");
      }
      if (m == 1) user_text = msg["content"].get<std::string>();
    }
    const bool training = messages.size() == 3;
    StageCounts& counts = training ? manifest.training_counts : manifest.test_counts;
    if (user_text.find(kStage1Question) != std::string::npos) {
      ++counts.s1;
    } else if (user_text.find(kStage2Question) != std::string::npos) {
      ++counts.s2;
    } else if (user_text.find(kStage3Question) != std::string::npos) {
      ++counts.s3;
    } else if (user_text.find(kReportInstruction) != std::string::npos) {
      if (!training) {
        fail(Errc::malformed_line, "line " + std::to_string(line_no) + ": report item without target");
      }
      ++manifest.report_training_count;
    } else {
      fail(Errc::malformed_line, "line " + std::to_string(line_no) + ": unrecognized question");
    }
  }
  return manifest;
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  return {{"training_counts", {{"S1", m.training_counts.s1}, {"S2", m.training_counts.s2}, {"S3", m.training_counts.s3}}},
          {"report_training_count", m.report_training_count},
          {"test_counts", {{"S1", m.test_counts.s1}, {"S2", m.test_counts.s2}, {"S3", m.test_counts.s3}}},
          {"verdict_balance", {{"true_breakouts", m.true_breakouts}, {"false_breakouts", m.false_breakouts}}},
          {"seed", m.seed}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.training_counts = {j.at("training_counts").at("S1").get<std::int64_t>(),
                       j.at("training_counts").at("S2").get<std::int64_t>(),
                       j.at("training_counts").at("S3").get<std::int64_t>()};
  m.report_training_count = j.at("report_training_count").get<std::int64_t>();
  m.test_counts = {j.at("test_counts").at("S1").get<std::int64_t>(),
                   j.at("test_counts").at("S2").get<std::int64_t>(),
                   j.at("test_counts").at("S3").get<std::int64_t>()};
  m.true_breakouts = j.at("verdict_balance").at("true_breakouts").get<std::int64_t>();
  m.false_breakouts = j.at("verdict_balance").at("false_breakouts").get<std::int64_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

}  // namespace rangebreak
