#pragma once

#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rangebreak/dataset.hpp"
#include "rangebreak/oracle.hpp"

namespace rangebreak {

// S2 answers keep the numeric value even when it misses the tick grid, so
// value-based stability can still be measured; only on-grid equality scores
// as correct.
struct PriceAnswer {
  double value = 0.0;
  std::optional<Price> exact;  // set when representable at tick precision
  bool off_grid = true;

  auto operator<=>(const PriceAnswer&) const = default;
};

struct StageAnswer {
  StageId stage = StageId::S1;
  std::variant<Direction, PriceAnswer, Side> payload;
  std::string raw_text;

  auto operator<=>(const StageAnswer&) const = default;
};

struct SolverConfig {
  enum class Kind { Oracle, Scripted, Remote };
  Kind kind = Kind::Oracle;
  std::string endpoint;       // Remote only
  std::string model_name;     // Remote only
  double temperature = 0.0;
  int timeout_ms = 30000;
  int max_retries = 3;
  int backoff_base_ms = 250;  // doubles per retry
  int max_inflight = 4;
  std::string api_key_env;    // environment variable holding the key; never a file
  std::string fixtures_path;  // Scripted only
};

inline void validate_solver_config(const SolverConfig& config) {
  if (config.kind == SolverConfig::Kind::Remote) {
    if (config.endpoint.empty()) fail(Errc::bad_solver_config, "remote solver requires an endpoint");
    if (config.model_name.empty()) fail(Errc::bad_solver_config, "remote solver requires a model name");
  }
  if (config.kind == SolverConfig::Kind::Scripted && config.fixtures_path.empty()) {
    fail(Errc::bad_solver_config, "scripted solver requires a fixtures path");
  }
  if (config.max_retries < 0) fail(Errc::bad_solver_config, "max_retries must be >= 0");
  if (config.max_inflight < 1) fail(Errc::bad_solver_config, "max_inflight must be >= 1");
}

namespace detail {

// Lowercases and splits into tokens; hyphens join words so "buy-side" stays
// one token, and decimal points survive inside numbers.
inline std::vector<std::string> response_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&]() {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-') {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (c == '.' && i + 1 < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[i + 1])) && !current.empty() &&
               std::isdigit(static_cast<unsigned char>(current.back()))) {
      current += '.';
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

inline int count_tokens(const std::vector<std::string>& tokens, const std::set<std::string>& words) {
  int n = 0;
  for (const std::string& t : tokens) {
    if (words.count(t)) ++n;
  }
  return n;
}

inline bool is_number_token(const std::string& token) {
  bool digit = false;
  bool dot = false;
  for (char c : token) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      return false;
    }
  }
  return digit;
}

inline PriceAnswer price_answer_from_token(const std::string& token, const TickSize& ts) {
  PriceAnswer answer;
  answer.value = std::strtod(token.c_str(), nullptr);
  try {
    Price p = parse_price(token, ts);
    answer.exact = p;
    answer.off_grid = !on_grid(p, ts);
  } catch (const Error&) {
    answer.exact.reset();
    answer.off_grid = true;  // finer precision than the grid can represent
  }
  return answer;
}

}  // namespace detail

// Free-text answers are scored by keyword majority: the side named more
// often wins, and a tie (or no keyword at all) is unparseable rather than a
// guess.
inline StageAnswer parse_stage_response(StageId stage, const std::string& text, const TickSize& ts) {
  static const std::set<std::string> kUpWords = {"up", "upward", "upwards"};
  static const std::set<std::string> kDownWords = {"down", "downward", "downwards"};
  static const std::set<std::string> kBuyerWords = {"buyer", "buyers", "buy-side", "buying"};
  static const std::set<std::string> kSellerWords = {"seller", "sellers", "sell-side", "selling"};
  static const std::set<std::string> kBalancedWords = {"balanced", "tie", "tied"};

  StageAnswer answer;
  answer.stage = stage;
  answer.raw_text = text;
  std::vector<std::string> tokens = detail::response_tokens(text);
  switch (stage) {
    case StageId::S1: {
      int up = detail::count_tokens(tokens, kUpWords);
      int down = detail::count_tokens(tokens, kDownWords);
      if (up == down) {
        fail(Errc::unparseable_response,
             up == 0 ? "no direction keyword in: " + text : "both direction keywords in: " + text);
      }
      answer.payload = up > down ? Direction::Up : Direction::Down;
      return answer;
    }
    case StageId::S2: {
      const std::string* last = nullptr;
      for (const std::string& t : tokens) {
        if (detail::is_number_token(t)) last = &t;
      }
      if (last == nullptr) fail(Errc::unparseable_response, "no numeric value in: " + text);
      answer.payload = detail::price_answer_from_token(*last, ts);
      return answer;
    }
    case StageId::S3: {
      int buyers = detail::count_tokens(tokens, kBuyerWords);
      int sellers = detail::count_tokens(tokens, kSellerWords);
      int balanced = detail::count_tokens(tokens, kBalancedWords);
      int best = std::max({buyers, sellers, balanced});
      if (best == 0) fail(Errc::unparseable_response, "no side keyword in: " + text);
      int winners = (buyers == best) + (sellers == best) + (balanced == best);
      if (winners > 1) fail(Errc::unparseable_response, "ambiguous side keywords in: " + text);
      answer.payload = buyers == best ? Side::Buyers : sellers == best ? Side::Sellers : Side::Balanced;
      return answer;
    }
  }
  fail(Errc::unparseable_response, "unknown stage");
}

// The last occurrence of either verdict phrase wins; the report template
// states the verdict in its final sentence.
inline Verdict parse_report_response(const std::string& text) {
  std::string lower;
  lower.reserve(text.size());
  for (char c : text) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::size_t true_pos = lower.rfind("true breakout");
  std::size_t false_pos = lower.rfind("false breakout");
  if (true_pos == std::string::npos && false_pos == std::string::npos) {
    fail(Errc::unparseable_response, "no verdict phrase in: " + text);
  }
  if (true_pos == std::string::npos) return Verdict::FalseBreakout;
  if (false_pos == std::string::npos) return Verdict::TrueBreakout;
  return true_pos > false_pos ? Verdict::TrueBreakout : Verdict::FalseBreakout;
}

// One stage question headed to a solver; `source` carries the underlying
// case so the oracle backend can recompute instead of reading the prompt.
struct StageTask {
  const BreakoutCase* source = nullptr;
  StageId stage = StageId::S1;
  std::string system;
  std::string user;
  std::string case_id;
  int repeat = 0;
  TickSize tick_size;
};

struct StageOutcome {
  std::optional<StageAnswer> answer;
  std::string failure;  // nonempty iff answer is absent

  bool ok() const { return answer.has_value(); }
};

struct ReportOutcome {
  std::optional<DetectionReport> report;
  std::string failure;

  bool ok() const { return report.has_value(); }
};

class Solver {
 public:
  virtual ~Solver() = default;
  virtual StageOutcome solve_stage(const StageTask& task) = 0;
  virtual ReportOutcome solve_report(const StageAnswers& answers, const TickSize& ts,
                                     const std::string& case_id, int repeat) = 0;
};

inline StageAnswer oracle_stage_answer(const BreakoutCase& bc, StageId stage) {
  StageAnswers answers = run_pipeline(bc);
  StageAnswer out;
  out.stage = stage;
  switch (stage) {
    case StageId::S1:
      out.payload = answers.direction;
      out.raw_text = render_stage1_answer(answers.direction);
      break;
    case StageId::S2: {
      PriceAnswer pa;
      pa.exact = answers.resistance;
      pa.off_grid = false;
      pa.value = price_to_double(answers.resistance, bc.tick_size);
      out.payload = pa;
      out.raw_text = render_stage2_answer(answers.resistance, bc.tick_size);
      break;
    }
    case StageId::S3:
      out.payload = answers.force.dominant_side;
      out.raw_text = render_stage3_answer(answers.force);
      break;
  }
  return out;
}

class OracleSolver : public Solver {
 public:
  StageOutcome solve_stage(const StageTask& task) override {
    if (task.source == nullptr) return {std::nullopt, "oracle solver needs the source case"};
    try {
      return {oracle_stage_answer(*task.source, task.stage), ""};
    } catch (const Error& e) {
      return {std::nullopt, e.what()};
    }
  }

  ReportOutcome solve_report(const StageAnswers& answers, const TickSize& ts, const std::string&,
                             int) override {
    return {generate_report(answers, ts), ""};
  }
};

// Replays canned response text keyed by (case_id, stage, repeat). The stage
// key for report fixtures is the literal "report".
class ScriptedSolver : public Solver {
 public:
  using FixtureKey = std::tuple<std::string, std::string, int>;

  explicit ScriptedSolver(std::map<FixtureKey, std::string> fixtures)
      : fixtures_(std::move(fixtures)) {}

  static ScriptedSolver from_jsonl(const std::string& jsonl_text) {
    std::map<FixtureKey, std::string> fixtures;
    std::istringstream in(jsonl_text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        fail(Errc::malformed_line, "fixture line " + std::to_string(line_no) + " is not valid JSON");
      }
      if (!j.contains("case_id") || !j.contains("stage") || !j.contains("repeat") ||
          !j.contains("text")) {
        fail(Errc::malformed_line,
             "fixture line " + std::to_string(line_no) + " needs case_id/stage/repeat/text");
      }
      fixtures[{j["case_id"].get<std::string>(), j["stage"].get<std::string>(),
                j["repeat"].get<int>()}] = j["text"].get<std::string>();
    }
    return ScriptedSolver(std::move(fixtures));
  }

  static ScriptedSolver from_file(const std::filesystem::path& path) {
    return from_jsonl(read_text_file(path));
  }

  StageOutcome solve_stage(const StageTask& task) override {
    auto it = fixtures_.find({task.case_id, to_string(task.stage), task.repeat});
    if (it == fixtures_.end()) {
      return {std::nullopt, std::string(errc_name(Errc::fixture_missing)) + ": (" + task.case_id +
                                ", " + to_string(task.stage) + ", " + std::to_string(task.repeat) +
                                ")"};
    }
    try {
      return {parse_stage_response(task.stage, it->second, task.tick_size), ""};
    } catch (const Error& e) {
      return {std::nullopt, e.what()};
    }
  }

  ReportOutcome solve_report(const StageAnswers&, const TickSize&, const std::string& case_id,
                             int repeat) override {
    auto it = fixtures_.find({case_id, "report", repeat});
    if (it == fixtures_.end()) {
      return {std::nullopt, std::string(errc_name(Errc::fixture_missing)) + ": (" + case_id +
                                ", report, " + std::to_string(repeat) + ")"};
    }
    try {
      DetectionReport report;
      report.answer = parse_report_response(it->second);
      std::istringstream lines(it->second);
      std::string sentence;
      while (std::getline(lines, sentence)) report.rationale.push_back(sentence);
      return {report, ""};
    } catch (const Error& e) {
      return {std::nullopt, e.what()};
    }
  }

 private:
  std::map<FixtureKey, std::string> fixtures_;
};

}  // namespace rangebreak
