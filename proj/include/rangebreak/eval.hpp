#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rangebreak/dataset.hpp"
#include "rangebreak/solver.hpp"

namespace rangebreak {

struct TrialEntry {
  std::string case_id;
  StageId stage = StageId::S1;
  int repeat = 0;
  TickSize tick_size;
  std::string target;                   // canonical oracle rendering
  std::optional<std::string> response;  // raw solver text when a reply existed
  std::string failure;                  // nonempty when no usable answer
  std::optional<StageAnswer> answer;    // parsed response; absent on failure
};

struct TrialLog {
  std::vector<TrialEntry> entries;
  int repeats = 0;
  int samples_per_stage = 0;
};

namespace detail {

inline void check_no_duplicate(const TrialLog& log) {
  std::set<std::tuple<std::string, StageId, int>> seen;
  for (const TrialEntry& e : log.entries) {
    if (!seen.insert({e.case_id, e.stage, e.repeat}).second) {
      fail(Errc::duplicate_trial, e.case_id + "/" + to_string(e.stage) + "/" +
                                      std::to_string(e.repeat));
    }
  }
}

}  // namespace detail

// Scoring compares the parsed answer against the parsed canonical target:
// S1 by direction, S2 by exact on-grid price, S3 by side.
inline bool answers_match(const StageAnswer& answer, const StageAnswer& target) {
  if (answer.stage != target.stage) return false;
  switch (answer.stage) {
    case StageId::S1:
      return std::get<Direction>(answer.payload) == std::get<Direction>(target.payload);
    case StageId::S2: {
      const PriceAnswer& a = std::get<PriceAnswer>(answer.payload);
      const PriceAnswer& t = std::get<PriceAnswer>(target.payload);
      return a.exact && t.exact && !a.off_grid && !t.off_grid && *a.exact == *t.exact;
    }
    case StageId::S3:
      return std::get<Side>(answer.payload) == std::get<Side>(target.payload);
  }
  return false;
}

inline bool entry_correct(const TrialEntry& entry) {
  if (!entry.answer) return false;
  StageAnswer target = parse_stage_response(entry.stage, entry.target, entry.tick_size);
  return answers_match(*entry.answer, target);
}

// Runs every (item, repeat) trial. Solver failures become failed entries so
// denominators never shrink.
inline TrialLog run_protocol(Solver& solver, const std::vector<TestItem>& testset,
                             int repeats = 10) {
  if (repeats < 1) fail(Errc::unsupported_repeat_count, "repeats must be >= 1");
  std::array<int, 3> per_stage = {0, 0, 0};
  for (const TestItem& item : testset) per_stage[static_cast<int>(item.stage)]++;
  if (per_stage[0] != per_stage[1] || per_stage[1] != per_stage[2]) {
    fail(Errc::incomplete_log, "testset is not balanced across stages");
  }
  TrialLog log;
  log.repeats = repeats;
  log.samples_per_stage = per_stage[0];
  for (int repeat = 0; repeat < repeats; ++repeat) {
    for (const TestItem& item : testset) {
      StageTask task;
      task.source = &item.source;
      task.stage = item.stage;
      task.system = item.chat.system;
      task.user = item.chat.user;
      task.case_id = item.chat.case_id;
      task.repeat = repeat;
      task.tick_size = item.source.tick_size;
      StageOutcome outcome = solver.solve_stage(task);
      TrialEntry entry;
      entry.case_id = item.chat.case_id;
      entry.stage = item.stage;
      entry.repeat = repeat;
      entry.tick_size = item.source.tick_size;
      entry.target = item.target;
      if (outcome.ok()) {
        entry.answer = outcome.answer;
        entry.response = outcome.answer->raw_text;
      } else {
        entry.failure = outcome.failure;
      }
      log.entries.push_back(std::move(entry));
    }
  }
  detail::check_no_duplicate(log);
  return log;
}

struct AccuracyStats {
  double mean = 0.0;  // percent
  double std = 0.0;   // population stddev over per-repeat accuracies, percent
};

namespace detail {

inline double population_stddev(const std::vector<double>& values, double mean) {
  if (values.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

}  // namespace detail

// Per-repeat accuracy over the stage's samples; mean and population stddev
// across repeats, both in percent.
inline AccuracyStats stage_accuracy(const TrialLog& log, StageId stage) {
  std::vector<std::int64_t> correct(static_cast<std::size_t>(log.repeats), 0);
  std::vector<std::int64_t> total(static_cast<std::size_t>(log.repeats), 0);
  for (const TrialEntry& e : log.entries) {
    if (e.stage != stage) continue;
    if (e.repeat < 0 || e.repeat >= log.repeats) fail(Errc::incomplete_log, "repeat out of range");
    total[static_cast<std::size_t>(e.repeat)]++;
    if (entry_correct(e)) correct[static_cast<std::size_t>(e.repeat)]++;
  }
  std::vector<double> accuracies;
  for (int r = 0; r < log.repeats; ++r) {
    if (total[static_cast<std::size_t>(r)] != log.samples_per_stage) {
      fail(Errc::incomplete_log, std::string(to_string(stage)) + " repeat " + std::to_string(r) +
                                     " has " + std::to_string(total[static_cast<std::size_t>(r)]) +
                                     " entries, expected " + std::to_string(log.samples_per_stage));
    }
    accuracies.push_back(100.0 * static_cast<double>(correct[static_cast<std::size_t>(r)]) /
                         static_cast<double>(log.samples_per_stage));
  }
  AccuracyStats stats;
  for (double a : accuracies) stats.mean += a;
  stats.mean /= static_cast<double>(log.repeats);
  stats.std = detail::population_stddev(accuracies, stats.mean);
  return stats;
}

// Half-up rounding to 2 decimals; percent values are non-negative.
inline double round_percent(double value) {
  return static_cast<double>(std::llround(value * 100.0)) / 100.0;
}

inline std::string render_percent(double value) {
  std::int64_t cents = std::llround(value * 100.0);
  std::string out = std::to_string(cents / 100);
  std::int64_t rem = cents % 100;
  out += '.';
  out += static_cast<char>('0' + rem / 10);
  out += static_cast<char>('0' + rem % 10);
  return out;
}

inline double average_accuracy(double s1, double s2, double s3) {
  return round_percent((s1 + s2 + s3) / 3.0);
}

inline double perfection_rate_formula(double s1, double s2, double s3) {
  return round_percent((s1 / 100.0) * (s2 / 100.0) * (s3 / 100.0) * 100.0);
}

inline double perfection_rate_empirical(const TrialLog& log) {
  std::map<std::pair<std::string, int>, std::array<int, 3>> seen;  // -1 missing/0 wrong/1 right
  for (const TrialEntry& e : log.entries) {
    auto key = std::make_pair(e.case_id, e.repeat);
    if (!seen.count(key)) seen[key] = {-1, -1, -1};
    seen[key][static_cast<int>(e.stage)] = entry_correct(e) ? 1 : 0;
  }
  std::int64_t perfect = 0;
  for (const auto& [key, stages] : seen) {
    for (int s = 0; s < 3; ++s) {
      if (stages[static_cast<std::size_t>(s)] < 0) {
        fail(Errc::incomplete_log, key.first + " repeat " + std::to_string(key.second) +
                                       " is missing a stage answer");
      }
    }
    if (stages[0] == 1 && stages[1] == 1 && stages[2] == 1) ++perfect;
  }
  if (seen.empty() || static_cast<std::int64_t>(seen.size()) !=
                          static_cast<std::int64_t>(log.samples_per_stage) * log.repeats) {
    fail(Errc::incomplete_log, "expected " +
                                   std::to_string(static_cast<std::int64_t>(log.samples_per_stage) *
                                                  log.repeats) +
                                   " (case, repeat) pairs, have " + std::to_string(seen.size()));
  }
  return 100.0 * static_cast<double>(perfect) / static_cast<double>(seen.size());
}

// Per case: population stddev of the numeric S2 answers across repeats
// (failures drop out of the value pool); mean over cases that produced at
// least one numeric value.
inline double s2_value_stddev(const TrialLog& log) {
  std::map<std::string, std::vector<double>> values;
  for (const TrialEntry& e : log.entries) {
    if (e.stage != StageId::S2) continue;
    if (!values.count(e.case_id)) values[e.case_id] = {};
    if (e.answer) values[e.case_id].push_back(std::get<PriceAnswer>(e.answer->payload).value);
  }
  double sum = 0.0;
  std::int64_t cases = 0;
  for (const auto& [case_id, pool] : values) {
    if (pool.empty()) continue;
    double mean = 0.0;
    for (double v : pool) mean += v;
    mean /= static_cast<double>(pool.size());
    sum += detail::population_stddev(pool, mean);
    ++cases;
  }
  if (cases == 0) fail(Errc::no_numeric_values, "no parseable S2 values in the log");
  return sum / static_cast<double>(cases);
}

struct ConsistencyBuckets {
  int full = 0;
  int eighty = 0;
  int sixty = 0;
  int below = 0;

  auto operator<=>(const ConsistencyBuckets&) const = default;
  int total() const { return full + eighty + sixty + below; }
};

namespace detail {

// Canonical text for bucketing repeat outputs; failures never match anything.
inline std::optional<std::string> bucket_key(const TrialEntry& e) {
  if (!e.answer) return std::nullopt;
  switch (e.stage) {
    case StageId::S1: return std::string(to_string(std::get<Direction>(e.answer->payload)));
    case StageId::S2: {
      const PriceAnswer& pa = std::get<PriceAnswer>(e.answer->payload);
      if (pa.exact) return render_minor(pa.exact->minor, e.tick_size.decimals);
      std::ostringstream os;
      os.precision(12);
      os << pa.value;
      return os.str();
    }
    case StageId::S3: return std::string(to_string(std::get<Side>(e.answer->payload)));
  }
  return std::nullopt;
}

}  // namespace detail

// Buckets follow the 10-repeat stability protocol: a case lands in the
// bucket of its modal answer count (10 -> full, 8..9 -> eighty, 6..7 ->
// sixty, otherwise below). Failed repeats never count toward the mode.
inline ConsistencyBuckets consistency_distribution(const TrialLog& log, StageId stage) {
  if (log.repeats != 10) {
    fail(Errc::unsupported_repeat_count,
         "consistency buckets are defined for 10 repeats, log has " + std::to_string(log.repeats));
  }
  std::map<std::string, std::map<std::string, int>> counts;
  std::map<std::string, int> seen_repeats;
  for (const TrialEntry& e : log.entries) {
    if (e.stage != stage) continue;
    seen_repeats[e.case_id]++;
    if (auto key = detail::bucket_key(e)) counts[e.case_id][*key]++;
  }
  ConsistencyBuckets buckets;
  for (const auto& [case_id, repeats_seen] : seen_repeats) {
    if (repeats_seen != 10) {
      fail(Errc::incomplete_log, case_id + " has " + std::to_string(repeats_seen) + " repeats");
    }
    int modal = 0;
    if (auto it = counts.find(case_id); it != counts.end()) {
      for (const auto& [key, n] : it->second) modal = std::max(modal, n);
    }
    if (modal == 10) {
      ++buckets.full;
    } else if (modal >= 8) {
      ++buckets.eighty;
    } else if (modal >= 6) {
      ++buckets.sixty;
    } else {
      ++buckets.below;
    }
  }
  if (buckets.total() != log.samples_per_stage) {
    fail(Errc::incomplete_log, "bucketed " + std::to_string(buckets.total()) + " cases, expected " +
                                   std::to_string(log.samples_per_stage));
  }
  return buckets;
}

// Per-case 0/1 correctness stddev across repeats, averaged over cases; the
// categorical counterpart of the value-based S2 convention.
inline double stage_stability_stddev(const TrialLog& log, StageId stage) {
  std::map<std::string, std::vector<double>> outcomes;
  for (const TrialEntry& e : log.entries) {
    if (e.stage != stage) continue;
    outcomes[e.case_id].push_back(entry_correct(e) ? 1.0 : 0.0);
  }
  if (outcomes.empty()) fail(Errc::incomplete_log, "no entries for stage");
  double sum = 0.0;
  for (const auto& [case_id, pool] : outcomes) {
    double mean = 0.0;
    for (double v : pool) mean += v;
    mean /= static_cast<double>(pool.size());
    sum += detail::population_stddev(pool, mean);
  }
  return sum / static_cast<double>(outcomes.size());
}

struct StageStats {
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double stability_std = 0.0;

  auto operator<=>(const StageStats&) const = default;
};

struct EvalMetrics {
  std::array<StageStats, 3> per_stage;
  double average_accuracy = 0.0;
  double perfection_formula = 0.0;
  double perfection_empirical = 0.0;
  double s2_value_std = 0.0;
  std::optional<std::array<ConsistencyBuckets, 3>> consistency;  // only for 10 repeats
  int samples_per_stage = 0;
  int repeats = 0;

  auto operator<=>(const EvalMetrics&) const = default;
};

inline EvalMetrics compute_metrics(const TrialLog& log) {
  EvalMetrics m;
  m.samples_per_stage = log.samples_per_stage;
  m.repeats = log.repeats;
  double s2_std = round_percent(s2_value_stddev(log));
  for (StageId stage : kAllStages) {
    AccuracyStats stats = stage_accuracy(log, stage);
    StageStats& out = m.per_stage[static_cast<std::size_t>(stage)];
    out.accuracy_mean = round_percent(stats.mean);
    out.accuracy_std = round_percent(stats.std);
    out.stability_std = stage == StageId::S2 ? s2_std
                                             : round_percent(stage_stability_stddev(log, stage));
  }
  m.average_accuracy = average_accuracy(m.per_stage[0].accuracy_mean, m.per_stage[1].accuracy_mean,
                                        m.per_stage[2].accuracy_mean);
  m.perfection_formula = perfection_rate_formula(
      m.per_stage[0].accuracy_mean, m.per_stage[1].accuracy_mean, m.per_stage[2].accuracy_mean);
  m.perfection_empirical = round_percent(perfection_rate_empirical(log));
  m.s2_value_std = s2_std;
  if (log.repeats == 10) {
    m.consistency = std::array<ConsistencyBuckets, 3>{consistency_distribution(log, StageId::S1),
                                                      consistency_distribution(log, StageId::S2),
                                                      consistency_distribution(log, StageId::S3)};
  }
  return m;
}

inline std::string emit_metrics_table(const EvalMetrics& m) {
  std::string out;
  out += "stage | accuracy | stability stddev\n";
  for (StageId stage : kAllStages) {
    const StageStats& s = m.per_stage[static_cast<std::size_t>(stage)];
    out += std::string(to_string(stage)) + " | " + render_percent(s.accuracy_mean) + " +/- " +
           render_percent(s.accuracy_std) + " | " + render_percent(s.stability_std) + "\n";
  }
  out += "average accuracy | " + render_percent(m.average_accuracy) + "\n";
  out += "perfection rate (formula) | " + render_percent(m.perfection_formula) + "\n";
  out += "perfection rate (empirical) | " + render_percent(m.perfection_empirical) + "\n";
  out += "s2 value stddev | " + render_percent(m.s2_value_std) + "\n";
  if (m.consistency) {
    for (StageId stage : kAllStages) {
      const ConsistencyBuckets& b = (*m.consistency)[static_cast<std::size_t>(stage)];
      out += std::string("consistency ") + to_string(stage) + " | full " + std::to_string(b.full) +
             " | eighty " + std::to_string(b.eighty) + " | sixty " + std::to_string(b.sixty) +
             " | below " + std::to_string(b.below) + "\n";
    }
  } else {
    out += std::string("consistency | ") + errc_name(Errc::unsupported_repeat_count) +
           " (buckets require 10 repeats, log has " + std::to_string(m.repeats) + ")\n";
  }
  return out;
}

inline nlohmann::json metrics_to_json(const EvalMetrics& m) {
  nlohmann::json stages;
  for (StageId stage : kAllStages) {
    const StageStats& s = m.per_stage[static_cast<std::size_t>(stage)];
    stages[to_string(stage)] = {{"accuracy_mean", s.accuracy_mean},
                                {"accuracy_std", s.accuracy_std},
                                {"stability_std", s.stability_std}};
  }
  nlohmann::json j = {{"per_stage", std::move(stages)},
                      {"average_accuracy", m.average_accuracy},
                      {"perfection_formula", m.perfection_formula},
                      {"perfection_empirical", m.perfection_empirical},
                      {"s2_value_std", m.s2_value_std},
                      {"samples_per_stage", m.samples_per_stage},
                      {"repeats", m.repeats}};
  if (m.consistency) {
    nlohmann::json consistency;
    for (StageId stage : kAllStages) {
      const ConsistencyBuckets& b = (*m.consistency)[static_cast<std::size_t>(stage)];
      consistency[to_string(stage)] = {
          {"full", b.full}, {"eighty", b.eighty}, {"sixty", b.sixty}, {"below", b.below}};
    }
    j["consistency"] = std::move(consistency);
  } else {
    j["consistency"] = nullptr;
  }
  return j;
}

inline EvalMetrics metrics_from_json(const nlohmann::json& j) {
  EvalMetrics m;
  for (StageId stage : kAllStages) {
    const nlohmann::json& s = j.at("per_stage").at(to_string(stage));
    StageStats& out = m.per_stage[static_cast<std::size_t>(stage)];
    out.accuracy_mean = s.at("accuracy_mean").get<double>();
    out.accuracy_std = s.at("accuracy_std").get<double>();
    out.stability_std = s.at("stability_std").get<double>();
  }
  m.average_accuracy = j.at("average_accuracy").get<double>();
  m.perfection_formula = j.at("perfection_formula").get<double>();
  m.perfection_empirical = j.at("perfection_empirical").get<double>();
  m.s2_value_std = j.at("s2_value_std").get<double>();
  m.samples_per_stage = j.at("samples_per_stage").get<int>();
  m.repeats = j.at("repeats").get<int>();
  if (!j.at("consistency").is_null()) {
    std::array<ConsistencyBuckets, 3> consistency;
    for (StageId stage : kAllStages) {
      const nlohmann::json& b = j.at("consistency").at(to_string(stage));
      consistency[static_cast<std::size_t>(stage)] =
          ConsistencyBuckets{b.at("full").get<int>(), b.at("eighty").get<int>(),
                             b.at("sixty").get<int>(), b.at("below").get<int>()};
    }
    m.consistency = consistency;
  }
  return m;
}

// One JSON object per line; responses are kept verbatim so metrics can be
// recomputed from the file without solver calls.
inline std::string render_trial_log(const TrialLog& log) {
  std::string out;
  for (const TrialEntry& e : log.entries) {
    nlohmann::json j = {{"case_id", e.case_id},
                        {"stage", to_string(e.stage)},
                        {"repeat", e.repeat},
                        {"tick_size", render_tick_size(e.tick_size)},
                        {"target", e.target}};
    if (e.response) j["response"] = *e.response;
    if (!e.failure.empty()) j["failure"] = e.failure;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline TrialLog parse_trial_log(const std::string& text) {
  TrialLog log;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::set<std::string> case_ids_per_stage[3];
  int max_repeat = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      fail(Errc::malformed_line, "log line " + std::to_string(line_no) + " is not valid JSON");
    }
    TrialEntry e;
    try {
      e.case_id = j.at("case_id").get<std::string>();
      e.stage = stage_from_string(j.at("stage").get<std::string>());
      e.repeat = j.at("repeat").get<int>();
      e.tick_size = parse_tick_size(j.at("tick_size").get<std::string>());
      e.target = j.at("target").get<std::string>();
      if (j.contains("response")) e.response = j.at("response").get<std::string>();
      if (j.contains("failure")) e.failure = j.at("failure").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      fail(Errc::malformed_line, "log line " + std::to_string(line_no) + ": " + ex.what());
    }
    if (e.response) {
      try {
        e.answer = parse_stage_response(e.stage, *e.response, e.tick_size);
        e.failure.clear();
      } catch (const Error& ex) {
        e.answer.reset();
        if (e.failure.empty()) e.failure = ex.what();
      }
    } else if (e.failure.empty()) {
      fail(Errc::malformed_line,
           "log line " + std::to_string(line_no) + " has neither response nor failure");
    }
    case_ids_per_stage[static_cast<int>(e.stage)].insert(e.case_id);
    max_repeat = std::max(max_repeat, e.repeat);
    log.entries.push_back(std::move(e));
  }
  log.repeats = max_repeat + 1;
  std::size_t samples = 0;
  for (const auto& ids : case_ids_per_stage) samples = std::max(samples, ids.size());
  log.samples_per_stage = static_cast<int>(samples);
  detail::check_no_duplicate(log);
  return log;
}

inline void write_trial_log(const TrialLog& log, const std::filesystem::path& path) {
  atomic_write_file(path, render_trial_log(log));
}

inline TrialLog read_trial_log(const std::filesystem::path& path) {
  return parse_trial_log(read_text_file(path));
}

}  // namespace rangebreak
