#include "rangebreak/eval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "rangebreak/synth.hpp"
#include "support.hpp"

namespace rb = rangebreak;
using rbtest::expect_errc;

namespace {

std::string log_line(const std::string& case_id, const char* stage, int repeat,
                     const std::string& target, std::optional<std::string> response,
                     std::optional<std::string> failure = std::nullopt) {
  nlohmann::json j = {{"case_id", case_id},
                      {"stage", stage},
                      {"repeat", repeat},
                      {"tick_size", "0.25"},
                      {"target", target}};
  if (response) j["response"] = *response;
  if (failure) j["failure"] = *failure;
  return j.dump() + "\n";
}

// 40 cases x 3 stages x 10 repeats where stage correctness is decided by
// independent bits of the case index: each stage scores exactly 50% on every
// repeat, and all three bits line up for 5 of 40 cases. For such independent
// stages the multiplicative estimate and the empirical count must agree.
rb::TrialLog independent_bits_log() {
  std::string text;
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 40; ++c) {
      char id[8];
      std::snprintf(id, sizeof(id), "c%02d", c);
      bool s1 = (c % 2) == 1;
      bool s2 = ((c / 2) % 2) == 1;
      bool s3 = ((c / 4) % 2) == 1;
      text += log_line(id, "S1", r, "Up", s1 ? "Up" : "Down");
      text += log_line(id, "S2", r, "4001.00", s2 ? "4001.00" : "4000.00");
      text += log_line(id, "S3", r, "Buyers", s3 ? "Buyers" : "Sellers");
    }
  }
  return rb::parse_trial_log(text);
}

}  // namespace

TEST(RunProtocol, OracleAnswersEveryTrial) {
  std::vector<rb::BreakoutCase> pool = rbtest::synth_pool(4, 51);
  std::vector<rb::TestItem> testset = rb::build_test_set(pool, 4);
  rb::OracleSolver solver;
  rb::TrialLog log = rb::run_protocol(solver, testset, 2);
  EXPECT_EQ(log.entries.size(), 24u);
  EXPECT_EQ(log.repeats, 2);
  EXPECT_EQ(log.samples_per_stage, 4);
  for (const rb::TrialEntry& e : log.entries) {
    EXPECT_TRUE(e.answer.has_value());
    EXPECT_TRUE(e.failure.empty());
    EXPECT_TRUE(rb::entry_correct(e));
  }
}

TEST(RunProtocol, RejectsBadShapes) {
  std::vector<rb::BreakoutCase> pool = rbtest::synth_pool(2, 52);
  std::vector<rb::TestItem> testset = rb::build_test_set(pool, 2);
  rb::OracleSolver solver;
  expect_errc(rb::Errc::unsupported_repeat_count, [&] { rb::run_protocol(solver, testset, 0); });
  testset.pop_back();  // unbalance the stages
  expect_errc(rb::Errc::incomplete_log, [&] { rb::run_protocol(solver, testset, 1); });
}

TEST(RunProtocol, SolverFailuresKeepTheirDenominator) {
  std::vector<rb::BreakoutCase> pool = rbtest::synth_pool(2, 53);
  std::vector<rb::TestItem> testset = rb::build_test_set(pool, 2);
  // Script every fixture except one case's S1 answer.
  std::string jsonl;
  for (const rb::TestItem& item : testset) {
    if (item.stage == rb::StageId::S1 && item.chat.case_id == pool[1].case_id) continue;
    jsonl += nlohmann::json{{"case_id", item.chat.case_id},
                            {"stage", rb::to_string(item.stage)},
                            {"repeat", 0},
                            {"text", item.target}}
                 .dump() +
             "\n";
  }
  rb::ScriptedSolver solver = rb::ScriptedSolver::from_jsonl(jsonl);
  rb::TrialLog log = rb::run_protocol(solver, testset, 1);
  ASSERT_EQ(log.entries.size(), 6u);

  int failed = 0;
  for (const rb::TrialEntry& e : log.entries) {
    if (!e.failure.empty()) ++failed;
  }
  EXPECT_EQ(failed, 1);

  rb::AccuracyStats s1 = rb::stage_accuracy(log, rb::StageId::S1);
  EXPECT_DOUBLE_EQ(s1.mean, 50.0);
  EXPECT_DOUBLE_EQ(rb::stage_accuracy(log, rb::StageId::S2).mean, 100.0);
  EXPECT_DOUBLE_EQ(rb::perfection_rate_empirical(log), 50.0);
}

TEST(StageAccuracy, PerRepeatMeanAndPopulationStddev) {
  // Repeat 0 flawless, repeat 1 all wrong: 50.00 +/- 50.00.
  std::string text;
  text += log_line("a", "S1", 0, "Up", "Up");
  text += log_line("b", "S1", 0, "Up", "Up");
  text += log_line("a", "S1", 1, "Up", "Down");
  text += log_line("b", "S1", 1, "Up", "Down");
  rb::TrialLog log = rb::parse_trial_log(text);
  rb::AccuracyStats stats = rb::stage_accuracy(log, rb::StageId::S1);
  EXPECT_DOUBLE_EQ(stats.mean, 50.0);
  EXPECT_DOUBLE_EQ(stats.std, 50.0);
}

TEST(StageAccuracy, MissingEntriesAreAnError) {
  std::string text;
  text += log_line("a", "S1", 0, "Up", "Up");
  text += log_line("b", "S1", 0, "Up", "Up");
  text += log_line("a", "S1", 1, "Up", "Up");
  rb::TrialLog log = rb::parse_trial_log(text);
  expect_errc(rb::Errc::incomplete_log, [&] { rb::stage_accuracy(log, rb::StageId::S1); });
}

TEST(FrozenArithmetic, RoundedAggregatesMatchHandComputation) {
  EXPECT_DOUBLE_EQ(rb::average_accuracy(95.0, 89.40, 70.0), 84.80);
  EXPECT_DOUBLE_EQ(rb::perfection_rate_formula(95.0, 89.40, 70.0), 59.45);
  EXPECT_DOUBLE_EQ(rb::perfection_rate_formula(50.25, 10.50, 41.50), 2.19);
  EXPECT_DOUBLE_EQ(rb::average_accuracy(61.50, 13.50, 52.25), 42.42);
  EXPECT_DOUBLE_EQ(rb::perfection_rate_formula(61.50, 13.50, 52.25), 4.34);
  EXPECT_DOUBLE_EQ(rb::average_accuracy(96.00, 69.50, 59.75), 75.08);
  EXPECT_DOUBLE_EQ(rb::perfection_rate_formula(96.00, 69.50, 59.75), 39.87);
  // Recomputing the average from the published per-stage numbers gives
  // 34.08, not the printed 34.83; the recomputed value is the contract here.
  EXPECT_DOUBLE_EQ(rb::average_accuracy(50.25, 10.50, 41.50), 34.08);
  EXPECT_DOUBLE_EQ(rb::average_accuracy(75.5, 23.25, 60.50), 53.08);
}

TEST(RenderPercent, AlwaysTwoDecimals) {
  EXPECT_EQ(rb::render_percent(0.0), "0.00");
  EXPECT_EQ(rb::render_percent(100.0), "100.00");
  EXPECT_EQ(rb::render_percent(59.45), "59.45");
  EXPECT_EQ(rb::render_percent(2.19), "2.19");
  EXPECT_EQ(rb::render_percent(84.8), "84.80");
  EXPECT_DOUBLE_EQ(rb::round_percent(12.5), 12.50);
}

TEST(PerfectionRate, EmpiricalMatchesFormulaWhenStagesAreIndependent) {
  rb::TrialLog log = independent_bits_log();
  EXPECT_EQ(log.entries.size(), 1200u);
  EXPECT_EQ(log.samples_per_stage, 40);
  EXPECT_EQ(log.repeats, 10);

  EXPECT_DOUBLE_EQ(rb::perfection_rate_empirical(log), 12.5);
  rb::EvalMetrics m = rb::compute_metrics(log);
  for (const rb::StageStats& s : m.per_stage) {
    EXPECT_DOUBLE_EQ(s.accuracy_mean, 50.0);
    EXPECT_DOUBLE_EQ(s.accuracy_std, 0.0);
  }
  EXPECT_DOUBLE_EQ(m.perfection_formula, 12.50);
  EXPECT_DOUBLE_EQ(m.perfection_empirical, 12.50);
  EXPECT_DOUBLE_EQ(m.average_accuracy, 50.0);
  // Every case answers each stage identically on all repeats.
  ASSERT_TRUE(m.consistency.has_value());
  for (const rb::ConsistencyBuckets& b : *m.consistency) {
    EXPECT_EQ(b.full, 40);
    EXPECT_EQ(b.total(), 40);
  }
}

TEST(PerfectionRate, MissingStageIsAnError) {
  std::string text;
  text += log_line("a", "S1", 0, "Up", "Up");
  text += log_line("a", "S2", 0, "4001.00", "4001.00");
  rb::TrialLog log = rb::parse_trial_log(text);
  expect_errc(rb::Errc::incomplete_log, [&] { rb::perfection_rate_empirical(log); });
}

TEST(S2ValueStddev, HandComputedSpreads) {
  // Four repeats split between two adjacent integers: pstd is exactly 0.5.
  std::string text;
  for (int r = 0; r < 4; ++r) {
    const char* v = r < 2 ? "4001.00" : "4002.00";
    text += log_line("a", "S2", r, "4001.00", v);
  }
  EXPECT_NEAR(rb::s2_value_stddev(rb::parse_trial_log(text)), 0.5, 1e-9);

  // Two-point pool: pstd is half the gap.
  std::string two;
  two += log_line("a", "S2", 0, "4001.00", "4001.00");
  two += log_line("a", "S2", 1, "4001.00", "4000.50");
  EXPECT_NEAR(rb::s2_value_stddev(rb::parse_trial_log(two)), 0.25, 1e-9);

  // Mean over cases: a constant case pulls the average down.
  std::string mixed = two;
  mixed += log_line("b", "S2", 0, "4001.00", "4001.00");
  mixed += log_line("b", "S2", 1, "4001.00", "4001.00");
  EXPECT_NEAR(rb::s2_value_stddev(rb::parse_trial_log(mixed)), 0.125, 1e-9);
}

TEST(S2ValueStddev, FailuresLeaveTheValuePool) {
  std::string text;
  text += log_line("a", "S2", 0, "4001.00", "4001.00");
  text += log_line("a", "S2", 1, "4001.00", "4001.00");
  text += log_line("a", "S2", 2, "4001.00", std::nullopt, "transport error: boom");
  EXPECT_NEAR(rb::s2_value_stddev(rb::parse_trial_log(text)), 0.0, 1e-12);

  std::string none;
  none += log_line("a", "S2", 0, "4001.00", std::nullopt, "transport error: boom");
  rb::TrialLog log = rb::parse_trial_log(none);
  expect_errc(rb::Errc::no_numeric_values, [&] { rb::s2_value_stddev(log); });
}

TEST(S2ValueStddev, ConstantAnswersAreZeroUnderBothConventions) {
  std::string text;
  for (int r = 0; r < 10; ++r) text += log_line("a", "S2", r, "4001.00", "4001.00");
  rb::TrialLog log = rb::parse_trial_log(text);
  EXPECT_DOUBLE_EQ(rb::s2_value_stddev(log), 0.0);
  EXPECT_DOUBLE_EQ(rb::stage_stability_stddev(log, rb::StageId::S2), 0.0);
}

TEST(Consistency, ModalCountsMapToBuckets) {
  // Seven cases with modal answer counts 10, 9, 8, 7, 6, 5, 3.
  std::string text;
  const char* values[4] = {"4000.00", "4000.25", "4000.50", "4000.75"};
  auto add_case = [&](const std::string& id, std::vector<int> split) {
    int repeat = 0;
    for (std::size_t v = 0; v < split.size(); ++v) {
      for (int i = 0; i < split[v]; ++i) {
        text += log_line(id, "S2", repeat++, "4001.00", values[v]);
      }
    }
    ASSERT_EQ(repeat, 10);
  };
  add_case("k0", {10});
  add_case("k1", {9, 1});
  add_case("k2", {8, 2});
  add_case("k3", {7, 3});
  add_case("k4", {6, 4});
  add_case("k5", {5, 5});
  add_case("k6", {3, 3, 2, 2});
  rb::TrialLog log = rb::parse_trial_log(text);
  rb::ConsistencyBuckets buckets = rb::consistency_distribution(log, rb::StageId::S2);
  EXPECT_EQ(buckets.full, 1);
  EXPECT_EQ(buckets.eighty, 2);
  EXPECT_EQ(buckets.sixty, 2);
  EXPECT_EQ(buckets.below, 2);
  EXPECT_EQ(buckets.total(), 7);
}

TEST(Consistency, StabilityIsNotAccuracy) {
  // Ten identical wrong answers still land in the full bucket.
  std::string text;
  for (int r = 0; r < 10; ++r) text += log_line("a", "S1", r, "Up", "Down");
  rb::ConsistencyBuckets buckets =
      rb::consistency_distribution(rb::parse_trial_log(text), rb::StageId::S1);
  EXPECT_EQ(buckets.full, 1);
}

TEST(Consistency, FailuresNeverJoinAMode) {
  std::string text;
  for (int r = 0; r < 10; ++r) {
    if (r < 4) {
      text += log_line("a", "S1", r, "Up", "Up");
    } else {
      text += log_line("a", "S1", r, "Up", std::nullopt, "transport error: boom");
    }
  }
  rb::ConsistencyBuckets buckets =
      rb::consistency_distribution(rb::parse_trial_log(text), rb::StageId::S1);
  EXPECT_EQ(buckets.below, 1);
  EXPECT_EQ(buckets.total(), 1);
}

TEST(Consistency, RequiresExactlyTenRepeats) {
  std::string text;
  text += log_line("a", "S1", 0, "Up", "Up");
  rb::TrialLog log = rb::parse_trial_log(text);
  expect_errc(rb::Errc::unsupported_repeat_count,
              [&] { rb::consistency_distribution(log, rb::StageId::S1); });

  std::string uneven;
  for (int r = 0; r < 10; ++r) uneven += log_line("a", "S1", r, "Up", "Up");
  for (int r = 0; r < 9; ++r) uneven += log_line("b", "S1", r, "Up", "Up");
  uneven += log_line("b", "S2", 9, "4001.00", "4001.00");  // keeps repeat count at 10
  rb::TrialLog bad = rb::parse_trial_log(uneven);
  expect_errc(rb::Errc::incomplete_log,
              [&] { rb::consistency_distribution(bad, rb::StageId::S1); });
}

TEST(Metrics, OracleRunIsPerfectEverywhere) {
  std::vector<rb::BreakoutCase> pool = rbtest::synth_pool(4, 54);
  std::vector<rb::TestItem> testset = rb::build_test_set(pool, 4);
  rb::OracleSolver solver;
  rb::TrialLog log = rb::run_protocol(solver, testset, 10);
  rb::EvalMetrics m = rb::compute_metrics(log);
  for (const rb::StageStats& s : m.per_stage) {
    EXPECT_DOUBLE_EQ(s.accuracy_mean, 100.0);
    EXPECT_DOUBLE_EQ(s.accuracy_std, 0.0);
    EXPECT_DOUBLE_EQ(s.stability_std, 0.0);
  }
  EXPECT_DOUBLE_EQ(m.average_accuracy, 100.0);
  EXPECT_DOUBLE_EQ(m.perfection_formula, 100.0);
  EXPECT_DOUBLE_EQ(m.perfection_empirical, 100.0);
  ASSERT_TRUE(m.consistency.has_value());
  for (const rb::ConsistencyBuckets& b : *m.consistency) {
    EXPECT_EQ(b.full, 4);
    EXPECT_EQ(b.total(), 4);
  }

  std::string table = rb::emit_metrics_table(m);
  EXPECT_NE(table.find("stage | accuracy | stability stddev\n"), std::string::npos);
  EXPECT_NE(table.find("S1 | 100.00 +/- 0.00 | 0.00\n"), std::string::npos);
  EXPECT_NE(table.find("average accuracy | 100.00\n"), std::string::npos);
  EXPECT_NE(table.find("perfection rate (formula) | 100.00\n"), std::string::npos);
  EXPECT_NE(table.find("perfection rate (empirical) | 100.00\n"), std::string::npos);
  EXPECT_NE(table.find("s2 value stddev | 0.00\n"), std::string::npos);
  EXPECT_NE(table.find("consistency S1 | full 4 | eighty 0 | sixty 0 | below 0\n"),
            std::string::npos);
}

TEST(Metrics, NonTenRepeatRunsRefuseConsistencyButKeepTheRest) {
  std::vector<rb::BreakoutCase> pool = rbtest::synth_pool(2, 55);
  std::vector<rb::TestItem> testset = rb::build_test_set(pool, 2);
  rb::OracleSolver solver;
  rb::EvalMetrics m = rb::compute_metrics(rb::run_protocol(solver, testset, 1));
  EXPECT_FALSE(m.consistency.has_value());
  EXPECT_DOUBLE_EQ(m.average_accuracy, 100.0);
  std::string table = rb::emit_metrics_table(m);
  EXPECT_NE(table.find("consistency | unsupported repeat count "
                       "(buckets require 10 repeats, log has 1)\n"),
            std::string::npos);
  EXPECT_TRUE(rb::metrics_to_json(m)["consistency"].is_null());
}

TEST(Metrics, JsonRoundTripWithAndWithoutConsistency) {
  rb::TrialLog log = independent_bits_log();
  rb::EvalMetrics with = rb::compute_metrics(log);
  EXPECT_EQ(rb::metrics_from_json(rb::metrics_to_json(with)), with);

  std::vector<rb::BreakoutCase> pool = rbtest::synth_pool(2, 56);
  rb::OracleSolver solver;
  rb::EvalMetrics without =
      rb::compute_metrics(rb::run_protocol(solver, rb::build_test_set(pool, 2), 3));
  EXPECT_FALSE(without.consistency.has_value());
  EXPECT_EQ(rb::metrics_from_json(rb::metrics_to_json(without)), without);
}

TEST(TrialLogFile, ReplayReproducesTheMetricsExactly) {
  std::vector<rb::BreakoutCase> pool = rbtest::synth_pool(3, 57);
  std::vector<rb::TestItem> testset = rb::build_test_set(pool, 3);
  // A scripted solver with one wrong answer and one missing fixture makes the
  // replay nontrivial.
  std::string jsonl;
  for (const rb::TestItem& item : testset) {
    for (int r = 0; r < 2; ++r) {
      if (item.stage == rb::StageId::S1 && item.chat.case_id == pool[0].case_id && r == 1) {
        continue;  // fixture_missing at replay time too
      }
      std::string text = item.target;
      if (item.stage == rb::StageId::S3 && item.chat.case_id == pool[1].case_id) {
        text = "impossible to tell";  // unparseable on both sides of the round trip
      }
      jsonl += nlohmann::json{{"case_id", item.chat.case_id},
                              {"stage", rb::to_string(item.stage)},
                              {"repeat", r},
                              {"text", text}}
                   .dump() +
               "\n";
    }
  }
  rb::ScriptedSolver solver = rb::ScriptedSolver::from_jsonl(jsonl);
  rb::TrialLog log = rb::run_protocol(solver, testset, 2);
  rb::EvalMetrics original = rb::compute_metrics(log);

  rb::TrialLog replayed = rb::parse_trial_log(rb::render_trial_log(log));
  EXPECT_EQ(replayed.entries.size(), log.entries.size());
  EXPECT_EQ(replayed.repeats, log.repeats);
  EXPECT_EQ(replayed.samples_per_stage, log.samples_per_stage);
  EXPECT_EQ(rb::compute_metrics(replayed), original);
}

TEST(TrialLogFile, RoundTripsThroughDisk) {
  std::vector<rb::BreakoutCase> pool = rbtest::synth_pool(2, 58);
  rb::OracleSolver solver;
  rb::TrialLog log = rb::run_protocol(solver, rb::build_test_set(pool, 2), 2);
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "rangebreak-eval-test";
  std::filesystem::create_directories(dir);
  std::filesystem::path path = dir / "trial_log.jsonl";
  rb::write_trial_log(log, path);
  rb::TrialLog back = rb::read_trial_log(path);
  EXPECT_EQ(rb::compute_metrics(back), rb::compute_metrics(log));
}

TEST(TrialLogFile, ParserRejectsBrokenLines) {
  expect_errc(rb::Errc::malformed_line, [] { rb::parse_trial_log("{oops\n"); });
  expect_errc(rb::Errc::malformed_line,
              [] { rb::parse_trial_log(nlohmann::json{{"case_id", "a"}}.dump() + "\n"); });
  // Neither response nor failure says nothing about the trial.
  nlohmann::json bare = {{"case_id", "a"},
                         {"stage", "S1"},
                         {"repeat", 0},
                         {"tick_size", "0.25"},
                         {"target", "Up"}};
  expect_errc(rb::Errc::malformed_line, [&] { rb::parse_trial_log(bare.dump() + "\n"); });
  // Duplicate (case, stage, repeat) keys poison per-repeat accounting.
  std::string dup = log_line("a", "S1", 0, "Up", "Up") + log_line("a", "S1", 0, "Up", "Up");
  expect_errc(rb::Errc::duplicate_trial, [&] { rb::parse_trial_log(dup); });
}

TEST(TrialLogFile, UnparseableResponsesBecomeScoredFailures) {
  std::string text = log_line("a", "S1", 0, "Up", "hmm, unclear");
  rb::TrialLog log = rb::parse_trial_log(text);
  ASSERT_EQ(log.entries.size(), 1u);
  EXPECT_FALSE(log.entries[0].answer.has_value());
  EXPECT_FALSE(log.entries[0].failure.empty());
  EXPECT_FALSE(rb::entry_correct(log.entries[0]));
  EXPECT_DOUBLE_EQ(rb::stage_accuracy(log, rb::StageId::S1).mean, 0.0);
}
