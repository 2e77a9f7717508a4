// Command-line front end: synth, ingest, detect, build-dataset, eval,
// shot-sweep. Exit codes: 0 success, 1 partial per-case failures, 2 usage or
// configuration errors.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rangebreak/rangebreak.hpp"

namespace rb = rangebreak;
namespace fs = std::filesystem;

namespace {

struct SolverFlags {
  std::string solver = "oracle";
  std::string config_path;
  std::string endpoint;
  std::string model;
  std::string fixtures;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
  cmd->add_option("--solver", flags.solver, "Solver backend: oracle, scripted, or remote")
      ->check(CLI::IsMember({"oracle", "scripted", "remote"}));
  cmd->add_option("--config", flags.config_path, "JSON solver config file");
  cmd->add_option("--endpoint", flags.endpoint, "Remote solver endpoint (http only)");
  cmd->add_option("--model", flags.model, "Remote solver model name");
  cmd->add_option("--fixtures", flags.fixtures, "Scripted solver fixtures JSONL");
}

// Config file supplies defaults; explicit flags win.
rb::SolverConfig resolve_solver_config(const SolverFlags& flags) {
  rb::SolverConfig config;
  if (!flags.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(rb::read_text_file(flags.config_path));
    } catch (const nlohmann::json::exception& e) {
      rb::fail(rb::Errc::bad_solver_config,
               std::string("config file is not valid JSON: ") + e.what());
    }
    if (j.contains("solver")) {
      std::string kind = j["solver"].get<std::string>();
      if (kind == "oracle") {
        config.kind = rb::SolverConfig::Kind::Oracle;
      } else if (kind == "scripted") {
        config.kind = rb::SolverConfig::Kind::Scripted;
      } else if (kind == "remote") {
        config.kind = rb::SolverConfig::Kind::Remote;
      } else {
        rb::fail(rb::Errc::bad_solver_config, "unknown solver kind in config: " + kind);
      }
    }
    if (j.contains("endpoint")) config.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("model")) config.model_name = j["model"].get<std::string>();
    if (j.contains("temperature")) config.temperature = j["temperature"].get<double>();
    if (j.contains("timeout_ms")) config.timeout_ms = j["timeout_ms"].get<int>();
    if (j.contains("max_retries")) config.max_retries = j["max_retries"].get<int>();
    if (j.contains("backoff_base_ms")) config.backoff_base_ms = j["backoff_base_ms"].get<int>();
    if (j.contains("max_inflight")) config.max_inflight = j["max_inflight"].get<int>();
    if (j.contains("api_key_env")) config.api_key_env = j["api_key_env"].get<std::string>();
    if (j.contains("fixtures")) config.fixtures_path = j["fixtures"].get<std::string>();
  }
  if (flags.solver == "oracle") config.kind = rb::SolverConfig::Kind::Oracle;
  if (flags.solver == "scripted") config.kind = rb::SolverConfig::Kind::Scripted;
  if (flags.solver == "remote") config.kind = rb::SolverConfig::Kind::Remote;
  if (!flags.endpoint.empty()) config.endpoint = flags.endpoint;
  if (!flags.model.empty()) config.model_name = flags.model;
  if (!flags.fixtures.empty()) config.fixtures_path = flags.fixtures;
  rb::validate_solver_config(config);
  return config;
}

std::vector<fs::path> case_files_in(const fs::path& root) {
  std::vector<fs::path> files;
  if (fs::is_directory(root)) {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json" &&
          entry.path().filename() != "manifest.json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(root)) {
    files.push_back(root);
  } else {
    rb::fail(rb::Errc::io_error, "no such file or directory: " + root.string());
  }
  return files;
}

std::vector<rb::BreakoutCase> read_cases(const fs::path& root) {
  std::vector<rb::BreakoutCase> cases;
  for (const fs::path& p : case_files_in(root)) cases.push_back(rb::read_case(p));
  return cases;
}

struct SynthFlags {
  std::int64_t count = 100;
  double true_fraction = 0.5;
  double up_fraction = 0.5;
  std::string tick_size = "0.25";
  std::string base_price = "4000.00";
  int window = 10;
  int confirm_closes = 2;
  std::int64_t levels_min = 3;
  std::int64_t levels_max = 8;
  std::int64_t volume_min = 1;
  std::int64_t volume_max = 200;
  std::uint64_t seed = 0;
  std::string id_prefix = "synth";
};

void add_synth_shape_flags(CLI::App* cmd, SynthFlags& flags) {
  cmd->add_option("--true-fraction", flags.true_fraction, "Fraction of true breakouts");
  cmd->add_option("--up-fraction", flags.up_fraction, "Fraction of upward breakouts");
  cmd->add_option("--tick-size", flags.tick_size, "Price grid step, e.g. 0.25");
  cmd->add_option("--base-price", flags.base_price, "Anchor price for generated cases");
  cmd->add_option("--window", flags.window, "History window length in ticks");
  cmd->add_option("--confirm-closes", flags.confirm_closes,
                  "Closes that must hold beyond resistance (breakout included)");
  cmd->add_option("--levels-min", flags.levels_min, "Minimum price levels per tick");
  cmd->add_option("--levels-max", flags.levels_max, "Maximum price levels per tick");
  cmd->add_option("--volume-min", flags.volume_min, "Minimum per-side volume per level");
  cmd->add_option("--volume-max", flags.volume_max, "Maximum per-side volume per level");
}

rb::SynthSpec to_spec(const SynthFlags& flags) {
  rb::SynthSpec spec;
  spec.count = flags.count;
  spec.true_fraction = flags.true_fraction;
  spec.up_fraction = flags.up_fraction;
  spec.tick_size = rb::parse_tick_size(flags.tick_size);
  spec.base_price = rb::parse_price(flags.base_price, spec.tick_size);
  spec.window_len = flags.window;
  spec.confirm_closes = flags.confirm_closes;
  spec.levels_per_tick = {flags.levels_min, flags.levels_max};
  spec.volume_range = {flags.volume_min, flags.volume_max};
  spec.seed = flags.seed;
  spec.id_prefix = flags.id_prefix;
  return spec;
}

nlohmann::json write_synth_batch(const rb::SynthSpec& spec, const fs::path& out_dir) {
  std::vector<rb::BreakoutCase> cases = rb::synth_batch(spec);
  std::int64_t true_n = 0;
  std::int64_t up_n = 0;
  for (const rb::BreakoutCase& bc : cases) {
    rb::write_case(bc, out_dir / (bc.case_id + ".json"));
    if (bc.labels->verdict == rb::Verdict::TrueBreakout) ++true_n;
    if (bc.labels->direction == rb::Direction::Up) ++up_n;
  }
  nlohmann::json manifest = {
      {"count", cases.size()},
      {"true_breakouts", true_n},
      {"false_breakouts", static_cast<std::int64_t>(cases.size()) - true_n},
      {"up", up_n},
      {"down", static_cast<std::int64_t>(cases.size()) - up_n},
      {"seed", spec.seed},
      {"tick_size", rb::render_tick_size(spec.tick_size)}};
  rb::atomic_write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

int cmd_synth(const SynthFlags& flags, const std::string& out_dir) {
  nlohmann::json manifest = write_synth_batch(to_spec(flags), out_dir);
  std::cout << manifest.dump(2) << "\n";
  return 0;
}

int cmd_ingest(const std::string& input, const std::string& tick_size, int window,
               int confirm_closes, const std::string& out_dir, bool label,
               const std::string& id_prefix) {
  rb::TickSize ts = rb::parse_tick_size(tick_size);
  std::ifstream in(input);
  if (!in) rb::fail(rb::Errc::io_error, "cannot open " + input);
  std::vector<rb::FootprintTick> ticks = rb::parse_footprint_csv(in, ts);
  std::vector<rb::BreakoutCase> cases =
      rb::extract_cases(ticks, window, confirm_closes, ts, id_prefix);
  std::int64_t written = 0;
  std::int64_t skipped = 0;
  for (rb::BreakoutCase& bc : cases) {
    if (label) {
      try {
        rb::StageAnswers answers = rb::run_pipeline(bc);
        bc.labels = rb::GroundTruth{answers.direction, answers.resistance,
                                    answers.force.dominant_side, answers.verdict};
      } catch (const rb::Error& e) {
        std::cerr << "case " << bc.case_id << ": " << e.what() << "\n";
        ++skipped;
        continue;
      }
    }
    rb::write_case(bc, fs::path(out_dir) / (bc.case_id + ".json"));
    ++written;
  }
  nlohmann::json manifest = {{"written", written}, {"skipped", skipped}};
  std::cout << manifest.dump(2) << "\n";
  return skipped > 0 ? 1 : 0;
}

int cmd_detect(const std::vector<std::string>& case_paths, const SolverFlags& flags,
               const std::string& out_dir) {
  rb::SolverConfig config = resolve_solver_config(flags);
  std::unique_ptr<rb::Solver> solver = rb::make_solver(config);
  std::vector<fs::path> files;
  for (const std::string& p : case_paths) {
    for (const fs::path& f : case_files_in(p)) files.push_back(f);
  }
  std::int64_t failed = 0;
  for (const fs::path& file : files) {
    std::string case_id = file.stem().string();
    try {
      rb::BreakoutCase bc = rb::read_case(file);
      case_id = bc.case_id;
      rb::DetectionReport report;
      if (config.kind == rb::SolverConfig::Kind::Oracle) {
        report = rb::generate_report(rb::run_pipeline(bc), bc.tick_size);
      } else {
        rb::StageAnswers answers;
        for (rb::StageId stage : rb::kAllStages) {
          rb::StageTask task;
          task.source = &bc;
          task.stage = stage;
          task.system = rb::kStageSystemText;
          task.user = rb::stage_user_text(bc, stage);
          task.case_id = bc.case_id;
          task.repeat = 0;
          task.tick_size = bc.tick_size;
          rb::StageOutcome outcome = solver->solve_stage(task);
          if (!outcome.ok()) rb::fail(rb::Errc::unparseable_response, outcome.failure);
          switch (stage) {
            case rb::StageId::S1:
              answers.direction = std::get<rb::Direction>(outcome.answer->payload);
              break;
            case rb::StageId::S2: {
              const rb::PriceAnswer& pa = std::get<rb::PriceAnswer>(outcome.answer->payload);
              if (!pa.exact || pa.off_grid) {
                rb::fail(rb::Errc::quantization_error, "stage 2 answer is off the tick grid");
              }
              answers.resistance = *pa.exact;
              break;
            }
            case rb::StageId::S3:
              break;  // totals are recomputed below from the claimed levels
          }
        }
        answers.force = rb::compare_forces(bc, answers.direction, answers.resistance);
        answers.verdict = rb::classify_breakout(bc, answers.direction, answers.resistance);
        rb::ReportOutcome outcome = solver->solve_report(answers, bc.tick_size, bc.case_id, 0);
        if (!outcome.ok()) rb::fail(rb::Errc::unparseable_response, outcome.failure);
        report = *outcome.report;
      }
      std::string text = rb::report_text(report);
      if (out_dir.empty()) {
        std::cout << "case " << case_id << "\n" << text << "\n\n";
      } else {
        rb::atomic_write_file(fs::path(out_dir) / (case_id + ".report.txt"), text + "\n");
      }
    } catch (const rb::Error& e) {
      std::cerr << "case " << case_id << ": " << e.what() << "\n";
      ++failed;
    }
  }
  return failed > 0 ? 1 : 0;
}

// Removes the cases whose ids appear in `used` from the pool, keeping order.
std::vector<rb::BreakoutCase> without(const std::vector<rb::BreakoutCase>& pool,
                                      const std::set<std::string>& used) {
  std::vector<rb::BreakoutCase> rest;
  for (const rb::BreakoutCase& bc : pool) {
    if (!used.count(bc.case_id)) rest.push_back(bc);
  }
  return rest;
}

struct DatasetArtifacts {
  rb::DatasetManifest manifest;
  std::vector<rb::TestItem> test_items;
};

// Partitions the pool into disjoint stage-training, report-training, and test
// sources, writes the four dataset files plus manifest, and cross-checks the
// manifest against the emitted files.
DatasetArtifacts build_dataset_files(const std::vector<rb::BreakoutCase>& pool, int shots_per_class,
                                     int report_shots, int samples_per_stage, std::uint64_t seed,
                                     const fs::path& out_dir) {
  std::vector<rb::ChatExample> stage_training =
      rb::build_stage_training_set(pool, 2 * shots_per_class);
  std::set<std::string> used;
  for (const rb::ChatExample& ex : stage_training) used.insert(ex.case_id);
  std::vector<rb::BreakoutCase> rest = without(pool, used);

  std::vector<rb::ChatExample> report_training = rb::build_report_training_set(rest, report_shots);
  for (const rb::ChatExample& ex : report_training) used.insert(ex.case_id);
  rest = without(rest, used);

  std::vector<rb::TestItem> test_items = rb::build_test_set(rest, samples_per_stage);

  rb::write_chat_jsonl(stage_training, out_dir / "stage_training.jsonl");
  rb::write_chat_jsonl(report_training, out_dir / "report_training.jsonl");
  std::vector<rb::ChatExample> test_chats;
  for (const rb::TestItem& item : test_items) test_chats.push_back(item.chat);
  rb::write_chat_jsonl(test_chats, out_dir / "test.jsonl");
  rb::atomic_write_file(out_dir / "answers.jsonl", rb::render_answers_jsonl(test_items));

  rb::DatasetManifest manifest;
  manifest.training_counts = {static_cast<std::int64_t>(stage_training.size()) / 3,
                              static_cast<std::int64_t>(stage_training.size()) / 3,
                              static_cast<std::int64_t>(stage_training.size()) / 3};
  manifest.report_training_count = static_cast<std::int64_t>(report_training.size());
  manifest.test_counts = {samples_per_stage, samples_per_stage, samples_per_stage};
  std::set<std::string> source_ids;
  for (const rb::ChatExample& ex : stage_training) source_ids.insert(ex.case_id);
  for (const rb::ChatExample& ex : report_training) source_ids.insert(ex.case_id);
  for (const rb::TestItem& item : test_items) source_ids.insert(item.chat.case_id);
  for (const rb::BreakoutCase& bc : pool) {
    if (!source_ids.count(bc.case_id)) continue;
    if (rb::run_pipeline(bc).verdict == rb::Verdict::TrueBreakout) {
      ++manifest.true_breakouts;
    } else {
      ++manifest.false_breakouts;
    }
  }
  manifest.seed = seed;
  rb::atomic_write_file(out_dir / "manifest.json", rb::manifest_to_json(manifest).dump(2) + "\n");

  rb::DatasetManifest check;
  for (const char* name : {"stage_training.jsonl", "report_training.jsonl", "test.jsonl"}) {
    rb::DatasetManifest part = rb::validate_chat_jsonl(out_dir / name);
    check.training_counts.s1 += part.training_counts.s1;
    check.training_counts.s2 += part.training_counts.s2;
    check.training_counts.s3 += part.training_counts.s3;
    check.report_training_count += part.report_training_count;
    check.test_counts.s1 += part.test_counts.s1;
    check.test_counts.s2 += part.test_counts.s2;
    check.test_counts.s3 += part.test_counts.s3;
  }
  if (check.training_counts != manifest.training_counts ||
      check.report_training_count != manifest.report_training_count ||
      check.test_counts != manifest.test_counts) {
    rb::fail(rb::Errc::schema_version_mismatch, "emitted files disagree with the manifest");
  }
  return {manifest, std::move(test_items)};
}

int cmd_build_dataset(const std::string& cases_dir, bool synth, const SynthFlags& synth_flags,
                      int shots_per_class, int report_shots, int samples_per_stage,
                      const std::string& out_dir) {
  std::vector<rb::BreakoutCase> pool;
  std::uint64_t seed = 0;
  if (synth) {
    SynthFlags sf = synth_flags;
    sf.count = 2 * shots_per_class + report_shots + samples_per_stage;
    pool = rb::synth_batch(to_spec(sf));
    seed = sf.seed;
  } else {
    pool = read_cases(cases_dir);
  }
  DatasetArtifacts artifacts = build_dataset_files(pool, shots_per_class, report_shots,
                                                   samples_per_stage, seed, out_dir);
  std::cout << rb::manifest_to_json(artifacts.manifest).dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& replay, const std::string& cases_dir, bool synth,
             const SynthFlags& synth_flags, int samples_per_stage, int repeats,
             const SolverFlags& flags, const std::string& out_dir) {
  rb::TrialLog log;
  if (!replay.empty()) {
    log = rb::read_trial_log(replay);
  } else {
    rb::SolverConfig config = resolve_solver_config(flags);
    std::unique_ptr<rb::Solver> solver = rb::make_solver(config);
    std::vector<rb::BreakoutCase> pool;
    if (synth) {
      SynthFlags sf = synth_flags;
      sf.count = samples_per_stage;
      pool = rb::synth_batch(to_spec(sf));
    } else {
      pool = read_cases(cases_dir);
    }
    std::vector<rb::TestItem> items = rb::build_test_set(pool, samples_per_stage);
    log = rb::run_protocol(*solver, items, repeats);
  }
  rb::EvalMetrics metrics = rb::compute_metrics(log);
  std::string table = rb::emit_metrics_table(metrics);
  std::cout << "trials: " << log.entries.size() << "\n" << table;
  if (!out_dir.empty()) {
    rb::write_trial_log(log, fs::path(out_dir) / "trial_log.jsonl");
    rb::atomic_write_file(fs::path(out_dir) / "metrics.txt", table);
    rb::atomic_write_file(fs::path(out_dir) / "metrics.json",
                          rb::metrics_to_json(metrics).dump(2) + "\n");
  }
  return 0;
}

int cmd_shot_sweep(const std::vector<int>& sizes, const std::string& cases_dir, bool synth,
                   const SynthFlags& synth_flags, int report_shots, int samples_per_stage,
                   const SolverFlags& flags, const std::string& out_dir) {
  int max_size = *std::max_element(sizes.begin(), sizes.end());
  std::vector<rb::BreakoutCase> pool;
  std::uint64_t seed = 0;
  if (synth) {
    SynthFlags sf = synth_flags;
    sf.count = 2 * max_size + report_shots + samples_per_stage;
    pool = rb::synth_batch(to_spec(sf));
    seed = sf.seed;
  } else {
    pool = read_cases(cases_dir);
  }
  std::string table = "shots_per_class | average_accuracy\n";
  for (int size : sizes) {
    fs::path size_dir = out_dir.empty() ? fs::path() : fs::path(out_dir) / ("shots-" + std::to_string(size));
    std::vector<rb::BreakoutCase> sized_pool = pool;
    DatasetArtifacts artifacts;
    if (size_dir.empty()) {
      fs::path tmp = fs::temp_directory_path() / ("rangebreak-sweep-" + std::to_string(size));
      fs::create_directories(tmp);
      artifacts = build_dataset_files(sized_pool, size, report_shots, samples_per_stage, seed, tmp);
    } else {
      artifacts = build_dataset_files(sized_pool, size, report_shots, samples_per_stage, seed,
                                      size_dir);
    }
    SolverFlags size_flags = flags;
    std::string::size_type pos = size_flags.fixtures.find("{shots}");
    if (pos != std::string::npos) {
      size_flags.fixtures.replace(pos, 7, std::to_string(size));
    }
    rb::SolverConfig config = resolve_solver_config(size_flags);
    std::unique_ptr<rb::Solver> solver = rb::make_solver(config);
    rb::TrialLog log = rb::run_protocol(*solver, artifacts.test_items, 1);
    rb::EvalMetrics metrics = rb::compute_metrics(log);
    table += std::to_string(size) + " | " + rb::render_percent(metrics.average_accuracy) + "\n";
  }
  std::cout << table;
  if (!out_dir.empty()) rb::atomic_write_file(fs::path(out_dir) / "sweep.txt", table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Footprint breakout detection toolkit");
  app.require_subcommand(1);

  // synth
  SynthFlags synth_flags;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "Generate labeled synthetic breakout cases");
  synth->add_option("--count", synth_flags.count, "Number of cases");
  add_synth_shape_flags(synth, synth_flags);
  synth->add_option("--seed", synth_flags.seed, "Generator seed")->required();
  synth->add_option("--id-prefix", synth_flags.id_prefix, "Case id prefix");
  synth->add_option("--out-dir", synth_out, "Output directory")->required();

  // ingest
  std::string ingest_input;
  std::string ingest_tick = "0.25";
  int ingest_window = 10;
  int ingest_confirm = 2;
  std::string ingest_out;
  std::string ingest_prefix = "case";
  bool ingest_label = false;
  CLI::App* ingest = app.add_subcommand("ingest", "Slice a footprint CSV into case files");
  ingest->add_option("--input", ingest_input, "Footprint CSV path")->required();
  ingest->add_option("--tick-size", ingest_tick, "Price grid step");
  ingest->add_option("--window", ingest_window, "History window length");
  ingest->add_option("--confirm-closes", ingest_confirm, "Confirmation close count");
  ingest->add_option("--out-dir", ingest_out, "Output directory")->required();
  ingest->add_option("--id-prefix", ingest_prefix, "Case id prefix");
  ingest->add_flag("--label", ingest_label, "Attach rule-engine labels; windows without a breakout are skipped");

  // detect
  std::vector<std::string> detect_paths;
  SolverFlags detect_solver;
  std::string detect_out;
  CLI::App* detect = app.add_subcommand("detect", "Run the detection pipeline over case files");
  detect->add_option("--cases", detect_paths, "Case file or directory (repeatable)")->required();
  add_solver_flags(detect, detect_solver);
  detect->add_option("--out-dir", detect_out, "Write per-case reports here instead of stdout");

  // build-dataset
  std::string bd_cases_dir;
  bool bd_synth = false;
  SynthFlags bd_synth_flags;
  int bd_shots_per_class = 10;
  int bd_report_shots = 20;
  int bd_samples = 40;
  std::string bd_out;
  CLI::App* build_dataset = app.add_subcommand("build-dataset", "Emit chat JSONL training and test sets");
  build_dataset->add_option("--cases-dir", bd_cases_dir, "Directory of labeled case files");
  build_dataset->add_flag("--synth", bd_synth, "Generate the source pool instead of reading cases");
  add_synth_shape_flags(build_dataset, bd_synth_flags);
  build_dataset->add_option("--seed", bd_synth_flags.seed, "Generator seed (required with --synth)");
  build_dataset->add_option("--shots-per-class", bd_shots_per_class,
                            "Training cases per verdict class per stage");
  build_dataset->add_option("--report-shots", bd_report_shots, "Report training examples");
  build_dataset->add_option("--samples-per-stage", bd_samples, "Test items per stage");
  build_dataset->add_option("--out-dir", bd_out, "Output directory")->required();

  // eval
  std::string eval_replay;
  std::string eval_cases_dir;
  bool eval_synth = false;
  SynthFlags eval_synth_flags;
  int eval_samples = 40;
  int eval_repeats = 10;
  SolverFlags eval_solver;
  std::string eval_out;
  CLI::App* eval = app.add_subcommand("eval", "Run the repeated-trial evaluation protocol");
  eval->add_option("--replay", eval_replay, "Recompute metrics from a stored trial log");
  eval->add_option("--cases-dir", eval_cases_dir, "Directory of labeled case files");
  eval->add_flag("--synth", eval_synth, "Generate the test pool instead of reading cases");
  add_synth_shape_flags(eval, eval_synth_flags);
  eval->add_option("--seed", eval_synth_flags.seed, "Generator seed (required with --synth)");
  eval->add_option("--samples-per-stage", eval_samples, "Test items per stage");
  eval->add_option("--repeats", eval_repeats, "Repeats per test item");
  add_solver_flags(eval, eval_solver);
  eval->add_option("--out-dir", eval_out, "Directory for trial log and metrics files");

  // shot-sweep
  std::vector<int> sweep_sizes;
  std::string sweep_cases_dir;
  bool sweep_synth = false;
  SynthFlags sweep_synth_flags;
  int sweep_report_shots = 20;
  int sweep_samples = 40;
  SolverFlags sweep_solver;
  std::string sweep_out;
  CLI::App* sweep = app.add_subcommand("shot-sweep", "Accuracy as a function of training shots");
  sweep->add_option("--sizes", sweep_sizes, "Shots per class at each sweep point (e.g. 2 4 6 8 10)")
      ->required()
      ->delimiter(',');
  sweep->add_option("--cases-dir", sweep_cases_dir, "Directory of labeled case files");
  sweep->add_flag("--synth", sweep_synth, "Generate the source pool instead of reading cases");
  add_synth_shape_flags(sweep, sweep_synth_flags);
  sweep->add_option("--seed", sweep_synth_flags.seed, "Generator seed (required with --synth)");
  sweep->add_option("--report-shots", sweep_report_shots, "Report training examples");
  sweep->add_option("--samples-per-stage", sweep_samples, "Test items per stage");
  add_solver_flags(sweep, sweep_solver);
  sweep->add_option("--out-dir", sweep_out, "Directory for per-size datasets and the sweep table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_flags, synth_out);
    if (ingest->parsed()) {
      return cmd_ingest(ingest_input, ingest_tick, ingest_window, ingest_confirm, ingest_out,
                        ingest_label, ingest_prefix);
    }
    if (detect->parsed()) return cmd_detect(detect_paths, detect_solver, detect_out);
    if (build_dataset->parsed()) {
      if (bd_synth && build_dataset->count("--seed") == 0) {
        std::cerr << "error: --synth requires an explicit --seed\n";
        return 2;
      }
      if (!bd_synth && bd_cases_dir.empty()) {
        std::cerr << "error: provide --cases-dir or --synth\n";
        return 2;
      }
      return cmd_build_dataset(bd_cases_dir, bd_synth, bd_synth_flags, bd_shots_per_class,
                               bd_report_shots, bd_samples, bd_out);
    }
    if (eval->parsed()) {
      if (eval_replay.empty()) {
        if (eval_synth && eval->count("--seed") == 0) {
          std::cerr << "error: --synth requires an explicit --seed\n";
          return 2;
        }
        if (!eval_synth && eval_cases_dir.empty()) {
          std::cerr << "error: provide --cases-dir, --synth, or --replay\n";
          return 2;
        }
      }
      return cmd_eval(eval_replay, eval_cases_dir, eval_synth, eval_synth_flags, eval_samples,
                      eval_repeats, eval_solver, eval_out);
    }
    if (sweep->parsed()) {
      if (sweep_sizes.empty()) {
        std::cerr << "error: --sizes must not be empty\n";
        return 2;
      }
      if (sweep_synth && sweep->count("--seed") == 0) {
        std::cerr << "error: --synth requires an explicit --seed\n";
        return 2;
      }
      if (!sweep_synth && sweep_cases_dir.empty()) {
        std::cerr << "error: provide --cases-dir or --synth\n";
        return 2;
      }
      return cmd_shot_sweep(sweep_sizes, sweep_cases_dir, sweep_synth, sweep_synth_flags,
                            sweep_report_shots, sweep_samples, sweep_solver, sweep_out);
    }
  } catch (const rb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
