#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rangebreak/solver.hpp"

namespace rangebreak {

namespace detail {

struct EndpointParts {
  std::string base;  // scheme://host[:port]
  std::string path;  // leading slash, defaults to "/"
};

inline EndpointParts parse_endpoint(const std::string& endpoint) {
  const std::string http = "http://";
  if (endpoint.rfind("https://", 0) == 0) {
    fail(Errc::bad_solver_config,
         "https endpoints are not supported by this build; use a plain http endpoint");
  }
  if (endpoint.rfind(http, 0) != 0) {
    fail(Errc::bad_solver_config, "endpoint must start with http://, got: " + endpoint);
  }
  std::size_t slash = endpoint.find('/', http.size());
  EndpointParts parts;
  if (slash == std::string::npos) {
    parts.base = endpoint;
    parts.path = "/";
  } else {
    parts.base = endpoint.substr(0, slash);
    parts.path = endpoint.substr(slash);
  }
  if (parts.base.size() == http.size()) {
    fail(Errc::bad_solver_config, "endpoint has no host: " + endpoint);
  }
  return parts;
}

// Counting gate for the in-flight request cap; the count is a runtime value
// so std::counting_semaphore's compile-time ceiling does not fit.
class InflightGate {
 public:
  explicit InflightGate(int limit) : limit_(limit) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return inflight_ < limit_; });
    ++inflight_;
  }

  void release() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      --inflight_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int limit_;
  int inflight_ = 0;
};

struct GateHold {
  InflightGate& gate;
  explicit GateHold(InflightGate& g) : gate(g) { gate.acquire(); }
  ~GateHold() { gate.release(); }
  GateHold(const GateHold&) = delete;
  GateHold& operator=(const GateHold&) = delete;
};

}  // namespace detail

// Talks to a chat-completion style HTTP service. Transport failures (refused
// connections, timeouts, 429, 5xx) retry with exponential backoff; malformed
// response bodies and other HTTP statuses fail immediately since retrying
// cannot change them.
class RemoteSolver : public Solver {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit RemoteSolver(const SolverConfig& config)
      : config_(config),
        parts_(detail::parse_endpoint(config.endpoint)),
        gate_(config.max_inflight),
        sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    validate_solver_config(config);
    if (config_.kind != SolverConfig::Kind::Remote) {
      fail(Errc::bad_solver_config, "RemoteSolver requires kind Remote");
    }
    if (!config_.api_key_env.empty()) {
      const char* key = std::getenv(config_.api_key_env.c_str());
      if (key == nullptr || *key == '\0') {
        fail(Errc::bad_solver_config,
             "environment variable " + config_.api_key_env + " is not set");
      }
      api_key_ = key;
    }
  }

  // Test hook: replaces the real sleep between retries.
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  StageOutcome solve_stage(const StageTask& task) override {
    try {
      std::string text = complete(task.system, task.user);
      return {parse_stage_response(task.stage, text, task.tick_size), ""};
    } catch (const Error& e) {
      return {std::nullopt, e.what()};
    }
  }

  ReportOutcome solve_report(const StageAnswers& answers, const TickSize& ts, const std::string&,
                             int) override {
    try {
      std::string text = complete(std::string(kReportSystemText), report_user_text(answers, ts));
      DetectionReport report;
      report.answer = parse_report_response(text);
      std::istringstream lines(text);
      std::string sentence;
      while (std::getline(lines, sentence)) report.rationale.push_back(sentence);
      return {report, ""};
    } catch (const Error& e) {
      return {std::nullopt, e.what()};
    }
  }

  // Sends one completion request and returns the assistant text.
  std::string complete(const std::string& system_text, const std::string& user_text) {
    nlohmann::json request = {{"model", config_.model_name},
                              {"messages",
                               {{{"role", "system"}, {"content", system_text}},
                                {{"role", "user"}, {"content", user_text}}}},
                              {"temperature", config_.temperature}};
    const std::string body = request.dump();

    std::string last_failure = "no attempt made";
    Errc last_code = Errc::transport_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        sleeper_(std::chrono::milliseconds(
            static_cast<std::int64_t>(config_.backoff_base_ms) << (attempt - 1)));
      }
      detail::GateHold hold(gate_);
      httplib::Client client(parts_.base);
      client.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
      client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
      client.set_write_timeout(std::chrono::milliseconds(config_.timeout_ms));
      httplib::Headers headers;
      if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
      httplib::Result res = client.Post(parts_.path, headers, body, "application/json");
      if (!res) {
        last_code = res.error() == httplib::Error::ConnectionTimeout ||
                            res.error() == httplib::Error::Read
                        ? Errc::timeout_error
                        : Errc::transport_error;
        last_failure = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) return extract_content(res->body);
      if (res->status == 429 || (res->status >= 500 && res->status < 600)) {
        last_code = Errc::transport_error;
        last_failure = "http status " + std::to_string(res->status);
        continue;
      }
      fail(Errc::transport_error, "http status " + std::to_string(res->status) +
                                      " from " + config_.endpoint);
    }
    fail(last_code, last_failure + " after " + std::to_string(config_.max_retries + 1) +
                        " attempts against " + config_.endpoint);
  }

 private:
  static std::string extract_content(const std::string& body) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      fail(Errc::unparseable_response, "response body is not valid JSON");
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
      fail(Errc::unparseable_response, "response has no choices");
    }
    const nlohmann::json& first = j["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
      fail(Errc::unparseable_response, "response choice has no message content");
    }
    return first["message"]["content"].get<std::string>();
  }

  SolverConfig config_;
  detail::EndpointParts parts_;
  detail::InflightGate gate_;
  Sleeper sleeper_;
  std::string api_key_;
};

inline std::unique_ptr<Solver> make_solver(const SolverConfig& config) {
  validate_solver_config(config);
  switch (config.kind) {
    case SolverConfig::Kind::Oracle:
      return std::make_unique<OracleSolver>();
    case SolverConfig::Kind::Scripted:
      return std::make_unique<ScriptedSolver>(ScriptedSolver::from_file(config.fixtures_path));
    case SolverConfig::Kind::Remote:
      return std::make_unique<RemoteSolver>(config);
  }
  fail(Errc::bad_solver_config, "unknown solver kind");
}

}  // namespace rangebreak
