#pragma once

#include <stdexcept>
#include <string>

namespace rangebreak {

// Every failure the library reports carries one of these codes so callers can
// branch on the condition instead of matching message text.
enum class Errc {
  // price / tick grid
  quantization_error,
  bad_tick_size,
  bad_price,

  // footprint structure
  empty_levels,
  price_out_of_range,
  unsorted_levels,
  negative_volume,
  zero_volume_level,
  window_length_error,
  non_contiguous_indices,
  mixed_tick_size,
  partial_labels,

  // ingest
  header_mismatch,
  duplicate_open_flag,
  duplicate_close_flag,
  missing_open_flag,
  missing_close_flag,
  parse_error,
  insufficient_ticks,
  schema_version_mismatch,

  // detection
  no_breakout_present,

  // synthesis
  bad_synth_spec,
  generation_failure,

  // dataset
  insufficient_cases,
  imbalanced_cases,
  malformed_line,
  role_order_error,

  // solver
  bad_solver_config,
  transport_error,
  timeout_error,
  unparseable_response,
  fixture_missing,

  // evaluation
  duplicate_trial,
  incomplete_log,
  no_numeric_values,
  unsupported_repeat_count,

  // generic I/O
  io_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::quantization_error: return "quantization error";
    case Errc::bad_tick_size: return "bad tick size";
    case Errc::bad_price: return "bad price";
    case Errc::empty_levels: return "empty levels";
    case Errc::price_out_of_range: return "price out of range";
    case Errc::unsorted_levels: return "unsorted levels";
    case Errc::negative_volume: return "negative volume";
    case Errc::zero_volume_level: return "zero volume level";
    case Errc::window_length_error: return "window length error";
    case Errc::non_contiguous_indices: return "non-contiguous indices";
    case Errc::mixed_tick_size: return "mixed tick size";
    case Errc::partial_labels: return "partial labels";
    case Errc::header_mismatch: return "header mismatch";
    case Errc::duplicate_open_flag: return "duplicate open flag";
    case Errc::duplicate_close_flag: return "duplicate close flag";
    case Errc::missing_open_flag: return "missing open flag";
    case Errc::missing_close_flag: return "missing close flag";
    case Errc::parse_error: return "parse error";
    case Errc::insufficient_ticks: return "insufficient ticks";
    case Errc::schema_version_mismatch: return "schema version mismatch";
    case Errc::no_breakout_present: return "no breakout present";
    case Errc::bad_synth_spec: return "bad synth spec";
    case Errc::generation_failure: return "generation failure";
    case Errc::insufficient_cases: return "insufficient cases";
    case Errc::imbalanced_cases: return "imbalanced cases";
    case Errc::malformed_line: return "malformed line";
    case Errc::role_order_error: return "role order error";
    case Errc::bad_solver_config: return "bad solver config";
    case Errc::transport_error: return "transport error";
    case Errc::timeout_error: return "timeout error";
    case Errc::unparseable_response: return "unparseable response";
    case Errc::fixture_missing: return "fixture missing";
    case Errc::duplicate_trial: return "duplicate trial";
    case Errc::incomplete_log: return "incomplete log";
    case Errc::no_numeric_values: return "no numeric values";
    case Errc::unsupported_repeat_count: return "unsupported repeat count";
    case Errc::io_error: return "io error";
  }
  return "unknown error";
}

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace rangebreak
