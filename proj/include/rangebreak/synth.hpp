#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rangebreak/oracle.hpp"

namespace rangebreak {

// Deterministic splitmix64; the standard library engines are not guaranteed
// bit-identical across implementations and these draws feed golden files.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // n must be positive; bias is negligible for the small ranges used here.
  std::int64_t below(std::int64_t n) { return static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(n)); }

  std::int64_t range(std::int64_t lo, std::int64_t hi) { return lo + below(hi - lo + 1); }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t ordinal) {
  Rng rng(seed ^ (0xD1B54A32D192ED03ULL * (ordinal + 1)));
  rng.next();
  return rng.next();
}

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  auto operator<=>(const IntRange&) const = default;
};

struct SynthSpec {
  int count = 100;
  double true_fraction = 0.5;
  double up_fraction = 0.5;
  TickSize tick_size{25, 2};
  Price base_price{400000};  // 4000.00 at two decimals
  IntRange levels_per_tick{3, 8};
  IntRange volume_range{1, 200};
  std::uint64_t seed = 0;
  int window_len = 10;
  int confirm_closes = 2;
  std::string id_prefix = "synth";
};

namespace detail {

inline std::int64_t exact_fraction_count(int count, double fraction, const char* what) {
  double ideal = count * fraction;
  std::int64_t rounded = std::llround(ideal);
  if (std::abs(ideal - static_cast<double>(rounded)) > 1e-9) {
    fail(Errc::bad_synth_spec, std::string(what) + " of " + std::to_string(count) +
                                   " cases is not an integer");
  }
  return rounded;
}

}  // namespace detail

inline void validate_synth_spec(const SynthSpec& spec) {
  if (spec.count < 1) fail(Errc::bad_synth_spec, "count must be positive");
  if (spec.true_fraction < 0.0 || spec.true_fraction > 1.0) {
    fail(Errc::bad_synth_spec, "true_fraction outside [0,1]");
  }
  if (spec.up_fraction < 0.0 || spec.up_fraction > 1.0) {
    fail(Errc::bad_synth_spec, "up_fraction outside [0,1]");
  }
  detail::exact_fraction_count(spec.count, spec.true_fraction, "true_fraction");
  detail::exact_fraction_count(spec.count, spec.up_fraction, "up_fraction");
  if (spec.levels_per_tick.lo < 1 || spec.levels_per_tick.hi < spec.levels_per_tick.lo) {
    fail(Errc::bad_synth_spec, "levels_per_tick range invalid");
  }
  if (spec.volume_range.lo < 1 || spec.volume_range.hi < spec.volume_range.lo) {
    fail(Errc::bad_synth_spec, "volume_range must be within [1, ...]");
  }
  if (spec.window_len < 1) fail(Errc::bad_synth_spec, "window_len must be >= 1");
  if (spec.confirm_closes < 1) fail(Errc::bad_synth_spec, "confirm_closes must be >= 1");
  if (spec.base_price.minor <= 0) fail(Errc::bad_synth_spec, "base_price must be positive");
}

namespace detail {

// One construction attempt. Prices are handled as tick counts ("tk") and
// converted to minor units at assembly.
inline BreakoutCase try_synth_case(Direction direction, Verdict verdict, const SynthSpec& spec,
                                   std::uint64_t attempt_seed, const std::string& case_id) {
  Rng rng(attempt_seed);
  const TickSize& ts = spec.tick_size;
  const std::int64_t sign = direction == Direction::Up ? 1 : -1;

  const std::int64_t margin_tk =
      3 * (spec.window_len + spec.confirm_closes + 2) + spec.levels_per_tick.hi + 16;
  const std::int64_t base_tk = spec.base_price.minor / ts.units;
  std::int64_t center_tk = base_tk + rng.range(-2000, 2000);
  if (center_tk < margin_tk) center_tk = margin_tk;

  auto price_at = [&](std::int64_t tk) { return Price{tk * ts.units}; };
  auto volume = [&]() { return rng.range(spec.volume_range.lo, spec.volume_range.hi); };

  auto make_tick = [&](std::int64_t index, std::int64_t low_tk, std::int64_t count) {
    FootprintTick tick;
    tick.index = index;
    for (std::int64_t k = 0; k < count; ++k) {
      tick.levels.push_back(PriceLevelRow{price_at(low_tk + k), volume(), volume()});
    }
    tick.open = tick.levels[static_cast<std::size_t>(rng.below(count))].price;
    tick.close = tick.levels[static_cast<std::size_t>(rng.below(count))].price;
    return tick;
  };

  BreakoutCase bc;
  bc.case_id = case_id;
  bc.tick_size = ts;
  bc.window_len = spec.window_len;
  bc.confirm_closes = spec.confirm_closes;

  std::int64_t walk_tk = center_tk;
  for (int i = 0; i < spec.window_len; ++i) {
    std::int64_t count = rng.range(spec.levels_per_tick.lo, spec.levels_per_tick.hi);
    std::int64_t low_tk = walk_tk - rng.below(count);
    bc.history.push_back(make_tick(i, low_tk, count));
    walk_tk += rng.range(-3, 3);
  }

  const std::int64_t resistance_tk = (direction == Direction::Up ? history_high(bc).minor
                                                                 : history_low(bc).minor) /
                                     ts.units;

  // Breakout tick closes strictly beyond the resistance, at the extreme of
  // its own traded run.
  {
    std::int64_t count = rng.range(spec.levels_per_tick.lo, spec.levels_per_tick.hi);
    std::int64_t close_tk = resistance_tk + sign * (1 + rng.below(3));
    std::int64_t low_tk = direction == Direction::Up ? close_tk - (count - 1) : close_tk;
    FootprintTick tick = make_tick(spec.window_len, low_tk, count);
    tick.close = price_at(close_tk);
    bc.breakout_tick = tick;
  }

  // Confirmation ticks hold beyond the resistance; in a false case the final
  // close retreats back to or through it.
  for (int j = 0; j < spec.confirm_closes - 1; ++j) {
    const bool last = j == spec.confirm_closes - 2;
    std::int64_t close_tk;
    if (verdict == Verdict::TrueBreakout || !last) {
      close_tk = resistance_tk + sign * (1 + rng.below(3));
    } else {
      close_tk = resistance_tk - sign * rng.below(3);
    }
    std::int64_t wick = rng.below(2);
    std::int64_t count = rng.range(spec.levels_per_tick.lo, spec.levels_per_tick.hi);
    if (count < wick + 1) count = wick + 1;
    std::int64_t extreme_tk = close_tk + sign * wick;
    std::int64_t low_tk = direction == Direction::Up ? extreme_tk - (count - 1) : extreme_tk;
    FootprintTick tick = make_tick(spec.window_len + 1 + j, low_tk, count);
    tick.close = price_at(close_tk);
    bc.confirmation.push_back(tick);
  }

  // Tilt beyond-resistance volume toward the intended dominant side: buyers
  // drive true up-moves and false down-moves; sellers the reverse.
  const bool buyers_dominate = (direction == Direction::Up) == (verdict == Verdict::TrueBreakout);
  const Side intended_side = buyers_dominate ? Side::Buyers : Side::Sellers;
  const Price resistance = price_at(resistance_tk);
  ForceReport force = compare_forces(bc, direction, resistance);
  auto needs_tilt = [&]() {
    return buyers_dominate ? force.buy_total <= force.sell_total
                           : force.sell_total <= force.buy_total;
  };
  if (needs_tilt()) {
    std::int64_t delta = std::abs(force.buy_total - force.sell_total) + 1 + rng.below(20);
    auto beyond = [&](Price p) { return direction == Direction::Up ? p > resistance : p < resistance; };
    auto tilt = [&](FootprintTick& tick) {
      for (PriceLevelRow& row : tick.levels) {
        if (!beyond(row.price)) continue;
        (buyers_dominate ? row.buy_volume : row.sell_volume) += delta;
        return true;
      }
      return false;
    };
    if (!tilt(bc.breakout_tick)) {
      for (FootprintTick& tick : bc.confirmation) {
        if (tilt(tick)) break;
      }
    }
  }

  bc.labels = GroundTruth{direction, resistance, intended_side, verdict};
  return bc;
}

}  // namespace detail

inline BreakoutCase synth_case(Direction direction, Verdict verdict, const SynthSpec& spec,
                               std::uint64_t case_seed, const std::string& case_id = "synth-0000") {
  validate_synth_spec(spec);
  constexpr int kMaxAttempts = 64;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::uint64_t attempt_seed = attempt == 0 ? case_seed : mix_seed(case_seed, static_cast<std::uint64_t>(attempt));
    BreakoutCase bc = detail::try_synth_case(direction, verdict, spec, attempt_seed, case_id);
    try {
      validate_case(bc);
      StageAnswers answers = run_pipeline(bc);
      if (answers.direction == direction && answers.resistance == bc.labels->resistance &&
          answers.force.dominant_side == bc.labels->dominant_side &&
          answers.force.buy_total != answers.force.sell_total && answers.verdict == verdict) {
        return bc;
      }
    } catch (const Error&) {
      // fall through to retry with a perturbed seed
    }
  }
  fail(Errc::generation_failure, case_id + ": no valid construction after " +
                                     std::to_string(kMaxAttempts) + " attempts");
}

namespace detail {

inline std::string padded_ordinal(int i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 4) digits.insert(digits.begin(), 4 - digits.size(), '0');
  return digits;
}

}  // namespace detail

// Exact stratification: cell counts are fixed up front, then cases are laid
// out round-robin across the four (direction, verdict) cells so prefixes
// stay close to balanced.
inline std::vector<BreakoutCase> synth_batch(const SynthSpec& spec) {
  validate_synth_spec(spec);
  const std::int64_t n_true = detail::exact_fraction_count(spec.count, spec.true_fraction, "true_fraction");
  const std::int64_t n_up = detail::exact_fraction_count(spec.count, spec.up_fraction, "up_fraction");
  const std::int64_t n_false = spec.count - n_true;
  std::int64_t up_true = std::llround(static_cast<double>(n_true) * spec.up_fraction);
  up_true = std::max(up_true, n_up - n_false);
  up_true = std::min({up_true, n_true, n_up});
  std::int64_t cells[4] = {
      up_true,           // Up, TrueBreakout
      n_up - up_true,    // Up, FalseBreakout
      n_true - up_true,  // Down, TrueBreakout
      n_false - (n_up - up_true),
  };
  static constexpr Direction kDir[4] = {Direction::Up, Direction::Up, Direction::Down,
                                        Direction::Down};
  static constexpr Verdict kVerdict[4] = {Verdict::TrueBreakout, Verdict::FalseBreakout,
                                          Verdict::TrueBreakout, Verdict::FalseBreakout};
  std::vector<std::pair<Direction, Verdict>> plan;
  while (static_cast<int>(plan.size()) < spec.count) {
    bool progressed = false;
    for (int c = 0; c < 4; ++c) {
      if (cells[c] <= 0) continue;
      --cells[c];
      plan.emplace_back(kDir[c], kVerdict[c]);
      progressed = true;
    }
    if (!progressed) break;
  }
  std::vector<BreakoutCase> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    out.push_back(synth_case(plan[static_cast<std::size_t>(i)].first,
                             plan[static_cast<std::size_t>(i)].second, spec,
                             mix_seed(spec.seed, static_cast<std::uint64_t>(i)),
                             spec.id_prefix + "-" + detail::padded_ordinal(i)));
  }
  return out;
}

}  // namespace rangebreak
