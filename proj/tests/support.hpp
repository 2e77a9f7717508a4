#pragma once

#include <gtest/gtest.h>

#include <initializer_list>
#include <string>
#include <vector>

#include "rangebreak/rangebreak.hpp"

namespace rbtest {

namespace rb = rangebreak;

inline const rb::TickSize kTs{25, 2};  // 0.25

struct LevelSpec {
  const char* price;
  std::int64_t buy;
  std::int64_t sell;
};

inline rb::FootprintTick make_tick(std::int64_t index, const char* open, const char* close,
                                   std::initializer_list<LevelSpec> levels,
                                   const rb::TickSize& ts = kTs) {
  rb::FootprintTick tick;
  tick.index = index;
  tick.open = rb::parse_price(open, ts);
  tick.close = rb::parse_price(close, ts);
  for (const LevelSpec& spec : levels) {
    tick.levels.push_back({rb::parse_price(spec.price, ts), spec.buy, spec.sell});
  }
  return tick;
}

// Hand-built upward true breakout matching the reference arithmetic used
// throughout the module examples: resistance 4001.00, breakout close 4001.25,
// confirmation close 4001.50, beyond-resistance volume 40 buy vs 35 sell.
inline rb::BreakoutCase up_true_case() {
  rb::BreakoutCase bc;
  bc.case_id = "hand-up-true";
  bc.tick_size = kTs;
  bc.window_len = 3;
  bc.confirm_closes = 2;
  bc.history = {
      make_tick(0, "4000.25", "4001.00",
                {{"4000.25", 5, 5}, {"4000.50", 5, 5}, {"4001.00", 5, 5}}),
      make_tick(1, "4000.50", "4000.00", {{"4000.00", 5, 5}, {"4000.50", 5, 5}}),
      make_tick(2, "4000.00", "3999.00", {{"3999.00", 5, 5}, {"4000.00", 5, 5}}),
  };
  bc.breakout_tick = make_tick(3, "4000.75", "4001.25", {{"4000.75", 2, 2}, {"4001.25", 30, 20}});
  bc.confirmation = {make_tick(4, "4001.00", "4001.50", {{"4001.00", 3, 3}, {"4001.50", 10, 15}})};
  return bc;
}

// Same shape, but the confirmation close retreats to exactly the resistance:
// equality is not "beyond", so the verdict flips to a false breakout.
inline rb::BreakoutCase up_false_case() {
  rb::BreakoutCase bc = up_true_case();
  bc.case_id = "hand-up-false";
  bc.confirmation = {make_tick(4, "4001.50", "4001.00", {{"4001.00", 3, 3}, {"4001.50", 10, 15}})};
  return bc;
}

inline rb::BreakoutCase down_true_case() {
  rb::BreakoutCase bc;
  bc.case_id = "hand-down-true";
  bc.tick_size = kTs;
  bc.window_len = 3;
  bc.confirm_closes = 2;
  bc.history = {
      make_tick(0, "4000.25", "4001.00",
                {{"4000.25", 5, 5}, {"4000.50", 5, 5}, {"4001.00", 5, 5}}),
      make_tick(1, "4000.50", "4000.00", {{"4000.00", 5, 5}, {"4000.50", 5, 5}}),
      make_tick(2, "4000.00", "3999.00", {{"3999.00", 5, 5}, {"4000.00", 5, 5}}),
  };
  bc.breakout_tick = make_tick(3, "3999.25", "3998.50", {{"3998.50", 10, 25}, {"3999.25", 2, 2}});
  bc.confirmation = {make_tick(4, "3998.75", "3998.25", {{"3998.25", 5, 20}, {"3998.75", 8, 4}})};
  return bc;
}

// Breakout close sits inside the history envelope: no breakout to classify.
inline rb::BreakoutCase inside_range_case() {
  rb::BreakoutCase bc = up_true_case();
  bc.case_id = "hand-inside";
  bc.breakout_tick = make_tick(3, "4000.50", "4000.50", {{"4000.50", 4, 4}});
  return bc;
}

inline std::vector<rb::BreakoutCase> synth_pool(int count, std::uint64_t seed,
                                                const char* prefix = "pool") {
  rb::SynthSpec spec;
  spec.count = count + count % 2;  // the default 0.5 fractions need an even batch
  spec.seed = seed;
  spec.id_prefix = prefix;
  std::vector<rb::BreakoutCase> cases = rb::synth_batch(spec);
  cases.resize(static_cast<std::size_t>(count));
  return cases;
}

template <typename F>
void expect_errc(rb::Errc code, F&& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected error " << rb::errc_name(code);
  } catch (const rb::Error& e) {
    EXPECT_EQ(rb::errc_name(e.code()), rb::errc_name(code)) << e.what();
  }
}

}  // namespace rbtest
