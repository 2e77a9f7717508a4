#include "rangebreak/footprint.hpp"

#include <gtest/gtest.h>

#include "support.hpp"

namespace rb = rangebreak;
using rbtest::expect_errc;
using rbtest::kTs;
using rbtest::make_tick;

TEST(EnumStrings, RoundTrip) {
  EXPECT_EQ(rb::direction_from_string(rb::to_string(rb::Direction::Up)), rb::Direction::Up);
  EXPECT_EQ(rb::direction_from_string(rb::to_string(rb::Direction::Down)), rb::Direction::Down);
  for (rb::Side s : {rb::Side::Buyers, rb::Side::Sellers, rb::Side::Balanced}) {
    EXPECT_EQ(rb::side_from_string(rb::to_string(s)), s);
  }
  for (rb::Verdict v : {rb::Verdict::TrueBreakout, rb::Verdict::FalseBreakout}) {
    EXPECT_EQ(rb::verdict_from_string(rb::to_string(v)), v);
  }
  for (rb::StageId st : rb::kAllStages) {
    EXPECT_EQ(rb::stage_from_string(rb::to_string(st)), st);
  }
  expect_errc(rb::Errc::parse_error, [] { rb::direction_from_string("sideways"); });
  expect_errc(rb::Errc::parse_error, [] { rb::stage_from_string("S4"); });
}

TEST(TickExtremes, HighAndLowComeFromSortedLevels) {
  rb::FootprintTick t = make_tick(0, "4000.50", "4001.00",
                                  {{"4000.25", 1, 1}, {"4000.50", 1, 1}, {"4001.00", 1, 1}});
  EXPECT_EQ(rb::render_price(rb::tick_high(t), kTs), "4001.00");
  EXPECT_EQ(rb::render_price(rb::tick_low(t), kTs), "4000.25");
  rb::FootprintTick singleton = make_tick(1, "4001.00", "4001.00", {{"4001.00", 2, 1}});
  EXPECT_EQ(rb::tick_high(singleton), rb::tick_low(singleton));
  rb::FootprintTick empty;
  expect_errc(rb::Errc::empty_levels, [&] { rb::tick_high(empty); });
}

TEST(ValidateTick, AcceptsMinimalSingleLevelTick) {
  rb::FootprintTick t = make_tick(0, "100.00", "100.00", {{"100.00", 5, 3}});
  EXPECT_NO_THROW(rb::validate_tick(t, kTs));
}

TEST(ValidateTick, OpenOffTheGridIsAQuantizationError) {
  rb::FootprintTick t = make_tick(0, "100.00", "100.00", {{"100.00", 5, 3}});
  t.open = rb::parse_price("100.10", kTs);
  expect_errc(rb::Errc::quantization_error, [&] { rb::validate_tick(t, kTs); });
}

TEST(ValidateTick, LevelOffTheGridIsAQuantizationError) {
  rb::FootprintTick t = make_tick(0, "100.00", "100.00", {{"100.00", 5, 3}});
  t.levels.push_back({rb::parse_price("100.10", kTs), 1, 1});
  expect_errc(rb::Errc::quantization_error, [&] { rb::validate_tick(t, kTs); });
}

TEST(ValidateTick, StructuralErrors) {
  rb::FootprintTick empty;
  expect_errc(rb::Errc::empty_levels, [&] { rb::validate_tick(empty, kTs); });

  rb::FootprintTick descending = make_tick(0, "100.00", "100.00", {{"100.00", 1, 1}});
  descending.levels.insert(descending.levels.begin(), {rb::parse_price("100.25", kTs), 1, 1});
  expect_errc(rb::Errc::unsorted_levels, [&] { rb::validate_tick(descending, kTs); });

  rb::FootprintTick dup = make_tick(0, "100.00", "100.00", {{"100.00", 1, 1}, {"100.00", 2, 2}});
  expect_errc(rb::Errc::unsorted_levels, [&] { rb::validate_tick(dup, kTs); });

  rb::FootprintTick negative = make_tick(0, "100.00", "100.00", {{"100.00", -1, 1}});
  expect_errc(rb::Errc::negative_volume, [&] { rb::validate_tick(negative, kTs); });

  rb::FootprintTick dead = make_tick(0, "100.00", "100.00", {{"100.00", 0, 0}});
  expect_errc(rb::Errc::zero_volume_level, [&] { rb::validate_tick(dead, kTs); });

  rb::FootprintTick stray = make_tick(0, "100.25", "100.00", {{"100.00", 1, 1}});
  expect_errc(rb::Errc::price_out_of_range, [&] { rb::validate_tick(stray, kTs); });
}

TEST(ValidateTick, OpenAndCloseStayInsideTradedRange) {
  // Membership in the level list implies low <= open/close <= high.
  rb::BreakoutCase bc = rbtest::up_true_case();
  for (const rb::FootprintTick& t : rb::case_ticks(bc)) {
    EXPECT_LE(rb::tick_low(t), t.open);
    EXPECT_LE(t.open, rb::tick_high(t));
    EXPECT_LE(rb::tick_low(t), t.close);
    EXPECT_LE(t.close, rb::tick_high(t));
  }
}

TEST(ValidateCase, AcceptsHandBuiltCases) {
  EXPECT_NO_THROW(rb::validate_case(rbtest::up_true_case()));
  EXPECT_NO_THROW(rb::validate_case(rbtest::up_false_case()));
  EXPECT_NO_THROW(rb::validate_case(rbtest::down_true_case()));
  EXPECT_NO_THROW(rb::validate_case(rbtest::inside_range_case()));
}

TEST(ValidateCase, IsIdempotent) {
  rb::BreakoutCase bc = rbtest::up_true_case();
  rb::validate_case(bc);
  rb::BreakoutCase again = bc;
  rb::validate_case(again);
  EXPECT_EQ(bc, again);
}

TEST(ValidateCase, WindowLengthMismatch) {
  rb::BreakoutCase bc = rbtest::up_true_case();
  bc.window_len = 10;  // history still has 3 ticks
  expect_errc(rb::Errc::window_length_error, [&] { rb::validate_case(bc); });

  rb::BreakoutCase short_confirm = rbtest::up_true_case();
  short_confirm.confirmation.clear();
  expect_errc(rb::Errc::window_length_error, [&] { rb::validate_case(short_confirm); });

  rb::BreakoutCase bad_window = rbtest::up_true_case();
  bad_window.window_len = 0;
  expect_errc(rb::Errc::window_length_error, [&] { rb::validate_case(bad_window); });
}

TEST(ValidateCase, IndexGapIsNonContiguous) {
  rb::BreakoutCase bc = rbtest::up_true_case();
  bc.breakout_tick.index = 5;  // history ends at 2, so 3 is expected
  expect_errc(rb::Errc::non_contiguous_indices, [&] { rb::validate_case(bc); });
}

TEST(ValidateCase, WholeTickOnAnotherGridIsMixedTickSize) {
  rb::BreakoutCase bc = rbtest::up_true_case();
  rb::TickSize tenths{10, 2};  // 0.10 grid, disjoint from 0.25 except multiples of 0.50
  bc.history[1] = make_tick(1, "4000.30", "4000.30", {{"4000.10", 5, 5}, {"4000.30", 5, 5}}, tenths);
  expect_errc(rb::Errc::mixed_tick_size, [&] { rb::validate_case(bc); });
}

TEST(ValidateCase, PartiallyOffGridTickIsAQuantizationError) {
  rb::BreakoutCase bc = rbtest::up_true_case();
  bc.history[1].levels.push_back({rb::parse_price("4000.60", kTs), 1, 1});
  expect_errc(rb::Errc::quantization_error, [&] { rb::validate_case(bc); });
}

TEST(ValidateCase, LabeledResistanceMustSitOnTheGrid) {
  rb::BreakoutCase bc = rbtest::up_true_case();
  bc.labels = rb::GroundTruth{rb::Direction::Up, rb::parse_price("4001.10", kTs),
                              rb::Side::Buyers, rb::Verdict::TrueBreakout};
  expect_errc(rb::Errc::quantization_error, [&] { rb::validate_case(bc); });
}

TEST(CaseTicks, FlattensInTimeOrder) {
  rb::BreakoutCase bc = rbtest::up_true_case();
  std::vector<rb::FootprintTick> ticks = rb::case_ticks(bc);
  ASSERT_EQ(ticks.size(), 5u);
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    EXPECT_EQ(ticks[i].index, static_cast<std::int64_t>(i));
  }
  EXPECT_EQ(ticks[3], bc.breakout_tick);
}
