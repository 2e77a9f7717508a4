#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rangebreak/errors.hpp"
#include "rangebreak/prices.hpp"

namespace rangebreak {

enum class Direction { Up, Down };
enum class Side { Buyers, Sellers, Balanced };
enum class Verdict { TrueBreakout, FalseBreakout };
enum class StageId { S1, S2, S3 };

inline constexpr StageId kAllStages[] = {StageId::S1, StageId::S2, StageId::S3};
static_assert(sizeof(kAllStages) / sizeof(kAllStages[0]) == 3);

inline const char* to_string(Direction d) { return d == Direction::Up ? "Up" : "Down"; }
inline const char* to_string(Side s) {
  switch (s) {
    case Side::Buyers: return "Buyers";
    case Side::Sellers: return "Sellers";
    case Side::Balanced: return "Balanced";
  }
  return "?";
}
inline const char* to_string(Verdict v) {
  return v == Verdict::TrueBreakout ? "TrueBreakout" : "FalseBreakout";
}
inline const char* to_string(StageId s) {
  switch (s) {
    case StageId::S1: return "S1";
    case StageId::S2: return "S2";
    case StageId::S3: return "S3";
  }
  return "?";
}

inline Direction direction_from_string(const std::string& text) {
  if (text == "Up") return Direction::Up;
  if (text == "Down") return Direction::Down;
  fail(Errc::parse_error, "not a direction: " + text);
}
inline Side side_from_string(const std::string& text) {
  if (text == "Buyers") return Side::Buyers;
  if (text == "Sellers") return Side::Sellers;
  if (text == "Balanced") return Side::Balanced;
  fail(Errc::parse_error, "not a side: " + text);
}
inline Verdict verdict_from_string(const std::string& text) {
  if (text == "TrueBreakout") return Verdict::TrueBreakout;
  if (text == "FalseBreakout") return Verdict::FalseBreakout;
  fail(Errc::parse_error, "not a verdict: " + text);
}
inline StageId stage_from_string(const std::string& text) {
  if (text == "S1") return StageId::S1;
  if (text == "S2") return StageId::S2;
  if (text == "S3") return StageId::S3;
  fail(Errc::parse_error, "not a stage id: " + text);
}

// One traded price level inside a time tick. A level with no volume on
// either side would not appear in a footprint, so both-zero is invalid.
struct PriceLevelRow {
  Price price;
  std::int64_t buy_volume = 0;
  std::int64_t sell_volume = 0;

  auto operator<=>(const PriceLevelRow&) const = default;
};

// One time tick of a footprint chart: open/close plus per-level volumes,
// levels sorted ascending by price.
struct FootprintTick {
  std::int64_t index = 0;
  Price open;
  Price close;
  std::vector<PriceLevelRow> levels;

  auto operator<=>(const FootprintTick&) const = default;
};

struct GroundTruth {
  Direction direction = Direction::Up;
  Price resistance;
  Side dominant_side = Side::Buyers;
  Verdict verdict = Verdict::TrueBreakout;

  auto operator<=>(const GroundTruth&) const = default;
};

// A detection instance: `window_len` history ticks, the breakout tick, and
// `confirm_closes - 1` confirmation ticks, all on one tick grid.
struct BreakoutCase {
  std::string case_id;
  TickSize tick_size;
  int window_len = 10;
  int confirm_closes = 2;
  std::vector<FootprintTick> history;
  FootprintTick breakout_tick;
  std::vector<FootprintTick> confirmation;
  std::optional<GroundTruth> labels;

  auto operator<=>(const BreakoutCase&) const = default;
};

inline Price tick_high(const FootprintTick& tick) {
  if (tick.levels.empty()) fail(Errc::empty_levels, "tick " + std::to_string(tick.index));
  return tick.levels.back().price;
}

inline Price tick_low(const FootprintTick& tick) {
  if (tick.levels.empty()) fail(Errc::empty_levels, "tick " + std::to_string(tick.index));
  return tick.levels.front().price;
}

inline void validate_tick(const FootprintTick& tick, const TickSize& ts) {
  const std::string where = "tick " + std::to_string(tick.index);
  if (tick.levels.empty()) fail(Errc::empty_levels, where);
  for (std::size_t i = 0; i < tick.levels.size(); ++i) {
    const PriceLevelRow& row = tick.levels[i];
    if (!on_grid(row.price, ts)) {
      fail(Errc::quantization_error,
           where + ": level price " + detail::render_minor(row.price.minor, ts.decimals) +
               " is not a multiple of the tick size");
    }
    if (row.buy_volume < 0 || row.sell_volume < 0) fail(Errc::negative_volume, where);
    if (row.buy_volume == 0 && row.sell_volume == 0) {
      fail(Errc::zero_volume_level, where + ": level with no volume on either side");
    }
    if (i > 0 && !(tick.levels[i - 1].price < row.price)) fail(Errc::unsorted_levels, where);
  }
  if (!on_grid(tick.open, ts) || !on_grid(tick.close, ts)) {
    fail(Errc::quantization_error, where + ": open/close off the tick grid");
  }
  auto is_level = [&](Price p) {
    return std::any_of(tick.levels.begin(), tick.levels.end(),
                       [&](const PriceLevelRow& row) { return row.price == p; });
  };
  if (!is_level(tick.open)) fail(Errc::price_out_of_range, where + ": open is not a traded level");
  if (!is_level(tick.close)) fail(Errc::price_out_of_range, where + ": close is not a traded level");
}

inline void validate_case(const BreakoutCase& bc) {
  if (bc.window_len < 1) fail(Errc::window_length_error, bc.case_id + ": window_len < 1");
  if (bc.confirm_closes < 1) fail(Errc::window_length_error, bc.case_id + ": confirm_closes < 1");
  if (static_cast<int>(bc.history.size()) != bc.window_len) {
    fail(Errc::window_length_error, bc.case_id + ": history has " +
                                        std::to_string(bc.history.size()) + " ticks, expected " +
                                        std::to_string(bc.window_len));
  }
  if (static_cast<int>(bc.confirmation.size()) != bc.confirm_closes - 1) {
    fail(Errc::window_length_error, bc.case_id + ": confirmation has " +
                                        std::to_string(bc.confirmation.size()) +
                                        " ticks, expected " + std::to_string(bc.confirm_closes - 1));
  }
  std::vector<const FootprintTick*> ordered;
  for (const FootprintTick& t : bc.history) ordered.push_back(&t);
  ordered.push_back(&bc.breakout_tick);
  for (const FootprintTick& t : bc.confirmation) ordered.push_back(&t);
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    // A tick whose every price misses the case grid was quantized to a
    // different tick size; a partial miss is corrupt data and surfaces as
    // QuantizationError from validate_tick below.
    const FootprintTick& t = *ordered[i];
    if (!t.levels.empty()) {
      bool any_on_grid = on_grid(t.open, bc.tick_size) || on_grid(t.close, bc.tick_size);
      for (const PriceLevelRow& row : t.levels) any_on_grid = any_on_grid || on_grid(row.price, bc.tick_size);
      if (!any_on_grid) {
        fail(Errc::mixed_tick_size,
             bc.case_id + ": tick " + std::to_string(t.index) + " is on a different price grid");
      }
    }
    validate_tick(*ordered[i], bc.tick_size);
    if (i > 0 && ordered[i]->index != ordered[i - 1]->index + 1) {
      fail(Errc::non_contiguous_indices,
           bc.case_id + ": tick " + std::to_string(ordered[i]->index) + " follows " +
               std::to_string(ordered[i - 1]->index));
    }
  }
  if (bc.labels) {
    if (!on_grid(bc.labels->resistance, bc.tick_size)) {
      fail(Errc::quantization_error, bc.case_id + ": labeled resistance off the tick grid");
    }
  }
}

// All ticks of a case in time order: history, breakout, confirmation.
inline std::vector<FootprintTick> case_ticks(const BreakoutCase& bc) {
  std::vector<FootprintTick> out = bc.history;
  out.push_back(bc.breakout_tick);
  out.insert(out.end(), bc.confirmation.begin(), bc.confirmation.end());
  return out;
}

}  // namespace rangebreak
