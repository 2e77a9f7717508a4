#pragma once

#include <cassert>
#include <string>
#include <vector>

#include "rangebreak/footprint.hpp"

namespace rangebreak {

struct ForceReport {
  std::int64_t buy_total = 0;
  std::int64_t sell_total = 0;
  Side dominant_side = Side::Balanced;

  auto operator<=>(const ForceReport&) const = default;
};

struct StageAnswers {
  Direction direction = Direction::Up;
  Price resistance;
  ForceReport force;
  Verdict verdict = Verdict::TrueBreakout;

  auto operator<=>(const StageAnswers&) const = default;
};

struct DetectionReport {
  std::vector<std::string> rationale;  // three stage findings plus a verdict sentence
  Verdict answer = Verdict::TrueBreakout;

  auto operator<=>(const DetectionReport&) const = default;
};

inline Price history_high(const BreakoutCase& bc) {
  Price hi = tick_high(bc.history.front());
  for (const FootprintTick& t : bc.history) hi = std::max(hi, tick_high(t));
  return hi;
}

inline Price history_low(const BreakoutCase& bc) {
  Price lo = tick_low(bc.history.front());
  for (const FootprintTick& t : bc.history) lo = std::min(lo, tick_low(t));
  return lo;
}

// A close inside the history envelope (inclusive) is not a breakout; the
// escape side defines the direction.
inline Direction detect_direction(const BreakoutCase& bc) {
  Price hi = history_high(bc);
  Price lo = history_low(bc);
  if (bc.breakout_tick.close > hi) return Direction::Up;
  if (bc.breakout_tick.close < lo) return Direction::Down;
  fail(Errc::no_breakout_present,
       bc.case_id + ": breakout close " + render_price(bc.breakout_tick.close, bc.tick_size) +
           " lies inside the history range [" + render_price(lo, bc.tick_size) + ", " +
           render_price(hi, bc.tick_size) + "]");
}

inline Price resistance_level(const BreakoutCase& bc, Direction direction) {
  return direction == Direction::Up ? history_high(bc) : history_low(bc);
}

// Sums volume at price levels strictly beyond the resistance (above for Up,
// below for Down) over the breakout tick and all confirmation ticks.
inline ForceReport compare_forces(const BreakoutCase& bc, Direction direction, Price resistance) {
  ForceReport report;
  auto beyond = [&](Price p) {
    return direction == Direction::Up ? p > resistance : p < resistance;
  };
  auto accumulate = [&](const FootprintTick& tick) {
    for (const PriceLevelRow& row : tick.levels) {
      if (!beyond(row.price)) continue;
      report.buy_total += row.buy_volume;
      report.sell_total += row.sell_volume;
    }
  };
  accumulate(bc.breakout_tick);
  for (const FootprintTick& tick : bc.confirmation) accumulate(tick);
  if (report.buy_total > report.sell_total) {
    report.dominant_side = Side::Buyers;
  } else if (report.sell_total > report.buy_total) {
    report.dominant_side = Side::Sellers;
  } else {
    report.dominant_side = Side::Balanced;
  }
  return report;
}

// True breakout iff every close from the breakout tick onward holds strictly
// beyond the resistance; a close exactly at the resistance is a retest.
inline Verdict classify_breakout(const BreakoutCase& bc, Direction direction, Price resistance) {
  auto beyond = [&](Price p) {
    return direction == Direction::Up ? p > resistance : p < resistance;
  };
  if (!beyond(bc.breakout_tick.close)) return Verdict::FalseBreakout;
  for (const FootprintTick& tick : bc.confirmation) {
    if (!beyond(tick.close)) return Verdict::FalseBreakout;
  }
  return Verdict::TrueBreakout;
}

inline StageAnswers run_pipeline(const BreakoutCase& bc) {
  StageAnswers answers;
  answers.direction = detect_direction(bc);
  answers.resistance = resistance_level(bc, answers.direction);
  answers.force = compare_forces(bc, answers.direction, answers.resistance);
  answers.verdict = classify_breakout(bc, answers.direction, answers.resistance);
  // Direction/resistance coherence: the breakout close escaped past the
  // resistance by construction of detect_direction.
  assert(answers.direction == Direction::Up ? bc.breakout_tick.close > answers.resistance
                                            : bc.breakout_tick.close < answers.resistance);
  return answers;
}

inline std::string render_stage1_answer(Direction d) { return to_string(d); }

inline std::string render_stage2_answer(Price resistance, const TickSize& ts) {
  return render_price(resistance, ts);
}

inline std::string render_stage3_answer(const ForceReport& force) {
  return std::string(to_string(force.dominant_side)) + " (buy " +
         std::to_string(force.buy_total) + " vs sell " + std::to_string(force.sell_total) + ")";
}

// Fixed four-sentence template; byte-stable for identical answers.
inline DetectionReport generate_report(const StageAnswers& answers, const TickSize& ts) {
  DetectionReport report;
  report.rationale.push_back(std::string("Stage 1: the breakout direction is ") +
                             (answers.direction == Direction::Up ? "up" : "down") + ".");
  report.rationale.push_back("Stage 2: the resistance level is " +
                             render_price(answers.resistance, ts) + ".");
  std::string force = "Stage 3: buy volume beyond the resistance is " +
                      std::to_string(answers.force.buy_total) + " and sell volume is " +
                      std::to_string(answers.force.sell_total);
  switch (answers.force.dominant_side) {
    case Side::Buyers: force += ", so buyers are the stronger force."; break;
    case Side::Sellers: force += ", so sellers are the stronger force."; break;
    case Side::Balanced: force += ", so neither side dominates."; break;
  }
  report.rationale.push_back(force);
  if (answers.verdict == Verdict::TrueBreakout) {
    report.rationale.push_back(
        "Verdict: every close held beyond the resistance level, so this is a true breakout.");
  } else {
    report.rationale.push_back(
        "Verdict: the closes did not hold beyond the resistance level, so this is a false breakout.");
  }
  report.answer = answers.verdict;
  return report;
}

inline std::string report_text(const DetectionReport& report) {
  std::string out;
  for (std::size_t i = 0; i < report.rationale.size(); ++i) {
    if (i > 0) out += '\n';
    out += report.rationale[i];
  }
  return out;
}

}  // namespace rangebreak
