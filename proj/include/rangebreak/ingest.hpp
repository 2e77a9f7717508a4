#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rangebreak/footprint.hpp"
#include "rangebreak/io.hpp"

namespace rangebreak {

inline constexpr const char* kFootprintCsvHeader = "tick,price,buy,sell,open,close";
inline constexpr int kCaseSchemaVersion = 1;

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline std::int64_t parse_int_field(const std::string& text, int line_no, const char* what) {
  if (text.empty()) fail(Errc::parse_error, "line " + std::to_string(line_no) + ": empty " + what);
  std::size_t pos = 0;
  bool negative = text[0] == '-';
  if (negative) pos = 1;
  std::int64_t value = 0;
  if (pos == text.size()) fail(Errc::parse_error, "line " + std::to_string(line_no) + ": bad " + what);
  for (; pos < text.size(); ++pos) {
    if (!std::isdigit(static_cast<unsigned char>(text[pos]))) {
      fail(Errc::parse_error,
           "line " + std::to_string(line_no) + ": bad " + what + " '" + text + "'");
    }
    value = value * 10 + (text[pos] - '0');
  }
  return negative ? -value : value;
}

inline bool parse_flag_field(const std::string& text, int line_no, const char* what) {
  if (text == "0") return false;
  if (text == "1") return true;
  fail(Errc::parse_error, "line " + std::to_string(line_no) + ": " + what + " must be 0 or 1");
}

}  // namespace detail

// One row of the raw export: a single price level of a single tick, with
// flags marking which level carries the open and close prints.
struct RawFootprintRow {
  std::int64_t tick_index = 0;
  Price price;
  std::int64_t buy_volume = 0;
  std::int64_t sell_volume = 0;
  bool open_flag = false;
  bool close_flag = false;
};

inline std::vector<FootprintTick> parse_footprint_csv(std::istream& input, const TickSize& ts) {
  std::string line;
  if (!std::getline(input, line) || detail::strip_cr(line) != kFootprintCsvHeader) {
    fail(Errc::header_mismatch, "expected header '" + std::string(kFootprintCsvHeader) + "'");
  }
  std::map<std::int64_t, std::vector<RawFootprintRow>> by_tick;
  int line_no = 1;
  while (std::getline(input, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != 6) {
      fail(Errc::parse_error, "line " + std::to_string(line_no) + ": expected 6 fields, got " +
                                  std::to_string(fields.size()));
    }
    RawFootprintRow row;
    row.tick_index = detail::parse_int_field(fields[0], line_no, "tick index");
    try {
      row.price = parse_price(fields[1], ts);
    } catch (const Error&) {
      fail(Errc::parse_error, "line " + std::to_string(line_no) + ": bad price '" + fields[1] + "'");
    }
    row.buy_volume = detail::parse_int_field(fields[2], line_no, "buy volume");
    row.sell_volume = detail::parse_int_field(fields[3], line_no, "sell volume");
    row.open_flag = detail::parse_flag_field(fields[4], line_no, "open flag");
    row.close_flag = detail::parse_flag_field(fields[5], line_no, "close flag");
    by_tick[row.tick_index].push_back(row);
  }
  std::vector<FootprintTick> ticks;
  for (auto& [index, rows] : by_tick) {
    FootprintTick tick;
    tick.index = index;
    std::optional<Price> open;
    std::optional<Price> close;
    std::sort(rows.begin(), rows.end(),
              [](const RawFootprintRow& a, const RawFootprintRow& b) { return a.price < b.price; });
    for (const RawFootprintRow& row : rows) {
      if (!tick.levels.empty() && tick.levels.back().price == row.price) {
        fail(Errc::parse_error, "tick " + std::to_string(index) + ": duplicate price level " +
                                    render_price(row.price, ts));
      }
      tick.levels.push_back(PriceLevelRow{row.price, row.buy_volume, row.sell_volume});
      if (row.open_flag) {
        if (open) fail(Errc::duplicate_open_flag, "tick " + std::to_string(index));
        open = row.price;
      }
      if (row.close_flag) {
        if (close) fail(Errc::duplicate_close_flag, "tick " + std::to_string(index));
        close = row.price;
      }
    }
    if (!open) fail(Errc::missing_open_flag, "tick " + std::to_string(index));
    if (!close) fail(Errc::missing_close_flag, "tick " + std::to_string(index));
    tick.open = *open;
    tick.close = *close;
    validate_tick(tick, ts);
    ticks.push_back(std::move(tick));
  }
  return ticks;
}

inline std::string write_footprint_csv(const std::vector<FootprintTick>& ticks, const TickSize& ts) {
  std::string out = kFootprintCsvHeader;
  out += '\n';
  for (const FootprintTick& tick : ticks) {
    for (const PriceLevelRow& row : tick.levels) {
      out += std::to_string(tick.index);
      out += ',';
      out += render_price(row.price, ts);
      out += ',';
      out += std::to_string(row.buy_volume);
      out += ',';
      out += std::to_string(row.sell_volume);
      out += ',';
      out += (tick.open == row.price ? "1" : "0");
      out += ',';
      out += (tick.close == row.price ? "1" : "0");
      out += '\n';
    }
  }
  return out;
}

// Slides a breakout position over a contiguous tick stream: each case takes
// window_len ticks of history and confirm_closes - 1 ticks of confirmation.
inline std::vector<BreakoutCase> extract_cases(const std::vector<FootprintTick>& ticks,
                                               int window_len, int confirm_closes,
                                               const TickSize& ts,
                                               const std::string& id_prefix = "case") {
  if (window_len < 1 || confirm_closes < 1) {
    fail(Errc::window_length_error, "window_len and confirm_closes must be >= 1");
  }
  const int need = window_len + confirm_closes;
  if (static_cast<int>(ticks.size()) < need) {
    fail(Errc::insufficient_ticks, "have " + std::to_string(ticks.size()) + " ticks, need " +
                                       std::to_string(need));
  }
  for (std::size_t i = 1; i < ticks.size(); ++i) {
    if (ticks[i].index != ticks[i - 1].index + 1) {
      fail(Errc::non_contiguous_indices, "tick " + std::to_string(ticks[i].index) + " follows " +
                                             std::to_string(ticks[i - 1].index));
    }
  }
  std::vector<BreakoutCase> cases;
  const int last_breakout = static_cast<int>(ticks.size()) - confirm_closes;
  for (int t = window_len; t <= last_breakout; ++t) {
    BreakoutCase bc;
    bc.case_id = id_prefix + "-t" + std::to_string(ticks[static_cast<std::size_t>(t)].index);
    bc.tick_size = ts;
    bc.window_len = window_len;
    bc.confirm_closes = confirm_closes;
    bc.history.assign(ticks.begin() + (t - window_len), ticks.begin() + t);
    bc.breakout_tick = ticks[static_cast<std::size_t>(t)];
    bc.confirmation.assign(ticks.begin() + t + 1, ticks.begin() + t + confirm_closes);
    validate_case(bc);
    cases.push_back(std::move(bc));
  }
  return cases;
}

// Fixed-layout prompt text. One block per tick: a header with index, open
// and close, then one "price | buy | sell" row per level, prices descending
// to match the chart's top-down price axis.
inline std::string render_data_table(const BreakoutCase& bc) {
  const TickSize& ts = bc.tick_size;
  std::string out = "tick size: " + render_tick_size(ts) + "\n";
  auto block = [&](const FootprintTick& tick, const char* tag) {
    out += "tick " + std::to_string(tick.index);
    out += tag;
    out += " | open " + render_price(tick.open, ts) + " | close " + render_price(tick.close, ts);
    out += '\n';
    for (auto it = tick.levels.rbegin(); it != tick.levels.rend(); ++it) {
      out += "  " + render_price(it->price, ts) + " | buy " + std::to_string(it->buy_volume) +
             " | sell " + std::to_string(it->sell_volume) + "\n";
    }
  };
  for (const FootprintTick& tick : bc.history) block(tick, "");
  block(bc.breakout_tick, " (current)");
  for (const FootprintTick& tick : bc.confirmation) block(tick, " (next)");
  return out;
}

namespace detail {

inline nlohmann::json tick_to_json(const FootprintTick& tick, const TickSize& ts) {
  nlohmann::json levels = nlohmann::json::array();
  for (const PriceLevelRow& row : tick.levels) {
    levels.push_back({{"price", render_price(row.price, ts)},
                      {"buy", row.buy_volume},
                      {"sell", row.sell_volume}});
  }
  return {{"index", tick.index},
          {"open", render_price(tick.open, ts)},
          {"close", render_price(tick.close, ts)},
          {"levels", std::move(levels)}};
}

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(Errc::schema_version_mismatch, std::string("missing field '") + key + "'");
  return *it;
}

inline FootprintTick tick_from_json(const nlohmann::json& j, const TickSize& ts) {
  FootprintTick tick;
  tick.index = require_field(j, "index").get<std::int64_t>();
  tick.open = parse_price(require_field(j, "open").get<std::string>(), ts);
  tick.close = parse_price(require_field(j, "close").get<std::string>(), ts);
  for (const nlohmann::json& row : require_field(j, "levels")) {
    tick.levels.push_back(PriceLevelRow{parse_price(require_field(row, "price").get<std::string>(), ts),
                                        require_field(row, "buy").get<std::int64_t>(),
                                        require_field(row, "sell").get<std::int64_t>()});
  }
  return tick;
}

}  // namespace detail

inline nlohmann::json case_to_json(const BreakoutCase& bc) {
  nlohmann::json ticks = nlohmann::json::array();
  for (const FootprintTick& tick : case_ticks(bc)) {
    ticks.push_back(detail::tick_to_json(tick, bc.tick_size));
  }
  nlohmann::json j = {{"schema_version", kCaseSchemaVersion},
                      {"case_id", bc.case_id},
                      {"tick_size", render_tick_size(bc.tick_size)},
                      {"window_len", bc.window_len},
                      {"confirm_closes", bc.confirm_closes},
                      {"ticks", std::move(ticks)}};
  if (bc.labels) {
    j["labels"] = {{"direction", to_string(bc.labels->direction)},
                   {"resistance", render_price(bc.labels->resistance, bc.tick_size)},
                   {"dominant_side", to_string(bc.labels->dominant_side)},
                   {"verdict", to_string(bc.labels->verdict)}};
  }
  return j;
}

inline BreakoutCase case_from_json(const nlohmann::json& j) {
  const nlohmann::json& version = detail::require_field(j, "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kCaseSchemaVersion) {
    fail(Errc::schema_version_mismatch, "expected schema_version " +
                                            std::to_string(kCaseSchemaVersion) + ", got " +
                                            version.dump());
  }
  BreakoutCase bc;
  bc.case_id = detail::require_field(j, "case_id").get<std::string>();
  bc.tick_size = parse_tick_size(detail::require_field(j, "tick_size").get<std::string>());
  bc.window_len = detail::require_field(j, "window_len").get<int>();
  bc.confirm_closes = detail::require_field(j, "confirm_closes").get<int>();
  const nlohmann::json& ticks = detail::require_field(j, "ticks");
  const int expected = bc.window_len + bc.confirm_closes;
  if (static_cast<int>(ticks.size()) != expected) {
    fail(Errc::schema_version_mismatch, bc.case_id + ": expected " + std::to_string(expected) +
                                            " ticks, got " + std::to_string(ticks.size()));
  }
  std::vector<FootprintTick> all;
  for (const nlohmann::json& tj : ticks) all.push_back(detail::tick_from_json(tj, bc.tick_size));
  bc.history.assign(all.begin(), all.begin() + bc.window_len);
  bc.breakout_tick = all[static_cast<std::size_t>(bc.window_len)];
  bc.confirmation.assign(all.begin() + bc.window_len + 1, all.end());
  if (auto it = j.find("labels"); it != j.end()) {
    const nlohmann::json& labels = *it;
    GroundTruth gt;
    gt.direction = direction_from_string(detail::require_field(labels, "direction").get<std::string>());
    gt.resistance = parse_price(detail::require_field(labels, "resistance").get<std::string>(), bc.tick_size);
    gt.dominant_side = side_from_string(detail::require_field(labels, "dominant_side").get<std::string>());
    gt.verdict = verdict_from_string(detail::require_field(labels, "verdict").get<std::string>());
    bc.labels = gt;
  }
  validate_case(bc);
  return bc;
}

inline void write_case(const BreakoutCase& bc, const std::filesystem::path& path) {
  validate_case(bc);
  atomic_write_file(path, case_to_json(bc).dump(2) + "\n");
}

inline BreakoutCase read_case(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, path.string() + ": " + e.what());
  }
  try {
    return case_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, path.string() + ": " + e.what());
  }
}

}  // namespace rangebreak
