#pragma once

#include <cctype>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "rangebreak/errors.hpp"

namespace rangebreak {

// Prices are kept in integer "minor units" (10^-decimals of the quote
// currency), so equality and ordering are exact. tick_size fixes both the
// grid and the decimal precision used for rendering: 0.25 -> 2 decimals.
struct TickSize {
  std::int64_t units = 25;  // tick size expressed in minor units
  int decimals = 2;         // digits after the decimal point

  auto operator<=>(const TickSize&) const = default;
};

struct Price {
  std::int64_t minor = 0;

  auto operator<=>(const Price&) const = default;
};

namespace detail {

inline std::int64_t pow10(int n) {
  std::int64_t v = 1;
  for (int i = 0; i < n; ++i) v *= 10;
  return v;
}

// Parses a non-negative decimal literal into minor units at `decimals`
// precision. Extra fractional digits are allowed only when zero.
inline std::int64_t parse_decimal_minor(std::string_view text, int decimals, Errc errc) {
  if (text.empty()) fail(errc, "empty decimal");
  std::size_t pos = 0;
  std::int64_t whole = 0;
  bool any_digit = false;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    whole = whole * 10 + (text[pos] - '0');
    ++pos;
    any_digit = true;
  }
  std::int64_t frac = 0;
  int frac_digits = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      if (frac_digits < decimals) {
        frac = frac * 10 + (text[pos] - '0');
        ++frac_digits;
      } else if (text[pos] != '0') {
        fail(errc, "more fractional digits than the tick size allows: " + std::string(text));
      }
      ++pos;
      any_digit = true;
    }
  }
  if (!any_digit || pos != text.size()) fail(errc, "not a decimal number: " + std::string(text));
  while (frac_digits < decimals) {
    frac *= 10;
    ++frac_digits;
  }
  return whole * pow10(decimals) + frac;
}

inline std::string render_minor(std::int64_t minor, int decimals) {
  std::int64_t scale = pow10(decimals);
  std::int64_t whole = minor / scale;
  std::int64_t frac = minor % scale;
  std::string out = std::to_string(whole);
  if (decimals > 0) {
    std::string f = std::to_string(frac);
    out += '.';
    out.append(static_cast<std::size_t>(decimals) - f.size(), '0');
    out += f;
  }
  return out;
}

}  // namespace detail

// Accepts plain decimal strings such as "0.25", "1", "0.005". Trailing
// fractional zeros do not change the grid: "0.250" == "0.25".
inline TickSize parse_tick_size(std::string_view text) {
  std::size_t dot = text.find('.');
  int decimals = dot == std::string_view::npos ? 0 : static_cast<int>(text.size() - dot - 1);
  if (decimals > 9) fail(Errc::bad_tick_size, "too many decimals: " + std::string(text));
  std::int64_t units = detail::parse_decimal_minor(text, decimals, Errc::bad_tick_size);
  while (decimals > 0 && units % 10 == 0) {
    units /= 10;
    --decimals;
  }
  if (units <= 0) fail(Errc::bad_tick_size, "tick size must be positive: " + std::string(text));
  return TickSize{units, decimals};
}

inline std::string render_tick_size(const TickSize& ts) {
  return detail::render_minor(ts.units, ts.decimals);
}

inline bool on_grid(Price price, const TickSize& ts) { return price.minor % ts.units == 0; }

inline Price parse_price(std::string_view text, const TickSize& ts) {
  std::int64_t minor = detail::parse_decimal_minor(text, ts.decimals, Errc::bad_price);
  return Price{minor};
}

inline std::string render_price(Price price, const TickSize& ts) {
  return detail::render_minor(price.minor, ts.decimals);
}

inline double price_to_double(Price price, const TickSize& ts) {
  return static_cast<double>(price.minor) / static_cast<double>(detail::pow10(ts.decimals));
}

inline Price ticks_above(Price price, std::int64_t n, const TickSize& ts) {
  return Price{price.minor + n * ts.units};
}

}  // namespace rangebreak
