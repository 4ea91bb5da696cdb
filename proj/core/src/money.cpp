#include "vcap/money.hpp"

#include "vcap/error.hpp"

#include <cstdlib>

namespace vcap {

Money Money::parse(std::string_view text) {
  auto fail = [&] {
    return Error(ErrorKind::Config,
                 "invalid decimal amount '" + std::string(text) + "'");
  };
  std::string_view s = text;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) throw fail();

  Int128 whole = 0;
  std::size_t i = 0;
  bool any_digit = false;
  for (; i < s.size() && s[i] != '.'; ++i) {
    if (s[i] < '0' || s[i] > '9') throw fail();
    whole = whole * 10 + (s[i] - '0');
    any_digit = true;
    if (whole > INT64_MAX / kUnitsPerWhole) throw fail();
  }
  Int128 frac = 0;
  int frac_digits = 0;
  if (i < s.size()) {
    ++i;  // '.'
    for (; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') throw fail();
      if (++frac_digits > kFractionDigits) throw fail();
      frac = frac * 10 + (s[i] - '0');
      any_digit = true;
    }
  }
  if (!any_digit) throw fail();
  for (int d = frac_digits; d < kFractionDigits; ++d) frac *= 10;
  Int128 units = whole * kUnitsPerWhole + frac;
  return from_units(static_cast<std::int64_t>(negative ? -units : units));
}

std::string Money::to_string() const {
  Int128 u = units_;
  bool negative = u < 0;
  if (negative) u = -u;
  auto whole = static_cast<std::uint64_t>(u / kUnitsPerWhole);
  auto frac = static_cast<std::uint64_t>(u % kUnitsPerWhole);
  std::string f = std::to_string(frac);
  f.insert(0, kFractionDigits - f.size(), '0');
  return (negative ? "-" : "") + std::to_string(whole) + "." + f;
}

Money Money::from_ratio(Int128 numerator, Int128 denominator) {
  if (denominator == 0) {
    throw Error(ErrorKind::Precondition, "Money::from_ratio: zero denominator");
  }
  if (denominator < 0) {
    numerator = -numerator;
    denominator = -denominator;
  }
  Int128 q = numerator / denominator;
  Int128 r = numerator % denominator;
  if (r < 0) {
    r += denominator;
    q -= 1;
  }
  // half-to-even on the remainder
  Int128 twice = 2 * r;
  if (twice > denominator || (twice == denominator && (q % 2 != 0))) q += 1;
  return from_units(static_cast<std::int64_t>(q));
}

Money Money::divided_by(std::int64_t divisor) const {
  return from_ratio(units_, divisor);
}

}  // namespace vcap
