#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace vcap {

__extension__ typedef __int128 Int128;

/// Exact currency amount with seven fractional digits, stored as an integer
/// count of 1e-7 units. Sums are exact; only division rounds (half-even).
class Money {
 public:
  static constexpr int kFractionDigits = 7;
  static constexpr std::int64_t kUnitsPerWhole = 10'000'000;

  constexpr Money() = default;

  static constexpr Money from_units(std::int64_t units) {
    Money m;
    m.units_ = units;
    return m;
  }

  /// Parses a plain decimal literal such as "2", "0.60" or "-1.25". At most
  /// seven fractional digits; no exponents.
  static Money parse(std::string_view text);

  constexpr std::int64_t units() const { return units_; }
  double to_double() const { return static_cast<double>(units_) / kUnitsPerWhole; }

  /// Always prints all seven fractional digits: "0.0930096", "2.0000000".
  std::string to_string() const;

  /// Rounds numerator/denominator (in units) half-to-even.
  static Money from_ratio(Int128 numerator_units, Int128 denominator);

  Money divided_by(std::int64_t divisor) const;

  constexpr Money& operator+=(Money other) {
    units_ += other.units_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) { return a += b; }
  friend constexpr Money operator-(Money a, Money b) {
    return from_units(a.units_ - b.units_);
  }
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  std::int64_t units_ = 0;
};

}  // namespace vcap
