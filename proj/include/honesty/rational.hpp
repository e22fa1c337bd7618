#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

namespace honesty {

/// Exact arithmetic over integer counts. Metrics are rationals internally
/// and only rounded at render time.
using Rational = boost::rational<long long>;

/// Parses a non-negative decimal literal ("0.1", "1", ".25") into an exact
/// rational. Used for --tau and friends so threshold comparisons are
/// bit-stable at the boundary.
inline Rational parse_decimal_rational(std::string_view s) {
  if (s.empty()) throw std::invalid_argument("empty decimal literal");
  long long whole = 0, frac = 0, scale = 1;
  size_t i = 0;
  bool any_digit = false;
  for (; i < s.size() && s[i] != '.'; ++i) {
    if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("bad decimal literal: " + std::string(s));
    whole = whole * 10 + (s[i] - '0');
    any_digit = true;
  }
  if (i < s.size() && s[i] == '.') {
    for (++i; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("bad decimal literal: " + std::string(s));
      if (scale > 1000000000000000LL) throw std::invalid_argument("decimal literal too precise: " + std::string(s));
      frac = frac * 10 + (s[i] - '0');
      scale *= 10;
      any_digit = true;
    }
  }
  if (!any_digit) throw std::invalid_argument("bad decimal literal: " + std::string(s));
  return Rational(whole) + Rational(frac, scale);
}

/// round(x) with ties going up; x must be non-negative.
inline long long round_half_up(const Rational& x) {
  // floor((2n + d) / 2d)
  return (2 * x.numerator() + x.denominator()) / (2 * x.denominator());
}

/// Nearest multiple of 1/100, ties up.
inline Rational round_half_up_2dp(const Rational& x) {
  return Rational(round_half_up(x * 100), 100);
}

/// Renders a (percentage) rational at two decimals, half-up: 7/10 * 100 -> "70.00".
inline std::string fixed2(const Rational& x) {
  long long cents = round_half_up(x * 100);
  std::string out = std::to_string(cents / 100);
  long long rem = cents % 100;
  out.push_back('.');
  out.push_back(static_cast<char>('0' + rem / 10));
  out.push_back(static_cast<char>('0' + rem % 10));
  return out;
}

inline std::string rational_to_string(const Rational& x) {
  return std::to_string(x.numerator()) + "/" + std::to_string(x.denominator());
}

inline Rational parse_rational_string(std::string_view s) {
  auto slash = s.find('/');
  if (slash == std::string_view::npos) return Rational(std::stoll(std::string(s)));
  long long num = std::stoll(std::string(s.substr(0, slash)));
  long long den = std::stoll(std::string(s.substr(slash + 1)));
  return Rational(num, den);
}

}  // namespace honesty
