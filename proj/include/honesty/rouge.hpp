#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "honesty/rational.hpp"
#include "honesty/text.hpp"

namespace honesty {

/// Longest common subsequence length over token sequences.
inline size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Rouge-L F-measure over whitespace tokens, exact rational:
/// P = LCS/|b|, R = LCS/|a|, F_beta = (1+beta^2)PR / (R + beta^2 P).
/// 0 when either side is empty. beta = 1 is the symmetric default.
inline Rational rouge_l_exact(const std::vector<std::string>& a,
                              const std::vector<std::string>& b,
                              const Rational& beta = Rational(1)) {
  if (a.empty() || b.empty()) return Rational(0);
  const long long lcs = static_cast<long long>(lcs_length(a, b));
  if (lcs == 0) return Rational(0);
  const Rational p(lcs, static_cast<long long>(b.size()));
  const Rational r(lcs, static_cast<long long>(a.size()));
  const Rational b2 = beta * beta;
  return (Rational(1) + b2) * p * r / (r + b2 * p);
}

inline Rational rouge_l_exact(std::string_view a, std::string_view b,
                              const Rational& beta = Rational(1)) {
  return rouge_l_exact(whitespace_tokens(a), whitespace_tokens(b), beta);
}

inline double rouge_l(std::string_view a, std::string_view b) {
  return boost::rational_cast<double>(rouge_l_exact(a, b));
}

/// Greedy dedup in input order: a candidate is accepted iff its Rouge-L
/// against every previously accepted string stays below the threshold.
/// Order-dependent by design, and idempotent on its own output.
inline std::vector<std::string> dedup_by_rouge(const std::vector<std::string>& candidates,
                                               const Rational& threshold = Rational(7, 10),
                                               const Rational& beta = Rational(1)) {
  std::vector<std::string> accepted;
  std::vector<std::vector<std::string>> accepted_tokens;
  for (const auto& c : candidates) {
    auto tokens = whitespace_tokens(c);
    bool keep = true;
    for (const auto& prev : accepted_tokens) {
      if (rouge_l_exact(tokens, prev, beta) >= threshold) {
        keep = false;
        break;
      }
    }
    if (keep) {
      accepted.push_back(c);
      accepted_tokens.push_back(std::move(tokens));
    }
  }
  return accepted;
}

}  // namespace honesty
