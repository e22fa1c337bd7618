#include <doctest.h>

#include <random>

#include "honesty/rouge.hpp"

using namespace honesty;

namespace {

// Brute-force oracle: maximum length over all subsequences of `a` that are
// also subsequences of `b`. Exponential; only for short sequences.
bool is_subsequence(const std::vector<std::string>& needle, const std::vector<std::string>& hay) {
  size_t i = 0;
  for (const auto& tok : hay) {
    if (i < needle.size() && needle[i] == tok) ++i;
  }
  return i == needle.size();
}

size_t brute_force_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  size_t best = 0;
  const size_t n = a.size();
  for (size_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<std::string> sub;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

Rational oracle_f(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return Rational(0);
  long long lcs = static_cast<long long>(brute_force_lcs(a, b));
  if (lcs == 0) return Rational(0);
  Rational p(lcs, static_cast<long long>(b.size()));
  Rational r(lcs, static_cast<long long>(a.size()));
  return 2 * p * r / (p + r);
}

std::vector<std::string> seq_from_code(unsigned code, size_t len, int alphabet) {
  std::vector<std::string> out;
  for (size_t i = 0; i < len; ++i) {
    out.push_back(std::string(1, static_cast<char>('a' + code % alphabet)));
    code /= alphabet;
  }
  return out;
}

}  // namespace

TEST_CASE("rouge_l basic values") {
  CHECK(rouge_l_exact("who won the cup", "who won the cup") == Rational(1));
  CHECK(rouge_l_exact("alpha beta", "gamma delta") == Rational(0));
  CHECK(rouge_l_exact("", "anything") == Rational(0));
  CHECK(rouge_l_exact("anything", "") == Rational(0));
  SUBCASE("worked example: LCS 3 of 4 tokens each side") {
    // P = R = 3/4, F = 0.75
    auto f = rouge_l_exact("who won the cup", "who won the race");
    CHECK(f == Rational(3, 4));
    CHECK(oracle_f(whitespace_tokens("who won the cup"), whitespace_tokens("who won the race")) ==
          Rational(3, 4));
  }
}

TEST_CASE("rouge_l equals the brute-force oracle exhaustively up to length 6") {
  // all pairs over a binary alphabet, lengths 0..6 each side
  std::vector<std::vector<std::string>> all;
  for (size_t len = 0; len <= 6; ++len) {
    unsigned count = 1;
    for (size_t i = 0; i < len; ++i) count *= 2;
    for (unsigned code = 0; code < count; ++code) all.push_back(seq_from_code(code, len, 2));
  }
  REQUIRE(all.size() == 127);
  for (const auto& a : all) {
    for (const auto& b : all) {
      CHECK(rouge_l_exact(a, b) == oracle_f(a, b));
    }
  }
}

TEST_CASE("rouge_l equals the oracle on random pairs") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 1000; ++trial) {
    auto draw = [&] {
      size_t len = rng() % 13;
      std::vector<std::string> s;
      for (size_t i = 0; i < len; ++i) s.push_back(std::string(1, static_cast<char>('a' + rng() % 4)));
      return s;
    };
    auto a = draw();
    auto b = draw();
    if (a.size() > 12) a.resize(12);
    // oracle enumerates subsequences of a; cap its side
    CHECK(rouge_l_exact(a, b) == oracle_f(a, b));
  }
}

TEST_CASE("rouge_l symmetry and identity (beta = 1)") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 300; ++trial) {
    auto draw = [&] {
      size_t len = rng() % 8;
      std::vector<std::string> s;
      for (size_t i = 0; i < len; ++i) s.push_back(std::string(1, static_cast<char>('a' + rng() % 3)));
      return s;
    };
    auto a = draw();
    auto b = draw();
    CHECK(rouge_l_exact(a, b) == rouge_l_exact(b, a));
    if (!a.empty()) CHECK(rouge_l_exact(a, a) == Rational(1));
  }
}

TEST_CASE("beta skews the F-measure toward recall") {
  // a = reference (recall side), b = candidate (precision side)
  auto a = whitespace_tokens("one two three four");
  auto b = whitespace_tokens("one two");
  // P = 1, R = 1/2; beta = 1 -> 2/3; beta = 3 -> (1+9)*P*R/(R+9P) = 10/19
  CHECK(rouge_l_exact(a, b) == Rational(2, 3));
  CHECK(rouge_l_exact(a, b, Rational(3)) == Rational(10, 19));
}

TEST_CASE("dedup_by_rouge is greedy in input order") {
  SUBCASE("single candidate accepted") {
    auto out = dedup_by_rouge({"who discovered penicillin"});
    CHECK(out.size() == 1);
  }
  SUBCASE("exact duplicate rejected") {
    auto out = dedup_by_rouge({"who discovered penicillin", "who discovered penicillin"});
    CHECK(out.size() == 1);
  }
  SUBCASE("near-duplicate below threshold accepted") {
    // 13 tokens each, LCS 9 -> F = 9/13 < 7/10
    std::string a = "t1 t2 t3 t4 t5 t6 t7 t8 t9 x1 x2 x3 x4";
    std::string b = "t1 t2 t3 t4 t5 t6 t7 t8 t9 y1 y2 y3 y4";
    REQUIRE(rouge_l_exact(a, b) == Rational(9, 13));
    REQUIRE(Rational(9, 13) < Rational(7, 10));
    auto out = dedup_by_rouge({a, b});
    CHECK(out.size() == 2);
  }
  SUBCASE("near-duplicate at threshold rejected") {
    // 10 tokens each, LCS 7 -> F = 7/10 == threshold, >= rejects
    std::string a = "t1 t2 t3 t4 t5 t6 t7 x1 x2 x3";
    std::string b = "t1 t2 t3 t4 t5 t6 t7 y1 y2 y3";
    REQUIRE(rouge_l_exact(a, b) == Rational(7, 10));
    auto out = dedup_by_rouge({a, b});
    CHECK(out.size() == 1);
  }
  SUBCASE("idempotence") {
    std::mt19937_64 rng(53);
    std::vector<std::string> candidates;
    for (int i = 0; i < 40; ++i) {
      std::string s;
      size_t len = 3 + rng() % 6;
      for (size_t j = 0; j < len; ++j) {
        s += static_cast<char>('a' + rng() % 5);
        s += ' ';
      }
      candidates.push_back(s);
    }
    auto once = dedup_by_rouge(candidates);
    auto twice = dedup_by_rouge(once);
    CHECK(once == twice);
  }
}
