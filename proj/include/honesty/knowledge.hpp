#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "honesty/categorize.hpp"
#include "honesty/rational.hpp"
#include "honesty/records.hpp"

namespace honesty {

/// The m temperature-1 sample labels for one question.
struct SampledResponses {
  std::string question_id;
  std::vector<Categorization> samples;
  long long m = 0;

  static SampledResponses make(std::string question_id, std::vector<Categorization> samples) {
    SampledResponses s;
    s.question_id = std::move(question_id);
    s.m = static_cast<long long>(samples.size());
    s.samples = std::move(samples);
    if (s.m < 1) throw std::invalid_argument("SampledResponses: m must be >= 1");
    return s;
  }
};

/// Fraction of the m samples that are strictly correct (c = 1); idk samples
/// count as not-correct. Exact, denominator m.
struct ExpectedAccuracy {
  long long correct = 0;
  long long m = 1;

  Rational value() const { return Rational(correct, m); }
  bool is_zero() const { return correct == 0; }
  std::string to_string() const { return std::to_string(correct) + "/" + std::to_string(m); }
};

inline ExpectedAccuracy expected_accuracy(const SampledResponses& s) {
  ExpectedAccuracy ea;
  ea.m = s.m;
  for (const auto& label : s.samples) ea.correct += label.c == kCorrect ? 1 : 0;
  return ea;
}

/// Known/unknown decision of the threshold strategies: 1 iff ea >= tau.
/// Comparison is exact rational, so the boundary is bit-stable.
inline int k_absolute(const ExpectedAccuracy& ea, const Rational& tau) {
  if (tau <= Rational(0) || tau > Rational(1)) {
    throw std::invalid_argument("tau must lie in (0, 1]");
  }
  return ea.value() >= tau ? 1 : -1;
}

/// Per-sample variant used by the sample-expansion strategy.
inline int k_per_response(int c_i) { return c_i == kCorrect ? 1 : -1; }

/// Synthesis knobs; defaults m = 10, tau = 1/10.
struct StrategyConfig {
  long long m = 10;
  Rational tau = Rational(1, 10);
  std::string idk_template;  // empty = library default
  uint64_t seed = 0;
};

/// One row of the per-question knowledge table.
struct KnowledgeRow {
  std::string question_id;
  long long ea_numerator = 0;
  long long m = 1;
  int k = -1;

  Json to_json() const {
    return Json{{"question_id", question_id}, {"ea_numerator", ea_numerator}, {"m", m}, {"k", k}};
  }

  static KnowledgeRow from_json(const Json& j) {
    KnowledgeRow r;
    r.question_id = j.at("question_id").get<std::string>();
    r.ea_numerator = j.at("ea_numerator").get<long long>();
    r.m = j.at("m").get<long long>();
    r.k = j.at("k").get<int>();
    return r;
  }
};

/// Groups a categorized temperature-1 sample file by question, ordered by
/// sample_index. Questions with a sample count different from m are
/// reported separately, not silently dropped.
struct GroupedSamples {
  std::map<std::string, std::vector<CategorizedRecord>> by_question;
  std::vector<std::string> incomplete;  // question ids with != m samples

  static GroupedSamples group(const std::vector<CategorizedRecord>& records, long long m) {
    GroupedSamples g;
    for (const auto& r : records) g.by_question[r.question_id].push_back(r);
    for (auto& [id, recs] : g.by_question) {
      std::sort(recs.begin(), recs.end(),
                [](const CategorizedRecord& a, const CategorizedRecord& b) {
                  return a.sample_index < b.sample_index;
                });
      if (static_cast<long long>(recs.size()) != m) g.incomplete.push_back(id);
    }
    return g;
  }
};

}  // namespace honesty
