#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "honesty/categorize.hpp"
#include "honesty/knowledge.hpp"
#include "honesty/prompts.hpp"
#include "honesty/rng.hpp"

namespace honesty {

class IncompleteSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised defensively when labels say "known" but no correct sample exists.
class NoCorrectSample : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Strategy { absolute, confidence_num, confidence_verb, multisample, baseline_gold };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::absolute: return "absolute";
    case Strategy::confidence_num: return "confidence_num";
    case Strategy::confidence_verb: return "confidence_verb";
    case Strategy::multisample: return "multisample";
    case Strategy::baseline_gold: return "baseline_gold";
  }
  return "?";
}

inline Strategy strategy_from_name(const std::string& name) {
  if (name == "absolute") return Strategy::absolute;
  if (name == "confidence_num" || name == "confidence-num") return Strategy::confidence_num;
  if (name == "confidence_verb" || name == "confidence-verb") return Strategy::confidence_verb;
  if (name == "multisample") return Strategy::multisample;
  if (name == "baseline_gold" || name == "baseline-gold") return Strategy::baseline_gold;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

/// One synthesized (input prompt, target output) pair. provenance is the
/// source sample_index, or a tag: "template" for idk outputs, "gold" for
/// the gold-substitution baseline.
struct TrainingExample {
  std::string question_id;
  std::string input;
  std::string output;
  Strategy strategy = Strategy::absolute;
  ExpectedAccuracy ea;
  std::optional<int> source_sample;  // nullopt -> tag
  std::string tag = "template";

  Json to_json() const {
    Json j{{"question_id", question_id},
           {"input", input},
           {"output", output},
           {"strategy", strategy_name(strategy)},
           {"ea", ea.to_string()}};
    if (source_sample) {
      j["provenance"] = *source_sample;
    } else {
      j["provenance"] = tag;
    }
    return j;
  }

  static TrainingExample from_json(const Json& j) {
    TrainingExample e;
    e.question_id = j.at("question_id").get<std::string>();
    e.input = j.at("input").get<std::string>();
    e.output = j.at("output").get<std::string>();
    e.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    auto ea = j.at("ea").get<std::string>();
    auto slash = ea.find('/');
    e.ea.correct = std::stoll(ea.substr(0, slash));
    e.ea.m = std::stoll(ea.substr(slash + 1));
    if (j.at("provenance").is_number_integer()) {
      e.source_sample = j.at("provenance").get<int>();
    } else {
      e.tag = j.at("provenance").get<std::string>();
    }
    return e;
  }
};

enum class ConfidenceKind { numeric, verbal };

/// Rendered confidence prefix for a known question.
struct ConfidenceRendering {
  ConfidenceKind kind = ConfidenceKind::numeric;
  std::string prefix;  // everything before the answer text
};

inline long long confidence_percent(const ExpectedAccuracy& ea) {
  return round_half_up(ea.value() * 100);
}

/// Verbal bucket 1..6 over expected accuracy: 1 is the idk template,
/// 2..6 split (0,1] into uniform fifths.
inline int verbal_bucket(const ExpectedAccuracy& ea) {
  const Rational v = ea.value();
  if (v == Rational(0)) return 1;
  if (v <= Rational(1, 5)) return 2;
  if (v <= Rational(2, 5)) return 3;
  if (v <= Rational(3, 5)) return 4;
  if (v <= Rational(4, 5)) return 5;
  return 6;
}

inline const char* confidence_template_id(const ExpectedAccuracy& ea, ConfidenceKind kind) {
  if (kind == ConfidenceKind::numeric) {
    return confidence_percent(ea) < 50 ? template_id::confidence_num_low
                                       : template_id::confidence_num_high;
  }
  switch (verbal_bucket(ea)) {
    case 2: return template_id::confidence_verb_2;
    case 3: return template_id::confidence_verb_3;
    case 4: return template_id::confidence_verb_4;
    case 5: return template_id::confidence_verb_5;
    default: return template_id::confidence_verb_6;
  }
}

/// The prefix the output template puts before the model's correct answer.
/// Requires ea > 0; the zero case routes to the idk template instead.
inline ConfidenceRendering render_confidence_prefix(const ExpectedAccuracy& ea,
                                                    ConfidenceKind kind,
                                                    const PromptLibrary& prompts = default_prompts()) {
  if (ea.is_zero()) throw std::invalid_argument("confidence prefix undefined for ea = 0");
  const PromptTemplate& tpl = prompts.get(confidence_template_id(ea, kind));
  static constexpr std::string_view tail = "{response}";
  if (!tpl.body.ends_with(tail)) {
    throw TemplateError("confidence template '" + tpl.id + "' must end with {response}");
  }
  std::string head = tpl.body.substr(0, tpl.body.size() - tail.size());
  ConfidenceRendering out;
  out.kind = kind;
  if (kind == ConfidenceKind::numeric) {
    out.prefix = PromptTemplate::make(tpl.id, head, {"percent"})
                     .render({{"percent", std::to_string(confidence_percent(ea))}});
  } else {
    out.prefix = head;
  }
  return out;
}

/// Per-question inputs to synthesis: the raw samples and their labels,
/// aligned and ordered by sample_index.
struct QuestionSamples {
  QuestionRecord question;
  std::vector<ResponseRecord> responses;
  std::vector<Categorization> labels;
};

namespace detail {

inline void require_complete(const QuestionSamples& qs, long long m) {
  if (static_cast<long long>(qs.responses.size()) != m ||
      qs.labels.size() != qs.responses.size()) {
    throw IncompleteSamples("question '" + qs.question.id + "' has " +
                            std::to_string(qs.responses.size()) + " samples, expected " +
                            std::to_string(m));
  }
}

inline std::vector<size_t> correct_indices(const QuestionSamples& qs) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < qs.labels.size(); ++i) {
    if (qs.labels[i].c == kCorrect) idx.push_back(i);
  }
  return idx;
}

inline size_t pick_correct(const QuestionSamples& qs, const StrategyConfig& cfg,
                           std::string_view stream) {
  auto idx = correct_indices(qs);
  if (idx.empty()) {
    throw NoCorrectSample("question '" + qs.question.id +
                          "' is labeled known but has no correct sample");
  }
  Rng rng(substream_seed(cfg.seed, stream, qs.question.id));
  return idx[rng.below(idx.size())];
}

inline std::string idk_output(const StrategyConfig& cfg, const PromptLibrary& prompts) {
  return cfg.idk_template.empty() ? prompts.idk_response() : cfg.idk_template;
}

}  // namespace detail

/// Known questions get one randomly selected correct sample as the target;
/// unknown questions get the idk response.
inline std::vector<TrainingExample> synth_absolute(const QuestionSamples& qs,
                                                   const StrategyConfig& cfg,
                                                   const PromptLibrary& prompts = default_prompts()) {
  detail::require_complete(qs, cfg.m);
  const ExpectedAccuracy ea = expected_accuracy(
      SampledResponses::make(qs.question.id, qs.labels));
  TrainingExample e;
  e.question_id = qs.question.id;
  e.input = prompts.render_honesty_prompt(qs.question.text);
  e.strategy = Strategy::absolute;
  e.ea = ea;
  if (k_absolute(ea, cfg.tau) == 1) {
    size_t pick = detail::pick_correct(qs, cfg, "synth/absolute");
    e.output = qs.responses[pick].text;
    e.source_sample = qs.responses[pick].sample_index;
  } else {
    e.output = detail::idk_output(cfg, prompts);
    e.tag = "template";
  }
  return {e};
}

/// Same known/unknown rule as the absolute strategy, with a confidence
/// prefix on known outputs and the "any degree of confidence" idk sentence
/// on unknown ones.
inline std::vector<TrainingExample> synth_confidence(const QuestionSamples& qs,
                                                     const StrategyConfig& cfg,
                                                     ConfidenceKind kind,
                                                     const PromptLibrary& prompts = default_prompts()) {
  detail::require_complete(qs, cfg.m);
  const ExpectedAccuracy ea = expected_accuracy(
      SampledResponses::make(qs.question.id, qs.labels));
  TrainingExample e;
  e.question_id = qs.question.id;
  e.input = prompts.render_honesty_prompt(qs.question.text);
  e.strategy = kind == ConfidenceKind::numeric ? Strategy::confidence_num
                                               : Strategy::confidence_verb;
  e.ea = ea;
  if (k_absolute(ea, cfg.tau) == 1) {
    const char* stream =
        kind == ConfidenceKind::numeric ? "synth/confidence_num" : "synth/confidence_verb";
    size_t pick = detail::pick_correct(qs, cfg, stream);
    std::map<std::string, std::string> fills{{"response", qs.responses[pick].text}};
    if (kind == ConfidenceKind::numeric) {
      fills["percent"] = std::to_string(confidence_percent(ea));
    }
    e.output = prompts.render(confidence_template_id(ea, kind), fills);
    e.source_sample = qs.responses[pick].sample_index;
  } else {
    e.output = prompts.get(template_id::confidence_idk_response).body;
    e.tag = "template";
  }
  return {e};
}

/// One example per sample: correct samples keep their own text, the rest
/// become idk responses. Expands the dataset by a factor of m.
inline std::vector<TrainingExample> synth_multisample(const QuestionSamples& qs,
                                                      const StrategyConfig& cfg,
                                                      const PromptLibrary& prompts = default_prompts()) {
  detail::require_complete(qs, cfg.m);
  const ExpectedAccuracy ea = expected_accuracy(
      SampledResponses::make(qs.question.id, qs.labels));
  const std::string input = prompts.render_honesty_prompt(qs.question.text);
  std::vector<TrainingExample> out;
  out.reserve(qs.responses.size());
  for (size_t i = 0; i < qs.responses.size(); ++i) {
    TrainingExample e;
    e.question_id = qs.question.id;
    e.input = input;
    e.strategy = Strategy::multisample;
    e.ea = ea;
    if (qs.labels[i].c == kCorrect) {
      e.output = qs.responses[i].text;
      e.source_sample = qs.responses[i].sample_index;
    } else {
      e.output = detail::idk_output(cfg, prompts);
      e.tag = "template";
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// Ablation baseline: unknown questions get the gold answer instead of the
/// idk response; known questions behave like the absolute strategy.
inline std::vector<TrainingExample> synth_baseline_gold(const QuestionSamples& qs,
                                                        const StrategyConfig& cfg,
                                                        const PromptLibrary& prompts = default_prompts()) {
  detail::require_complete(qs, cfg.m);
  const ExpectedAccuracy ea = expected_accuracy(
      SampledResponses::make(qs.question.id, qs.labels));
  TrainingExample e;
  e.question_id = qs.question.id;
  e.input = prompts.render_honesty_prompt(qs.question.text);
  e.strategy = Strategy::baseline_gold;
  e.ea = ea;
  if (k_absolute(ea, cfg.tau) == 1) {
    size_t pick = detail::pick_correct(qs, cfg, "synth/baseline_gold");
    e.output = qs.responses[pick].text;
    e.source_sample = qs.responses[pick].sample_index;
  } else {
    if (qs.question.gold_answers.empty()) {
      throw std::invalid_argument("baseline_gold needs a gold answer for question '" +
                                  qs.question.id + "'");
    }
    e.output = qs.question.gold_answers.front();
    e.tag = "gold";
  }
  return {e};
}

inline std::vector<TrainingExample> synthesize_question(const QuestionSamples& qs,
                                                        const StrategyConfig& cfg,
                                                        Strategy strategy,
                                                        const PromptLibrary& prompts = default_prompts()) {
  switch (strategy) {
    case Strategy::absolute: return synth_absolute(qs, cfg, prompts);
    case Strategy::confidence_num:
      return synth_confidence(qs, cfg, ConfidenceKind::numeric, prompts);
    case Strategy::confidence_verb:
      return synth_confidence(qs, cfg, ConfidenceKind::verbal, prompts);
    case Strategy::multisample: return synth_multisample(qs, cfg, prompts);
    case Strategy::baseline_gold: return synth_baseline_gold(qs, cfg, prompts);
  }
  throw std::invalid_argument("unknown strategy");
}

struct CorpusSynthesis {
  std::vector<TrainingExample> examples;
  std::vector<std::string> skipped;  // question ids with != m samples
};

/// Assembles per-question sample sets from the record streams. Labels, when
/// given, are matched by (question_id, sample_index); otherwise samples are
/// labeled on the spot by string matching.
inline std::map<std::string, QuestionSamples> build_question_samples(
    const std::vector<QuestionRecord>& questions, const std::vector<ResponseRecord>& samples,
    const std::vector<CategorizedRecord>* labels = nullptr,
    const IdkRuleSet& rules = IdkRuleSet::defaults()) {
  auto by_id = index_questions(questions);
  std::map<std::string, QuestionSamples> out;
  std::map<std::pair<std::string, int>, const CategorizedRecord*> label_index;
  if (labels) {
    for (const auto& l : *labels) label_index[{l.question_id, l.sample_index}] = &l;
  }
  for (const auto& r : samples) {
    auto qit = by_id.find(r.question_id);
    if (qit == by_id.end()) {
      throw std::invalid_argument("sample references unknown question '" + r.question_id + "'");
    }
    auto& qs = out[r.question_id];
    qs.question = qit->second;
    qs.responses.push_back(r);
  }
  for (auto& [id, qs] : out) {
    std::sort(qs.responses.begin(), qs.responses.end(),
              [](const ResponseRecord& a, const ResponseRecord& b) {
                return a.sample_index < b.sample_index;
              });
    for (size_t i = 1; i < qs.responses.size(); ++i) {
      if (qs.responses[i].sample_index == qs.responses[i - 1].sample_index) {
        throw std::invalid_argument("question '" + id + "' has duplicate sample_index " +
                                    std::to_string(qs.responses[i].sample_index));
      }
    }
    qs.labels.reserve(qs.responses.size());
    for (const auto& r : qs.responses) {
      if (labels) {
        auto lit = label_index.find({r.question_id, r.sample_index});
        if (lit == label_index.end()) {
          throw std::invalid_argument("no label for question '" + r.question_id + "' sample " +
                                      std::to_string(r.sample_index));
        }
        qs.labels.push_back(lit->second->label);
      } else {
        qs.labels.push_back(categorize(qs.question, r, rules));
      }
    }
  }
  return out;
}

/// Applies one strategy to every question in the pool. Questions with an
/// incomplete sample set are skipped and reported. Output is ordered by
/// question_id then sample order, so a fixed seed gives identical bytes.
inline CorpusSynthesis synthesize_corpus(const std::map<std::string, QuestionSamples>& corpus,
                                         const StrategyConfig& cfg, Strategy strategy,
                                         const PromptLibrary& prompts = default_prompts()) {
  CorpusSynthesis out;
  for (const auto& [id, qs] : corpus) {
    if (static_cast<long long>(qs.responses.size()) != cfg.m) {
      out.skipped.push_back(id);
      continue;
    }
    auto examples = synthesize_question(qs, cfg, strategy, prompts);
    out.examples.insert(out.examples.end(), examples.begin(), examples.end());
  }
  return out;
}

}  // namespace honesty
