// Command-line entry points wiring the library into batch workflows.
// Every output file gets a .manifest.json sidecar; partial results are
// written to <out>.partial and only renamed on success.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "honesty/categorize.hpp"
#include "honesty/datasets.hpp"
#include "honesty/judge.hpp"
#include "honesty/judge_http.hpp"
#include "honesty/knowledge.hpp"
#include "honesty/manifest.hpp"
#include "honesty/metrics.hpp"
#include "honesty/prompts.hpp"
#include "honesty/records.hpp"
#include "honesty/rouge.hpp"
#include "honesty/synthesize.hpp"
#include "honesty/version.hpp"

namespace fs = std::filesystem;
using namespace honesty;

namespace {

/// Writes to <path>.partial and renames onto the final name only when the
/// command succeeded, so a crashed run never leaves a half-written output
/// under the real name.
class OutputFile {
 public:
  explicit OutputFile(fs::path path) : final_(std::move(path)), partial_(final_) {
    partial_ += ".partial";
    if (final_.has_parent_path()) fs::create_directories(final_.parent_path());
    stream_.open(partial_, std::ios::binary);
    if (!stream_) throw std::runtime_error("cannot open " + partial_.string() + " for writing");
  }

  std::ofstream& stream() { return stream_; }

  template <typename T>
  void write_jsonl(const std::vector<T>& records) {
    for (const auto& r : records) stream_ << r.to_json().dump() << "\n";
  }

  void commit() {
    stream_.close();
    fs::rename(partial_, final_);
    committed_ = true;
  }

  ~OutputFile() {
    if (!committed_) {
      stream_.close();  // leave the .partial behind for inspection
    }
  }

  const fs::path& path() const { return final_; }

 private:
  fs::path final_;
  fs::path partial_;
  std::ofstream stream_;
  bool committed_ = false;
};

struct TemplatesFlag {
  std::string dir;

  PromptLibrary load() const {
    PromptLibrary lib;
    if (!dir.empty()) lib.load_overrides(dir);
    return lib;
  }
};

/// Chat client settings: {"transport": "http"|"mock", ...}. The mock form
/// replies from a scripted substring table and exists for offline dry-runs
/// and tests.
std::shared_ptr<ChatTransport> transport_from_json(const nlohmann::json& j) {
  const std::string kind = j.value("transport", std::string{"http"});
  if (kind == "http") {
    return make_http_transport(HttpJudgeConfig::from_json(j));
  }
  if (kind == "mock") {
    struct Rule {
      std::string contains, reply;
    };
    std::vector<Rule> rules;
    for (const auto& r : j.value("replies", nlohmann::json::array())) {
      rules.push_back({r.at("contains").get<std::string>(), r.at("reply").get<std::string>()});
    }
    std::optional<std::string> fallback;
    if (j.contains("default_reply")) fallback = j.at("default_reply").get<std::string>();
    return std::make_shared<MockTransport>([rules, fallback](const std::string& prompt) {
      for (const auto& r : rules) {
        if (prompt.find(r.contains) != std::string::npos) return r.reply;
      }
      if (fallback) return *fallback;
      throw TransportError("mock transport has no scripted reply for this prompt");
    });
  }
  throw std::invalid_argument("unknown transport kind '" + kind + "'");
}

nlohmann::json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

std::unique_ptr<JudgeClient> judge_from_config(const fs::path& config_path,
                                               const PromptLibrary& prompts,
                                               const char* section = "judge") {
  auto config = load_json_file(config_path);
  const nlohmann::json& j = config.contains(section) ? config.at(section) : config;
  JudgeOptions options;
  options.concurrency = config.value("concurrency", options.concurrency);
  options.max_attempts = config.value("max_attempts", options.max_attempts);
  options.backoff_base_ms = config.value("backoff_base_ms", options.backoff_base_ms);
  if (config.contains("cache_path")) {
    options.cache_path = config.at("cache_path").get<std::string>();
  }
  return std::make_unique<JudgeClient>(transport_from_json(j), options, &prompts);
}

CompletionFn completion_from_config(const nlohmann::json& j) {
  auto transport = transport_from_json(j);
  const double temperature = j.value("temperature", 0.0);
  return [transport, temperature](const std::string& prompt) {
    return transport->complete({{"user", prompt}}, temperature);
  };
}

void write_manifest(RunManifest& manifest, const fs::path& out,
                    const PromptLibrary& prompts) {
  manifest.template_hashes = prompts.hashes();
  manifest.add_output(out);
  manifest.write(out.string() + ".manifest.json");
}

std::map<std::string, Categorization> labels_by_question(
    const std::vector<CategorizedRecord>& records) {
  std::map<std::string, Categorization> out;
  for (const auto& r : records) {
    if (!out.emplace(r.question_id, r.label).second) {
      throw std::invalid_argument("duplicate label for question '" + r.question_id + "'");
    }
  }
  return out;
}

// -- subcommands --------------------------------------------------------------

struct CategorizeArgs {
  std::string questions, responses, out, idk_rules, judge_config;
  TemplatesFlag templates;
  bool use_judge = false;
  int workers = 4;
};

int cmd_categorize(const CategorizeArgs& args) {
  auto prompts = args.templates.load();
  auto questions = index_questions(read_jsonl<QuestionRecord>(args.questions));
  auto responses = read_jsonl<ResponseRecord>(args.responses);
  validate_unique_responses(responses);
  if (responses.empty()) {
    std::cerr << "warning: " << args.responses << " holds no responses; output will be empty\n";
  }
  auto rules = args.idk_rules.empty() ? IdkRuleSet::defaults() : IdkRuleSet::from_file(args.idk_rules);

  std::unique_ptr<JudgeClient> judge;
  if (args.use_judge) {
    if (args.judge_config.empty()) {
      throw std::invalid_argument("--judge requires --judge-config");
    }
    judge = judge_from_config(args.judge_config, prompts);
  }
  auto result = categorize_batch(questions, responses, rules, judge.get(),
                                 judge ? judge->concurrency() : args.workers);

  OutputFile out(args.out);
  out.write_jsonl(result.records);
  out.commit();
  if (!result.quarantined.empty()) {
    OutputFile q(args.out + ".quarantine.jsonl");
    q.write_jsonl(result.quarantined);
    q.commit();
    std::cerr << "warning: " << result.quarantined.size()
              << " records quarantined (see " << q.path().string() << ")\n";
  }

  RunManifest manifest;
  manifest.command = "categorize";
  manifest.config = Json{{"idk_rules", args.idk_rules},
                         {"judge", args.use_judge},
                         {"workers", args.workers}};
  manifest.add_input(args.questions);
  manifest.add_input(args.responses);
  write_manifest(manifest, out.path(), prompts);

  std::cout << "categorized " << result.records.size() << " responses ("
            << result.quarantined.size() << " quarantined) -> " << out.path().string() << "\n";
  return 0;
}

struct CompareArgs {
  std::string run_t, run_t1, out;
  bool quiet = false;
};

int cmd_compare(const CompareArgs& args) {
  auto run_t = read_jsonl<CategorizedRecord>(args.run_t);
  auto run_t1 = read_jsonl<CategorizedRecord>(args.run_t1);
  auto cmp = compare_runs(run_t, run_t1);

  OutputFile out(args.out);
  out.stream() << comparison_to_json(cmp).dump(2) << "\n";
  out.commit();

  RunManifest manifest;
  manifest.command = "compare";
  manifest.add_input(args.run_t);
  manifest.add_input(args.run_t1);
  write_manifest(manifest, out.path(), default_prompts());

  if (!args.quiet) std::cout << comparison_to_table(cmp);
  return 0;
}

struct SynthesizeArgs {
  std::string questions, samples, labels, out, strategy = "absolute";
  TemplatesFlag templates;
  long long m = 10;
  std::string tau = "0.1";
  uint64_t seed = 0;
  std::string idk_template;
};

int cmd_synthesize(const SynthesizeArgs& args) {
  auto prompts = args.templates.load();
  StrategyConfig cfg;
  cfg.m = args.m;
  cfg.tau = parse_decimal_rational(args.tau);
  cfg.seed = args.seed;
  cfg.idk_template = args.idk_template;
  if (cfg.tau <= Rational(0) || cfg.tau > Rational(1)) {
    throw std::invalid_argument("--tau must lie in (0, 1]");
  }
  const Strategy strategy = strategy_from_name(args.strategy);

  auto questions = read_jsonl<QuestionRecord>(args.questions);
  auto samples = read_jsonl<ResponseRecord>(args.samples);
  std::optional<std::vector<CategorizedRecord>> labels;
  if (!args.labels.empty()) labels = read_jsonl<CategorizedRecord>(args.labels);
  auto corpus = build_question_samples(questions, samples, labels ? &*labels : nullptr);

  auto result = synthesize_corpus(corpus, cfg, strategy, prompts);

  OutputFile out(args.out);
  out.write_jsonl(result.examples);
  out.commit();

  RunManifest manifest;
  manifest.command = "synthesize";
  manifest.seed = args.seed;
  manifest.config = Json{{"strategy", strategy_name(strategy)},
                         {"m", cfg.m},
                         {"tau", rational_to_string(cfg.tau)},
                         {"idk_template", cfg.idk_template}};
  manifest.add_input(args.questions);
  manifest.add_input(args.samples);
  if (!args.labels.empty()) manifest.add_input(args.labels);
  write_manifest(manifest, out.path(), prompts);

  std::cout << strategy_name(strategy) << ": " << result.examples.size() << " examples from "
            << corpus.size() - result.skipped.size() << " questions -> " << out.path().string()
            << "\n";
  if (!result.skipped.empty()) {
    std::cerr << "warning: skipped " << result.skipped.size()
              << " questions with incomplete sample sets\n";
  }
  return 0;
}

struct SweepArgs {
  std::string samples, out;
  long long m = 10;
  std::vector<std::string> taus;
  std::string knowledge_out;
  std::string knowledge_tau = "0.1";
};

int cmd_sweep_threshold(const SweepArgs& args) {
  auto records = read_jsonl<CategorizedRecord>(args.samples);
  auto grouped = GroupedSamples::group(records, args.m);

  std::vector<std::string> tau_strings = args.taus;
  if (tau_strings.empty()) {
    tau_strings = {"0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9", "1.0"};
  }
  std::vector<Rational> taus;
  for (const auto& s : tau_strings) {
    auto t = parse_decimal_rational(s);
    if (t <= Rational(0) || t > Rational(1)) {
      throw std::invalid_argument("tau values must lie in (0, 1]: " + s);
    }
    taus.push_back(t);
  }

  std::vector<std::pair<std::string, ExpectedAccuracy>> eas;
  for (const auto& [id, recs] : grouped.by_question) {
    if (static_cast<long long>(recs.size()) != args.m) continue;
    std::vector<Categorization> labels;
    for (const auto& r : recs) labels.push_back(r.label);
    eas.emplace_back(id, expected_accuracy(SampledResponses::make(id, labels)));
  }
  if (eas.empty()) throw std::invalid_argument("no complete sample sets in " + args.samples);
  if (!grouped.incomplete.empty()) {
    std::cerr << "warning: " << grouped.incomplete.size()
              << " questions skipped for incomplete sample sets\n";
  }

  if (!args.knowledge_out.empty()) {
    const Rational ktau = parse_decimal_rational(args.knowledge_tau);
    std::vector<KnowledgeRow> rows;
    for (const auto& [id, ea] : eas) {
      rows.push_back({id, ea.correct, ea.m, k_absolute(ea, ktau)});
    }
    OutputFile kout(args.knowledge_out);
    kout.write_jsonl(rows);
    kout.commit();
    std::cout << "knowledge table for tau=" << args.knowledge_tau << " -> "
              << kout.path().string() << "\n";
  }

  OutputFile out(args.out);
  out.stream() << "tau\tknown\ttotal\tknown_fraction\n";
  for (size_t i = 0; i < taus.size(); ++i) {
    long long known = 0;
    for (const auto& [id, ea] : eas) known += k_absolute(ea, taus[i]) == 1;
    Rational fraction(known, static_cast<long long>(eas.size()));
    out.stream() << tau_strings[i] << "\t" << known << "\t" << eas.size() << "\t"
                 << fixed2(fraction * 100) << "\n";
  }
  out.commit();

  RunManifest manifest;
  manifest.command = "sweep-threshold";
  manifest.config = Json{{"m", args.m}, {"taus", tau_strings}};
  manifest.add_input(args.samples);
  write_manifest(manifest, out.path(), default_prompts());
  std::cout << "swept " << taus.size() << " thresholds over " << eas.size() << " questions -> "
            << out.path().string() << "\n";
  return 0;
}

struct BuildDatasetArgs {
  std::string kind, out;
  // balanced
  std::string questions, labels;
  long long target = 8000;
  std::string known_fraction = "0.5";
  uint64_t seed = 0;
  // puqa
  std::string titles;
  // mmlu
  std::string input;
  // pkqa
  std::string clients_config, topics_file, candidates_out;
  int rounds = 10;
  TemplatesFlag templates;
};

int cmd_build_dataset(const BuildDatasetArgs& args) {
  auto prompts = args.templates.load();
  RunManifest manifest;
  manifest.command = "build-dataset " + args.kind;
  manifest.seed = args.seed;

  if (args.kind == "balanced") {
    auto questions = read_jsonl<QuestionRecord>(args.questions);
    auto labels = labels_by_question(read_jsonl<CategorizedRecord>(args.labels));
    BalancedPoolSpec spec;
    spec.target_size = args.target;
    spec.known_fraction = parse_decimal_rational(args.known_fraction);
    spec.seed = args.seed;
    auto pool = build_balanced_pool(questions, labels, spec);
    OutputFile out(args.out);
    for (const auto& id : pool) out.stream() << id << "\n";
    out.commit();
    manifest.config = Json{{"target", args.target}, {"known_fraction", args.known_fraction}};
    manifest.add_input(args.questions);
    manifest.add_input(args.labels);
    write_manifest(manifest, out.path(), prompts);
    std::cout << "balanced pool of " << pool.size() << " ids -> " << out.path().string() << "\n";
    return 0;
  }

  if (args.kind == "puqa") {
    auto titles = read_lines(args.titles);
    auto records = build_puqa(titles, prompts);
    OutputFile out(args.out);
    out.write_jsonl(records);
    out.commit();
    manifest.add_input(args.titles);
    write_manifest(manifest, out.path(), prompts);
    std::cout << records.size() << " questions -> " << out.path().string() << "\n";
    return 0;
  }

  if (args.kind == "mmlu") {
    std::ifstream in(args.input);
    if (!in) throw std::runtime_error("cannot open " + args.input);
    std::vector<QuestionRecord> records;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      try {
        auto j = Json::parse(line);
        auto options = j.at("options").get<std::vector<std::string>>();
        std::string id = j.value("id", "mmlu-" + std::to_string(lineno));
        auto answer = j.at("answer").get<std::string>();
        if (answer.size() != 1) throw std::invalid_argument("answer must be a single letter");
        records.push_back(format_mmlu(id, j.at("question").get<std::string>(), options, answer[0]));
      } catch (const std::exception& e) {
        throw ParseError(args.input, lineno, e.what());
      }
    }
    OutputFile out(args.out);
    out.write_jsonl(records);
    out.commit();
    manifest.add_input(args.input);
    write_manifest(manifest, out.path(), prompts);
    std::cout << records.size() << " questions -> " << out.path().string() << "\n";
    return 0;
  }

  if (args.kind == "pkqa") {
    auto config = load_json_file(args.clients_config);
    auto judge = judge_from_config(args.clients_config, prompts);
    auto generate = completion_from_config(config.at("generator"));
    auto unaligned = completion_from_config(config.at("unaligned"));
    PkqaSpec spec;
    spec.target = args.target;
    spec.max_rounds_per_topic = args.rounds;
    if (!args.topics_file.empty()) spec.topics = read_lines(args.topics_file);

    auto result = build_pkqa(generate, *judge, unaligned, spec, prompts);

    OutputFile out(args.out);
    std::vector<QuestionRecord> questions;
    for (size_t i = 0; i < result.accepted.size(); ++i) {
      QuestionRecord q;
      q.id = "pkqa-" + std::to_string(i + 1);
      q.text = result.accepted[i].question;
      q.gold_answers = {result.accepted[i].answer};
      q.source = "pkqa";
      questions.push_back(std::move(q));
    }
    out.write_jsonl(questions);
    out.commit();
    if (!args.candidates_out.empty()) {
      OutputFile log(args.candidates_out);
      log.write_jsonl(result.log);
      log.commit();
    }
    manifest.config = Json{{"target", args.target}, {"rounds", args.rounds}};
    manifest.add_input(args.clients_config);
    if (!args.topics_file.empty()) manifest.add_input(args.topics_file);
    write_manifest(manifest, out.path(), prompts);
    std::cout << result.accepted.size() << " questions (" << result.parse_failures
              << " parse failures) -> " << out.path().string() << "\n";
    return 0;
  }

  throw std::invalid_argument("unknown dataset kind '" + args.kind + "'");
}

int cmd_report(const std::string& input) {
  auto cmp = comparison_from_json(load_json_file(input));
  std::cout << comparison_to_table(cmp);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Honesty metrics and training-data synthesis for QA models"};
  app.set_version_flag("--version", kToolVersion);
  app.set_config("--config")->configurable(false);
  app.require_subcommand(1);

  CategorizeArgs cat;
  auto* c = app.add_subcommand("categorize", "Label responses as correct, wrong, or idk");
  c->add_option("--questions", cat.questions, "questions JSONL")->required();
  c->add_option("--responses", cat.responses, "responses JSONL")->required();
  c->add_option("--out", cat.out, "output categorization JSONL")->required();
  c->add_option("--idk-rules", cat.idk_rules, "idk pattern file, one lowercase substring per line");
  c->add_flag("--judge", cat.use_judge, "enable the judge-assisted path");
  c->add_option("--judge-config", cat.judge_config, "judge client config JSON");
  c->add_option("--workers", cat.workers, "max in-flight judge calls");
  c->add_option("--templates", cat.templates.dir, "template override directory");

  CompareArgs cmp;
  auto* m = app.add_subcommand("compare", "Transition matrix and metrics for a (t, t+1) pair");
  m->add_option("--run-t", cmp.run_t, "categorized run at t")->required();
  m->add_option("--run-t1", cmp.run_t1, "categorized run at t+1")->required();
  m->add_option("--out", cmp.out, "report JSON path")->required();
  m->add_flag("--quiet", cmp.quiet, "suppress the terminal table");

  SynthesizeArgs syn;
  auto* s = app.add_subcommand("synthesize", "Build supervised fine-tuning examples");
  s->add_option("--questions", syn.questions, "questions JSONL")->required();
  s->add_option("--samples", syn.samples, "temperature-1 sample responses JSONL")->required();
  s->add_option("--labels", syn.labels, "precomputed sample categorizations JSONL");
  s->add_option("--out", syn.out, "training examples JSONL")->required();
  s->add_option("--strategy", syn.strategy,
                "absolute | confidence-num | confidence-verb | multisample | baseline-gold");
  s->add_option("--m,--samples-per-question", syn.m, "samples per question");
  s->add_option("--tau,--refusal-threshold", syn.tau, "refusal threshold in (0,1]");
  s->add_option("--seed", syn.seed, "RNG seed");
  s->add_option("--idk-template", syn.idk_template, "override the idk output sentence");
  s->add_option("--templates", syn.templates.dir, "template override directory");

  SweepArgs sweep;
  auto* w = app.add_subcommand("sweep-threshold", "Known-question fraction across tau values");
  w->add_option("--samples", sweep.samples, "categorized sample file")->required();
  w->add_option("--out", sweep.out, "TSV output")->required();
  w->add_option("--m,--samples-per-question", sweep.m, "samples per question");
  w->add_option("--taus,--refusal-thresholds", sweep.taus, "tau values (default 0.1..1.0)")
      ->delimiter(',');
  w->add_option("--knowledge-out", sweep.knowledge_out,
                "also emit the per-question knowledge table JSONL");
  w->add_option("--knowledge-tau", sweep.knowledge_tau,
                "tau used for the knowledge table's k column");

  BuildDatasetArgs bd;
  auto* b = app.add_subcommand("build-dataset", "Construct evaluation/training pools");
  b->add_option("--kind", bd.kind, "balanced | puqa | pkqa | mmlu")->required();
  b->add_option("--out", bd.out, "output path")->required();
  b->add_option("--questions", bd.questions, "questions JSONL (balanced)");
  b->add_option("--labels", bd.labels, "temperature-0 categorizations JSONL (balanced)");
  b->add_option("--target", bd.target, "pool size (balanced: 8000, pkqa: 1000)");
  b->add_option("--known-fraction", bd.known_fraction, "known share of the pool (balanced)");
  b->add_option("--seed", bd.seed, "RNG seed");
  b->add_option("--titles", bd.titles, "paper title list, one per line (puqa)");
  b->add_option("--in", bd.input, "multiple-choice JSONL with question/options/answer (mmlu)");
  b->add_option("--clients-config", bd.clients_config,
                "JSON with judge/generator/unaligned client settings (pkqa)");
  b->add_option("--topics", bd.topics_file, "topic list override, one per line (pkqa)");
  b->add_option("--rounds", bd.rounds, "generation rounds per topic (pkqa)");
  b->add_option("--candidates", bd.candidates_out, "full candidate log with statuses (pkqa)");
  b->add_option("--templates", bd.templates.dir, "template override directory");

  std::string report_in;
  auto* r = app.add_subcommand("report", "Render a stored report as a terminal table");
  r->add_option("--in", report_in, "report JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c->parsed()) return cmd_categorize(cat);
    if (m->parsed()) return cmd_compare(cmp);
    if (s->parsed()) return cmd_synthesize(syn);
    if (w->parsed()) return cmd_sweep_threshold(sweep);
    if (b->parsed()) {
      if (bd.kind == "pkqa" && bd.target == 8000) bd.target = 1000;
      return cmd_build_dataset(bd);
    }
    if (r->parsed()) return cmd_report(report_in);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
