#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "honesty/prompts.hpp"
#include "honesty/text.hpp"

namespace honesty {

/// Transport failed after retries; the record stays uncategorized.
class JudgeUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The judge replied but the verdict doesn't parse; no guessing.
class JudgeMalformed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-attempt network/protocol failure, thrown by transports and
/// retried by the client.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

/// Chat-completion exchange: messages in, one assistant message out.
/// Implementations must be safe for concurrent complete() calls.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages, double temperature) = 0;
};

/// Deterministic scripted transport for tests. The script maps the user
/// message to a reply; it may throw TransportError to simulate outages.
class MockTransport : public ChatTransport {
 public:
  explicit MockTransport(std::function<std::string(const std::string&)> script)
      : script_(std::move(script)) {}

  std::string complete(const std::vector<ChatMessage>& messages, double) override {
    calls_.fetch_add(1);
    return script_(messages.empty() ? std::string{} : messages.back().content);
  }

  int calls() const { return calls_.load(); }

 private:
  std::function<std::string(const std::string&)> script_;
  std::atomic<int> calls_{0};
};

enum class JudgeTemplate { extract_answer, compare_answer, pkqa_correct, mmlu_match };

inline const char* judge_template_name(JudgeTemplate t) {
  switch (t) {
    case JudgeTemplate::extract_answer: return "extract_answer";
    case JudgeTemplate::compare_answer: return "compare_answer";
    case JudgeTemplate::pkqa_correct: return "pkqa_correct";
    case JudgeTemplate::mmlu_match: return "mmlu_match";
  }
  return "?";
}

inline const char* judge_template_prompt_id(JudgeTemplate t) {
  switch (t) {
    case JudgeTemplate::extract_answer: return template_id::judge_extract_answer;
    case JudgeTemplate::compare_answer: return template_id::judge_compare_answer;
    case JudgeTemplate::pkqa_correct: return template_id::judge_pkqa_correct;
    case JudgeTemplate::mmlu_match: return template_id::judge_mmlu_match;
  }
  return "?";
}

/// One judging call: a template plus its fills, always at temperature 0.
struct JudgeRequest {
  JudgeTemplate template_id;
  std::map<std::string, std::string> fills;

  /// Canonical bytes for the cache key; std::map keeps fills sorted.
  std::string canonical() const {
    nlohmann::ordered_json j;
    j["template_id"] = judge_template_name(template_id);
    j["fills"] = fills;
    return j.dump();
  }

  std::string hash() const { return sha256_hex(canonical()); }
};

/// Append-only on-disk verdict store keyed by request hash. Concurrent
/// readers share the map; writes are serialized. Only verdicts that parsed
/// are stored, so a bad judge reply never poisons future runs.
class JudgeCache {
 public:
  JudgeCache() = default;

  explicit JudgeCache(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto j = nlohmann::json::parse(line);
      entries_[j.at("request_hash").get<std::string>()] = j.at("verdict").get<std::string>();
    }
  }

  std::optional<std::string> get(const std::string& hash) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(hash);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const JudgeRequest& request, const std::string& verdict) {
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.emplace(request.hash(), verdict);
    if (!inserted || path_.empty()) return;
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    nlohmann::ordered_json j{{"request_hash", request.hash()},
                             {"template_id", judge_template_name(request.template_id)},
                             {"verdict", verdict},
                             {"timestamp", unix_now()}};
    out << j.dump() << "\n";
  }

  size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

 private:
  static long long unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
};

struct JudgeOptions {
  int max_attempts = 3;
  int backoff_base_ms = 250;
  int concurrency = 4;
  std::filesystem::path cache_path;  // empty = in-memory only
};

// -- verdict parsers ---------------------------------------------------------

inline std::string strip_trailing_punct(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == ')' || s.back() == '"')) s.pop_back();
  return s;
}

inline std::string parse_extracted_answer(const std::string& raw) {
  std::string t = trim(raw);
  if (t.empty()) throw JudgeMalformed("extract_answer: empty reply");
  if (to_lower_ascii(strip_trailing_punct(t)) == "no answer") return "no answer";
  return t;
}

inline int parse_binary_score(const std::string& raw) {
  std::string t = to_lower_ascii(trim(raw));
  if (t.rfind("score:", 0) == 0) t = trim(t.substr(6));
  t = strip_trailing_punct(t);
  if (t == "0") return 0;
  if (t == "1") return 1;
  throw JudgeMalformed("compare_answer: reply parses to neither 0 nor 1: '" + raw + "'");
}

inline bool parse_yes_no(const std::string& raw) {
  std::string t = to_lower_ascii(trim(raw));
  size_t end = 0;
  while (end < t.size() && t[end] >= 'a' && t[end] <= 'z') ++end;
  std::string word = t.substr(0, end);
  if (word == "yes") return true;
  if (word == "no") return false;
  throw JudgeMalformed("pkqa_correct: reply is neither Yes nor No: '" + raw + "'");
}

/// Option letter A-D, or nullopt for the "None" sentinel.
inline std::optional<char> parse_option_letter(const std::string& raw) {
  std::string t = strip_trailing_punct(trim(raw));
  if (to_lower_ascii(t) == "none") return std::nullopt;
  if (t.size() == 1) {
    char c = fold_byte(static_cast<unsigned char>(t[0]));
    if (c >= 'a' && c <= 'd') return static_cast<char>(c - 'a' + 'A');
  }
  throw JudgeMalformed("mmlu_match: reply is neither an option letter nor None: '" + raw + "'");
}

/// Client for an external chat-completion judge. Verdicts are cached by
/// request hash; transport failures are retried with exponential backoff
/// and then surface as JudgeUnavailable. Thread-safe.
class JudgeClient {
 public:
  JudgeClient(std::shared_ptr<ChatTransport> transport, JudgeOptions options = {},
              const PromptLibrary* prompts = nullptr)
      : transport_(std::move(transport)),
        options_(options),
        cache_(options_.cache_path),
        prompts_(prompts ? prompts : &default_prompts()) {}

  /// Two-step protocol, step 1: short answer from the response text, or
  /// the verbatim sentinel "no answer".
  std::string extract_answer(const std::string& question, const std::string& response_text) {
    JudgeRequest req{JudgeTemplate::extract_answer,
                     {{"question", question}, {"response", response_text}}};
    return run(req, [](const std::string& raw) { return parse_extracted_answer(raw); });
  }

  /// Two-step protocol, step 2: consistency score in {0,1}. A string-equal
  /// extracted answer short-circuits without a call.
  int compare_answer(const std::string& question, const std::string& gold,
                     const std::string& extracted) {
    if (to_lower_ascii(extracted) == "no answer") {
      throw std::invalid_argument("compare_answer: 'no answer' short-circuits to wrong upstream");
    }
    if (normalize(gold) == normalize(extracted)) return 1;
    JudgeRequest req{
        JudgeTemplate::compare_answer,
        {{"question", question}, {"reference", gold}, {"proposed", extracted}}};
    return run(req, [](const std::string& raw) { return parse_binary_score(raw); });
  }

  bool check_pkqa_correct(const std::string& question, const std::string& response) {
    JudgeRequest req{JudgeTemplate::pkqa_correct,
                     {{"question", question}, {"response", response}}};
    return run(req, [](const std::string& raw) { return parse_yes_no(raw); });
  }

  /// Letter of the option the response matches, or nullopt for "None".
  std::optional<char> match_mmlu_option(const std::string& question,
                                        const std::array<std::string, 4>& options,
                                        const std::string& response) {
    static constexpr char letters[] = {'A', 'B', 'C', 'D'};
    std::string block;
    for (int i = 0; i < 4; ++i) {
      block += letters[i];
      block += ") ";
      block += options[i];
      if (i != 3) block += "\n";
    }
    JudgeRequest req{JudgeTemplate::mmlu_match,
                     {{"question", question}, {"options", block}, {"response", response}}};
    return run(req, [](const std::string& raw) { return parse_option_letter(raw); });
  }

  const JudgeCache& cache() const { return cache_; }
  int concurrency() const { return options_.concurrency; }

 private:
  template <typename Parse>
  auto run(const JudgeRequest& req, Parse parse) -> decltype(parse(std::string{})) {
    const std::string key = req.hash();
    if (auto cached = cache_.get(key)) return parse(*cached);
    const std::string prompt = prompts_->render(judge_template_prompt_id(req.template_id),
                                                req.fills);
    const std::string raw = send_with_retries(prompt);
    auto parsed = parse(raw);  // throws JudgeMalformed; not cached then
    cache_.put(req, raw);
    return parsed;
  }

  std::string send_with_retries(const std::string& prompt) {
    std::vector<ChatMessage> messages{{"user", prompt}};
    std::string last_error;
    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
      if (attempt > 0 && options_.backoff_base_ms > 0) {
        std::this_thread::sleep_for(
            std::chrono::milliseconds(options_.backoff_base_ms * (1 << (attempt - 1))));
      }
      try {
        return transport_->complete(messages, /*temperature=*/0.0);
      } catch (const TransportError& e) {
        last_error = e.what();
      }
    }
    throw JudgeUnavailable("judge unreachable after " + std::to_string(options_.max_attempts) +
                           " attempts: " + last_error);
  }

  std::shared_ptr<ChatTransport> transport_;
  JudgeOptions options_;
  JudgeCache cache_;
  const PromptLibrary* prompts_;
};

}  // namespace honesty
