#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "honesty/text.hpp"

namespace honesty {

using Json = nlohmann::ordered_json;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        path_(path),
        line_(line) {}
  const std::string& path() const { return path_; }
  size_t line() const { return line_; }

 private:
  std::string path_;
  size_t line_;
};

/// A question x with its acceptable gold answers. gold_answers may be empty
/// only for source "puqa", where any non-idk response counts as a
/// hallucination.
struct QuestionRecord {
  std::string id;
  std::string text;
  std::vector<std::string> gold_answers;
  std::string source;

  Json to_json() const {
    return Json{{"id", id}, {"text", text}, {"gold_answers", gold_answers}, {"source", source}};
  }

  static QuestionRecord from_json(const Json& j) {
    QuestionRecord q;
    q.id = j.at("id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    q.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
    q.source = j.value("source", std::string{});
    if (q.gold_answers.empty() && q.source != "puqa") {
      throw std::invalid_argument("question '" + q.id +
                                  "': gold_answers may be empty only for source=puqa");
    }
    return q;
  }
};

/// One model response y, tied to a question and a model-version tag t.
struct ResponseRecord {
  std::string question_id;
  std::string model_tag;
  std::string text;
  double temperature = 0.0;
  int sample_index = 0;

  Json to_json() const {
    return Json{{"question_id", question_id},
                {"model_tag", model_tag},
                {"text", text},
                {"temperature", temperature},
                {"sample_index", sample_index}};
  }

  static ResponseRecord from_json(const Json& j) {
    ResponseRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    r.model_tag = j.value("model_tag", std::string{});
    r.text = j.at("text").get<std::string>();
    r.temperature = j.value("temperature", 0.0);
    r.sample_index = j.value("sample_index", 0);
    if (r.temperature < 0) throw std::invalid_argument("temperature must be >= 0");
    if (r.sample_index < 0) throw std::invalid_argument("sample_index must be >= 0");
    return r;
  }
};

/// Reads a JSONL file, one record per line; blank lines are skipped.
/// Parse failures carry the path and 1-based line number.
template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(T::from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return out;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& r : records) out << r.to_json().dump() << "\n";
}

/// Questions keyed by id; duplicate ids are a data defect.
inline std::map<std::string, QuestionRecord> index_questions(
    const std::vector<QuestionRecord>& questions) {
  std::map<std::string, QuestionRecord> by_id;
  for (const auto& q : questions) {
    if (!by_id.emplace(q.id, q).second) {
      throw std::invalid_argument("duplicate question id '" + q.id + "'");
    }
  }
  return by_id;
}

/// Enforces the run-file invariant: (question_id, model_tag, temperature,
/// sample_index) appears at most once.
inline void validate_unique_responses(const std::vector<ResponseRecord>& responses) {
  std::set<std::tuple<std::string, std::string, double, int>> seen;
  for (const auto& r : responses) {
    if (!seen.emplace(r.question_id, r.model_tag, r.temperature, r.sample_index).second) {
      throw std::invalid_argument("duplicate response record for question '" + r.question_id +
                                  "' sample " + std::to_string(r.sample_index));
    }
  }
}

/// Plain-text list, one entry per line; blank lines skipped.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) out.push_back(line);
  }
  return out;
}

}  // namespace honesty
