#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "honesty/prompts.hpp"
#include "honesty/records.hpp"
#include "honesty/text.hpp"
#include "honesty/version.hpp"

namespace honesty {

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

/// Reproducibility sidecar written next to every output file. Two runs
/// whose manifests agree on everything except created_at produce
/// byte-identical outputs for judge-free commands.
struct RunManifest {
  std::string command;
  uint64_t seed = 0;
  Json config = Json::object();
  std::map<std::string, std::string> template_hashes;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256

  void add_input(const std::filesystem::path& p) { inputs.emplace_back(p.string(), sha256_file(p)); }
  void add_output(const std::filesystem::path& p) { outputs.emplace_back(p.string(), sha256_file(p)); }

  Json to_json() const {
    auto files = [](const std::vector<std::pair<std::string, std::string>>& v) {
      Json arr = Json::array();
      for (const auto& [path, digest] : v) arr.push_back({{"path", path}, {"sha256", digest}});
      return arr;
    };
    return Json{{"command", command},
                {"tool_version", kToolVersion},
                {"seed", seed},
                {"config", config},
                {"config_hash", sha256_hex(config.dump())},
                {"template_hashes", template_hashes},
                {"inputs", files(inputs)},
                {"outputs", files(outputs)},
                {"created_at", now_iso8601()}};
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    out << to_json().dump(2) << "\n";
  }

  static std::string now_iso8601() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&now));
    return buf;
  }
};

}  // namespace honesty
