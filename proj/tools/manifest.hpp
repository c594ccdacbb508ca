#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

namespace effwave::cli {

std::string sha256_file(const std::string& path);

/// One manifest per run: resolved configuration, inputs and outputs with their
/// SHA-256 digests, solver summaries and wall time.
class RunManifest {
 public:
  RunManifest(std::string subcommand, std::string out_dir);

  nlohmann::json& config() { return doc_["config"]; }
  nlohmann::json& summary() { return doc_["summary"]; }
  void input(const std::string& path);
  void artifact(const std::string& path);
  /// Writes <out_dir>/<subcommand>.manifest.json and returns its path.
  std::string write(int exit_code, const std::string& error = {});

 private:
  std::string subcommand_;
  std::string out_dir_;
  nlohmann::json doc_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace effwave::cli
