#include "manifest.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "effwave/errors.hpp"

#ifndef EFFWAVE_VERSION
#define EFFWAVE_VERSION "0.0.0"
#endif

namespace effwave::cli {

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericalError("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

RunManifest::RunManifest(std::string subcommand, std::string out_dir)
    : subcommand_(std::move(subcommand)), out_dir_(std::move(out_dir)),
      start_(std::chrono::steady_clock::now()) {
  doc_["subcommand"] = subcommand_;
  doc_["tool_version"] = EFFWAVE_VERSION;
  doc_["config"] = nlohmann::json::object();
  doc_["summary"] = nlohmann::json::object();
  doc_["inputs"] = nlohmann::json::array();
  doc_["artifacts"] = nlohmann::json::array();
}

void RunManifest::input(const std::string& path) {
  doc_["inputs"].push_back({{"path", path}, {"sha256", sha256_file(path)}});
}

void RunManifest::artifact(const std::string& path) {
  doc_["artifacts"].push_back({{"path", path}, {"sha256", sha256_file(path)}});
}

std::string RunManifest::write(int exit_code, const std::string& error) {
  doc_["exit_code"] = exit_code;
  if (!error.empty()) doc_["error"] = error;
  doc_["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  std::filesystem::create_directories(out_dir_);
  const std::string path = (std::filesystem::path(out_dir_) / (subcommand_ + ".manifest.json")).string();
  std::ofstream out(path);
  out << doc_.dump(2) << "\n";
  return path;
}

}  // namespace effwave::cli
