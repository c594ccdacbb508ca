#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "effwave/geometry.hpp"
#include "effwave/pde_solvers.hpp"
#include "effwave/tensors.hpp"

namespace effwave {

/// Value of the TOML subset read by Config: numbers, booleans, strings,
/// arrays and inline tables.
struct ConfigValue {
  using Array = std::vector<ConfigValue>;
  using Table = std::map<std::string, ConfigValue>;
  std::variant<double, bool, std::string, Array, Table> data;
  int line = 0;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }
  bool is_table() const { return std::holds_alternative<Table>(data); }
};

/// Flat key/value view of a TOML-style file.  `[section]` headers prefix the
/// keys that follow with "section.".  Every accessor reports the file, line
/// and key on a type mismatch.
class Config {
 public:
  Config() = default;
  static Config parse(const std::string& text, const std::string& source = "<string>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const ConfigValue& at(const std::string& key) const;
  std::vector<std::string> keys() const;
  const std::string& source() const noexcept { return source_; }

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;

  /// Sets or replaces a value, e.g. from a command-line override "key=value".
  void set(const std::string& key, const std::string& literal);

  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  std::map<std::string, ConfigValue> values_;
  std::string source_;
};

/// Builds a coefficient field from `geometry = ...` plus, for "custom",
/// `boxes`, `background`, `mean_shift` and `dimension`.
CoefficientField geometry_from_config(const Config& cfg);

/// Reads "N1xN2[xN3]" resolutions.
std::vector<int> parse_resolution(const std::string& text);

/// Effective model files: `dimension`, then A, C, E, F as flat row-major
/// arrays.  E and F may be absent in input files.
void write_model(std::ostream& out, const EffectiveModel& m);
EffectiveModel read_model(const Config& cfg);

}  // namespace effwave
