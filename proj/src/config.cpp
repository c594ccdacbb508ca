#include "effwave/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "effwave/errors.hpp"

namespace effwave {

namespace {

class Parser {
 public:
  Parser(const std::string& text, const std::string& source, int line)
      : s_(text), source_(source), line_(line) {}

  ConfigValue value() {
    skip_space();
    if (pos_ >= s_.size()) error("missing value");
    ConfigValue v;
    v.line = line_;
    const char c = s_[pos_];
    if (c == '"') {
      v.data = quoted();
    } else if (c == '[') {
      ++pos_;
      ConfigValue::Array arr;
      skip_space();
      if (peek() == ']') {
        ++pos_;
      } else {
        while (true) {
          arr.push_back(value());
          skip_space();
          if (peek() == ',') {
            ++pos_;
            skip_space();
            if (peek() == ']') {
              ++pos_;
              break;
            }
            continue;
          }
          if (peek() == ']') {
            ++pos_;
            break;
          }
          error("expected ',' or ']' in array");
        }
      }
      v.data = std::move(arr);
    } else if (c == '{') {
      ++pos_;
      ConfigValue::Table tab;
      skip_space();
      if (peek() == '}') {
        ++pos_;
      } else {
        while (true) {
          skip_space();
          const std::string k = bare_key();
          skip_space();
          if (peek() != '=') error("expected '=' after key '" + k + "' in inline table");
          ++pos_;
          tab[k] = value();
          skip_space();
          if (peek() == ',') {
            ++pos_;
            continue;
          }
          if (peek() == '}') {
            ++pos_;
            break;
          }
          error("expected ',' or '}' in inline table");
        }
      }
      v.data = std::move(tab);
    } else {
      std::size_t end = pos_;
      while (end < s_.size() && s_[end] != ',' && s_[end] != ']' && s_[end] != '}' &&
             !std::isspace(static_cast<unsigned char>(s_[end])) && s_[end] != '#')
        ++end;
      const std::string tok = s_.substr(pos_, end - pos_);
      pos_ = end;
      if (tok == "true") v.data = true;
      else if (tok == "false") v.data = false;
      else if (tok == "inf" || tok == "+inf") v.data = HUGE_VAL;
      else {
        std::size_t used = 0;
        double d = 0.0;
        try {
          d = std::stod(tok, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != tok.size() || tok.empty()) error("cannot parse value '" + tok + "'");
        v.data = d;
      }
    }
    return v;
  }

  std::string bare_key() {
    std::size_t end = pos_;
    while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_' ||
                               s_[end] == '-' || s_[end] == '.'))
      ++end;
    if (end == pos_) error("expected a key");
    std::string k = s_.substr(pos_, end - pos_);
    pos_ = end;
    return k;
  }

  void finish() {
    skip_space();
    if (pos_ < s_.size() && s_[pos_] != '#') error("unexpected trailing text '" + s_.substr(pos_) + "'");
  }

  [[noreturn]] void error(const std::string& msg) const {
    std::ostringstream os;
    os << source_ << ":" << line_ << ": " << msg;
    throw ConfigError(os.str());
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  std::string quoted() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
        const char e = s_[++pos_];
        out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        out += s_[pos_];
      }
      ++pos_;
    }
    if (pos_ >= s_.size()) error("unterminated string");
    ++pos_;
    return out;
  }

  const std::string& s_;
  const std::string& source_;
  int line_;
  std::size_t pos_ = 0;
};

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

int bracket_balance(const std::string& s) {
  int depth = 0;
  bool in_string = false;
  for (char c : s) {
    if (c == '"') in_string = !in_string;
    if (in_string) continue;
    if (c == '#') break;
    if (c == '[' || c == '{') ++depth;
    if (c == ']' || c == '}') --depth;
  }
  return depth;
}

const char* type_name(const ConfigValue& v) {
  if (v.is_number()) return "number";
  if (v.is_bool()) return "boolean";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  return "table";
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[' && line.find('=') == std::string::npos) {
      const auto close = line.find(']');
      if (close == std::string::npos) Parser(line, source, line_no).error("unterminated section header");
      section = trim(line.substr(1, close - 1));
      continue;
    }
    const int start = line_no;
    // multi-line arrays and tables continue until brackets balance
    while (bracket_balance(line) > 0 && std::getline(in, raw)) {
      ++line_no;
      line += "\n" + raw;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) Parser(line, source, start).error("expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
    if (key.empty()) Parser(line, source, start).error("empty key");
    const std::string rest = line.substr(eq + 1);
    Parser p(rest, source, start);
    ConfigValue v = p.value();
    p.finish();
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.values_.count(full)) p.error("duplicate key '" + full + "'");
    cfg.values_[full] = std::move(v);
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void Config::fail(const std::string& key, const std::string& message) const {
  std::ostringstream os;
  const auto it = values_.find(key);
  if (!source_.empty()) {
    os << source_;
    if (it != values_.end() && it->second.line > 0) os << ":" << it->second.line;
    os << ": ";
  }
  os << "key '" << key << "': " << message;
  throw ConfigError(os.str());
}

const ConfigValue& Config::at(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(key, "missing required key");
  return it->second;
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> k;
  for (const auto& [name, v] : values_) k.push_back(name);
  return k;
}

double Config::number(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_number()) fail(key, std::string("expected a number, found a ") + type_name(v));
  return std::get<double>(v.data);
}

double Config::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

bool Config::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = at(key);
  if (!v.is_bool()) fail(key, std::string("expected true or false, found a ") + type_name(v));
  return std::get<bool>(v.data);
}

std::string Config::string(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_string()) fail(key, std::string("expected a string, found a ") + type_name(v));
  return std::get<std::string>(v.data);
}

std::string Config::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

std::vector<double> Config::numbers(const std::string& key) const {
  const auto& v = at(key);
  if (v.is_number()) return {std::get<double>(v.data)};
  if (!v.is_array()) fail(key, std::string("expected an array of numbers, found a ") + type_name(v));
  std::vector<double> out;
  for (const auto& e : std::get<ConfigValue::Array>(v.data)) {
    if (!e.is_number()) fail(key, "array entries must be numbers");
    out.push_back(std::get<double>(e.data));
  }
  return out;
}

std::vector<double> Config::numbers(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

void Config::set(const std::string& key, const std::string& literal) {
  // bare words that are not numbers or booleans are taken as strings
  try {
    const std::string where = "override '" + key + "'";
    Parser p(literal, where, 0);
    ConfigValue v = p.value();
    p.finish();
    values_[key] = std::move(v);
  } catch (const ConfigError&) {
    ConfigValue v;
    v.data = literal;
    values_[key] = v;
  }
}

std::vector<int> parse_resolution(const std::string& text) {
  std::vector<int> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) throw ConfigError("malformed resolution '" + text + "' (expected e.g. 208x192)");
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(cur, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != cur.size() || v < 2) throw ConfigError("malformed resolution '" + text + "'");
    out.push_back(v);
    cur.clear();
  };
  for (char c : text) {
    if (c == 'x' || c == 'X' || c == ',') flush();
    else cur += c;
  }
  flush();
  if (out.size() > 3) throw ConfigError("resolution has more than 3 axes");
  return out;
}

CoefficientField geometry_from_config(const Config& cfg) {
  const std::string name = cfg.string("geometry");
  if (name != "custom") return builtin_geometry(name);
  const int dim = static_cast<int>(cfg.number("dimension", 2.0));
  if (dim < 1 || dim > 3) cfg.fail("dimension", "must be 1, 2 or 3");
  RegionList r;
  r.background = cfg.number("background");
  if (cfg.has("boxes")) {
    const auto& v = cfg.at("boxes");
    if (!v.is_array()) cfg.fail("boxes", "expected an array of {lo=[..], hi=[..], value=..} tables");
    for (const auto& e : std::get<ConfigValue::Array>(v.data)) {
      if (!e.is_table()) cfg.fail("boxes", "entries must be inline tables");
      const auto& t = std::get<ConfigValue::Table>(e.data);
      Box b;
      auto vec = [&](const char* k) {
        const auto it = t.find(k);
        if (it == t.end() || !it->second.is_array())
          cfg.fail("boxes", std::string("box is missing array '") + k + "'");
        std::vector<double> out;
        for (const auto& x : std::get<ConfigValue::Array>(it->second.data)) {
          if (!x.is_number()) cfg.fail("boxes", std::string("'") + k + "' entries must be numbers");
          out.push_back(std::get<double>(x.data));
        }
        if (static_cast<int>(out.size()) != dim)
          cfg.fail("boxes", std::string("'") + k + "' must have one entry per dimension");
        return out;
      };
      b.lo = vec("lo");
      b.hi = vec("hi");
      const auto it = t.find("value");
      if (it == t.end() || !it->second.is_number()) cfg.fail("boxes", "box is missing numeric 'value'");
      b.value = std::get<double>(it->second.data);
      r.boxes.push_back(std::move(b));
    }
  }
  if (cfg.boolean("mean_shift", false)) r.shift = 0.5 - r.mean();
  SymmetryFlags flags;
  flags.even_in_each_axis = cfg.boolean("even_symmetry", false);
  flags.axis_exchange = cfg.boolean("axis_exchange", false);
  if (r.min_value() <= 0.0) cfg.fail("background", "field values must be positive everywhere");
  return CoefficientField::piecewise(dim, std::move(r), flags, "custom");
}

namespace {

void write_array(std::ostream& out, const char* name, const std::vector<double>& v) {
  out << name << " = [";
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  out << "]\n";
}

std::vector<double> sym_entries(const SymMatrix& m) {
  std::vector<double> v;
  for (int i = 0; i < m.n(); ++i)
    for (int j = 0; j < m.n(); ++j) v.push_back(m(i, j));
  return v;
}

}  // namespace

void write_model(std::ostream& out, const EffectiveModel& m) {
  const auto old = out.precision(17);
  out << "geometry = \"" << m.geometry << "\"\n";
  out << "dimension = " << m.A.n() << "\n";
  if (!m.resolution.empty()) {
    std::vector<double> r(m.resolution.begin(), m.resolution.end());
    write_array(out, "resolution", r);
  }
  if (m.A.n() == 2) {
    out << "a1 = " << m.A(0, 0) << "\na2 = " << m.A(1, 1) << "\n";
    if (m.C.n() == 2)
      out << "alpha1 = " << m.C(0, 0, 0, 0) << "\nalpha2 = " << m.C(1, 1, 1, 1)
          << "\nbeta = " << m.C(0, 0, 1, 1) << "\n";
  }
  write_array(out, "A", sym_entries(m.A));
  if (m.C.n()) write_array(out, "C", m.C.data());
  if (m.E.n()) write_array(out, "E", sym_entries(m.E));
  if (m.F.n()) write_array(out, "F", m.F.data());
  out.precision(old);
}

EffectiveModel read_model(const Config& cfg) {
  EffectiveModel m;
  const int n = static_cast<int>(cfg.number("dimension"));
  if (n < 1 || n > 4) cfg.fail("dimension", "must be between 1 and 4");
  m.geometry = cfg.string("geometry", "custom");
  auto sym = [&](const std::string& key) {
    const auto v = cfg.numbers(key);
    if (static_cast<int>(v.size()) != n * n) cfg.fail(key, "expected dimension^2 entries");
    SymMatrix s(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (std::abs(v[i * n + j] - v[j * n + i]) > 1e-12 * (1.0 + std::abs(v[i * n + j])))
          cfg.fail(key, "matrix is not symmetric");
        if (j >= i) s.set(i, j, v[i * n + j]);
      }
    return s;
  };
  auto ten = [&](const std::string& key) {
    const auto v = cfg.numbers(key);
    if (static_cast<int>(v.size()) != n * n * n * n) cfg.fail(key, "expected dimension^4 entries");
    Tensor4 t(n);
    t.data() = v;
    return t;
  };
  if (cfg.has("A")) {
    m.A = sym("A");
    m.C = ten("C");
  } else if (n == 2) {
    symmetric_2d_tensors(cfg.number("a1"), cfg.number("a2"), cfg.number("alpha1"),
                         cfg.number("alpha2"), cfg.number("beta"), m.A, m.C);
  } else {
    cfg.fail("A", "missing required key");
  }
  if (cfg.has("E")) m.E = sym("E");
  if (cfg.has("F")) m.F = ten("F");
  if (cfg.has("resolution"))
    for (double r : cfg.numbers("resolution")) m.resolution.push_back(static_cast<int>(r));
  return m;
}

}  // namespace effwave
