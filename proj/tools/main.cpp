#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "effwave/analysis.hpp"
#include "effwave/bloch.hpp"
#include "effwave/cell_solver.hpp"
#include "effwave/config.hpp"
#include "effwave/errors.hpp"
#include "effwave/field_io.hpp"
#include "effwave/geometry.hpp"
#include "effwave/pde_solvers.hpp"
#include "effwave/tensors.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace effwave;

namespace {

struct Globals {
  int threads = 0;
  std::string out_dir = ".";
  std::string config_path;
  std::vector<std::string> overrides;
  bool csv = false;
};

struct PublishedRow {
  std::string geometry;
  std::vector<int> coarse_res;
  std::array<double, 5> coarse;
  std::vector<int> fine_res;
  std::array<double, 5> fine;
  double tolerance;  // relative, for the fine values
};

// a1, a2, alpha1, alpha2, beta
const std::vector<PublishedRow>& published() {
  static const std::vector<PublishedRow> rows = {
      {"rect", {13, 12}, {0.2784, 0.1506, -0.369, -0.034, 0.032}, {208, 192},
       {0.281, 0.179, -0.273, -0.044, 0.024}, 0.03},
      {"cross", {18, 18}, {0.3816, 0.3816, -0.1970, -0.1970, 0.0394}, {288, 288},
       {0.406, 0.406, -0.235, -0.235, 0.044}, 0.03},
      {"laminate", {12, 16}, {0.8750, 0.3019, -1.9185, -0.0933, 0.1448}, {240, 320},
       {0.9200, 0.3125, -1.9645, -0.1170, 0.1599}, 0.02},
  };
  return rows;
}

template <class T>
T opt_as(CLI::App& sub, const std::string& name) {
  const CLI::Option* o = sub.get_option(name);
  if (o->count() == 0) return T{};
  return o->as<T>();
}

std::vector<int> default_fine_resolution(const std::string& geometry) {
  for (const auto& r : published())
    if (r.geometry == geometry) return r.fine_res;
  return {64, 64};
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("cannot parse number '" + item + "' in list '" + text + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::vector<double>> parse_points(const std::string& text) {
  std::vector<std::vector<double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';'))
    if (!item.empty()) out.push_back(parse_list(item));
  return out;
}

FaceRule parse_face_rule(const std::string& s) {
  if (s == "averaged") return FaceRule::averaged;
  if (s == "midpoint") return FaceRule::midpoint;
  throw ConfigError("unknown face rule '" + s + "' (expected averaged or midpoint)");
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

// Configuration with precedence: defaults < config file < --set < explicit flags.
class Settings {
 public:
  Settings(const Globals& g, json& record) : record_(record) {
    if (!g.config_path.empty()) cfg_ = Config::load(g.config_path);
    for (const auto& o : g.overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not of the form key=value");
      cfg_.set(o.substr(0, eq), o.substr(eq + 1));
    }
  }

  const Config& config() const { return cfg_; }

  double number(const std::string& key, const CLI::Option* flag, double flag_value, double fallback) {
    const double v = flag && flag->count() ? flag_value : cfg_.number(key, fallback);
    record_[key] = v;
    return v;
  }
  std::string string(const std::string& key, const CLI::Option* flag, const std::string& flag_value,
                     const std::string& fallback) {
    const std::string v = flag && flag->count() ? flag_value : cfg_.string(key, fallback);
    record_[key] = v;
    return v;
  }
  std::string required_string(const std::string& key, const CLI::Option* flag, const std::string& flag_value) {
    const std::string v = flag && flag->count() ? flag_value : cfg_.string(key);
    record_[key] = v;
    return v;
  }
  bool boolean(const std::string& key, const CLI::Option* flag, bool flag_value, bool fallback) {
    const bool v = flag && flag->count() ? flag_value : cfg_.boolean(key, fallback);
    record_[key] = v;
    return v;
  }
  std::vector<double> numbers(const std::string& key, const CLI::Option* flag, const std::string& flag_value,
                              std::vector<double> fallback) {
    const std::vector<double> v = flag && flag->count() ? parse_list(flag_value) : cfg_.numbers(key, fallback);
    record_[key] = v;
    return v;
  }
  std::vector<int> resolution(const std::string& key, const CLI::Option* flag, const std::string& flag_value,
                              std::vector<int> fallback) {
    std::vector<int> v = fallback;
    if (flag && flag->count()) {
      v = parse_resolution(flag_value);
    } else if (cfg_.has(key)) {
      const auto& cv = cfg_.at(key);
      if (cv.is_string()) v = parse_resolution(std::get<std::string>(cv.data));
      else {
        v.clear();
        for (double x : cfg_.numbers(key)) v.push_back(static_cast<int>(x));
      }
    }
    record_[key] = v;
    return v;
  }

 private:
  Config cfg_;
  json& record_;
};

CoefficientField resolve_geometry(Settings& s, const CLI::Option* flag, const std::string& value) {
  if (flag && flag->count()) {
    Config c;
    c.set("geometry", value);
    return geometry_from_config(c);
  }
  s.required_string("geometry", nullptr, "");
  return geometry_from_config(s.config());
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

json tensors_json(const EffectiveModel& m) {
  json j;
  j["A"] = m.A.matrix().data();
  if (m.C.n()) j["C"] = m.C.data();
  if (m.E.n()) j["E"] = m.E.matrix().data();
  if (m.F.n()) j["F"] = m.F.data();
  return j;
}

DecompositionPart decompose_model(const EffectiveModel& m, bool symmetric_shortcut) {
  if (symmetric_shortcut && m.A.n() == 2)
    return decompose_symmetric_2d(m.A(0, 0), m.A(1, 1), m.C(0, 0, 0, 0), m.C(1, 1, 1, 1), m.C(0, 0, 1, 1));
  return decompose(m.A, m.C);
}

bool even_structure(const EffectiveModel& m) {
  if (m.A.n() != 2 || m.A(0, 1) != 0.0) return false;
  const double b = m.C(0, 0, 1, 1);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          const int ones = i + j + k + l;
          const double v = m.C(i, j, k, l);
          if (ones % 2 == 1 && std::abs(v) > 1e-14) return false;
          if (ones == 2 && std::abs(v - b) > 1e-12 * (1.0 + std::abs(b))) return false;
        }
  return true;
}

void print_model(const EffectiveModel& m) {
  std::cout << std::setprecision(6);
  if (m.A.n() == 2) {
    std::cout << "a1 = " << m.A(0, 0) << "  a2 = " << m.A(1, 1) << "  a12 = " << m.A(0, 1) << "\n";
    std::cout << "alpha1 = " << m.C(0, 0, 0, 0) << "  alpha2 = " << m.C(1, 1, 1, 1)
              << "  beta = " << m.C(0, 0, 1, 1) << "\n";
    if (m.E.n() == 2)
      std::cout << "E11 = " << m.E(0, 0) << "  E22 = " << m.E(1, 1) << "  E12 = " << m.E(0, 1) << "\n";
    if (m.F.n() == 2)
      std::cout << "F1111 = " << m.F(0, 0, 0, 0) << "  F2222 = " << m.F(1, 1, 1, 1)
                << "  F2121 = " << m.F(1, 0, 1, 0) << "  F1212 = " << m.F(0, 1, 0, 1) << "\n";
  } else {
    for (int i = 0; i < m.A.n(); ++i) {
      std::cout << "A[" << i + 1 << "] =";
      for (int j = 0; j < m.A.n(); ++j) std::cout << " " << m.A(i, j);
      std::cout << "\n";
    }
  }
}

EffectiveModel load_model(const std::string& path, cli::RunManifest& man) {
  man.input(path);
  EffectiveModel m = read_model(Config::load(path));
  if (m.E.n() == 0 || m.F.n() == 0) {
    const auto part = decompose_model(m, even_structure(m));
    m.E = part.E;
    m.F = part.F;
  }
  return m;
}

// ---------------------------------------------------------------- coeffs

int cmd_coeffs(const Globals& g, cli::RunManifest& man, CLI::App& sub) {
  Settings s(g, man.config());
  if (!g.config_path.empty()) man.input(g.config_path);
  const auto field = resolve_geometry(s, sub.get_option("--geometry"), opt_as<std::string>(sub, "--geometry"));
  const auto res = s.resolution("cell_res", sub.get_option("--cell-res"), opt_as<std::string>(sub, "--cell-res"),
                                default_fine_resolution(field.name()));
  const FaceRule rule = parse_face_rule(
      s.string("face_rule", sub.get_option("--face-rule"), opt_as<std::string>(sub, "--face-rule"), "averaged"));
  const CellGrid grid(res);
  validate_field(field, 1000);
  const AcResult ac = run_algorithm_AC(field, grid, {}, rule);
  EffectiveModel m;
  m.A = ac.A;
  m.C = ac.C;
  m.geometry = field.name();
  m.resolution = res;
  const auto part = decompose_model(m, field.dim() == 2 && field.symmetry().even_in_each_axis);
  m.E = part.E;
  m.F = part.F;
  const double resid = verify_decomposition(m.A, m.C, m.E, m.F, 200);
  const PsdReport psd = psd_checks(m.E, m.F);

  std::cout << "geometry " << field.name() << " at " << res[0];
  for (std::size_t j = 1; j < res.size(); ++j) std::cout << "x" << res[j];
  std::cout << "\n";
  print_model(m);
  if (field.dim() == 2) {
    const auto ext = kappa_minimizer(m.A(0, 0), m.A(1, 1), m.C(0, 0, 0, 0), m.C(1, 1, 1, 1), m.C(0, 0, 1, 1));
    std::cout << "kappa(0) = " << kappa(m.A(0, 0), m.A(1, 1), m.C(0, 0, 0, 0), m.C(1, 1, 1, 1), m.C(0, 0, 1, 1), 0.0)
              << "  kappa(pi/2) = "
              << kappa(m.A(0, 0), m.A(1, 1), m.C(0, 0, 0, 0), m.C(1, 1, 1, 1), m.C(0, 0, 1, 1), std::numbers::pi / 2)
              << "\nweakest dispersion at phi = " << ext.phi_m << " (polar " << ext.phi_m_polar
              << "), kappa = " << ext.kappa_m << "\n";
    man.summary()["kappa_max"] = {{"phi", ext.phi_m}, {"kappa", ext.kappa_m}};
  }
  std::cout << "decomposition residual " << resid << ", E/F positive semi-definite: " << (psd.passed ? "yes" : "no")
            << "\n";

  const std::string path = out_path(g, "coeffs_" + field.name() + ".toml");
  {
    std::ofstream out(path);
    write_model(out, m);
  }
  man.artifact(path);
  const std::string field_csv = opt_as<std::string>(sub, "--field-csv");
  if (!field_csv.empty() && field.dim() == 2) {
    std::ofstream out(field_csv);
    write_field_csv(out, field, grid);
    out.close();
    man.artifact(field_csv);
  }
  man.summary()["tensors"] = tensors_json(m);
  man.summary()["cell_solves"] = ac.solves;
  man.summary()["max_cg_iterations"] = ac.max_iterations;
  man.summary()["max_cg_residual"] = ac.max_residual;
  man.summary()["imag_residue"] = ac.imag_residue;
  man.summary()["decomposition_residual"] = resid;
  man.summary()["psd_passed"] = psd.passed;
  std::cout << "wrote " << path << "\n";
  return 0;
}

// ---------------------------------------------------------------- decompose

int cmd_decompose(const Globals& g, cli::RunManifest& man, CLI::App& sub) {
  const std::string model_path = opt_as<std::string>(sub, "--model");
  man.config()["model"] = model_path;
  man.input(model_path);
  EffectiveModel m = read_model(Config::load(model_path));
  std::string method = opt_as<std::string>(sub, "--method");
  if (method.empty()) method = "auto";
  man.config()["method"] = method;
  if (method != "auto" && method != "general" && method != "symmetric")
    throw ConfigError("unknown decomposition method '" + method + "'");
  const bool shortcut = method == "symmetric" || (method == "auto" && even_structure(m));
  if (method == "symmetric" && !even_structure(m))
    throw ConfigError("the symmetric shortcut needs a two-dimensional even-symmetric (A, C)");
  const auto part = decompose_model(m, shortcut);
  m.E = part.E;
  m.F = part.F;
  const double resid = verify_decomposition(m.A, m.C, m.E, m.F, 1000);
  const PsdReport psd = psd_checks(m.E, m.F);
  print_model(m);
  std::cout << "method " << (shortcut ? "symmetric" : "general") << ", residual " << resid
            << ", E min eigenvalue " << psd.e_min << ", F min eigenvalue " << psd.f_min << "\n";
  const std::string path = out_path(g, fs::path(model_path).stem().string() + "_decomposed.toml");
  {
    std::ofstream out(path);
    write_model(out, m);
  }
  man.artifact(path);
  man.summary()["residual"] = resid;
  man.summary()["psd_passed"] = psd.passed;
  man.summary()["tensors"] = tensors_json(m);
  if (!psd.passed) throw DefinitenessError("decomposition produced a non positive semi-definite " + psd.failed_part);
  if (resid > 1e-10) throw NumericalError("decomposition residual " + fmt(resid) + " exceeds 1e-10");
  return 0;
}

// ---------------------------------------------------------------- band

int cmd_band(const Globals& g, cli::RunManifest& man, CLI::App& sub) {
  Settings s(g, man.config());
  const auto field = resolve_geometry(s, sub.get_option("--geometry"), opt_as<std::string>(sub, "--geometry"));
  const auto res = s.resolution("cell_res", sub.get_option("--cell-res"), opt_as<std::string>(sub, "--cell-res"),
                                std::vector<int>(field.dim(), 48));
  const std::string wp = s.string("waypoints", sub.get_option("--waypoints"),
                                  opt_as<std::string>(sub, "--waypoints"), "0,0;0.5,0;0.5,0.5;0,0");
  const int samples = static_cast<int>(s.number("samples", sub.get_option("--samples"),
                                                opt_as<int>(sub, "--samples"), 10));
  const int m = static_cast<int>(s.number("bands", sub.get_option("--bands"), opt_as<int>(sub, "--bands"), 3));
  const CellOperator op = assemble(field, CellGrid(res));
  const auto pts = band(op, parse_points(wp), samples, m);
  const std::string path = out_path(g, "band_" + field.name() + ".csv");
  std::ofstream out(path);
  for (int j = 0; j < field.dim(); ++j) out << "k" << j + 1 << ",";
  for (int b = 0; b < m; ++b) out << "mu" << b << (b + 1 < m ? "," : "\n");
  out << std::setprecision(12);
  double worst = 0.0;
  for (const auto& p : pts) {
    for (double k : p.k) out << k << ",";
    for (int b = 0; b < m; ++b) out << p.mu[b] << (b + 1 < m ? "," : "\n");
    for (double r : p.residuals) worst = std::max(worst, r);
  }
  out.close();
  man.artifact(path);
  man.summary()["points"] = pts.size();
  man.summary()["max_eigen_residual"] = worst;
  std::cout << "wrote " << pts.size() << " k-points to " << path << "\n";
  return 0;
}

// ---------------------------------------------------------------- taylor-check

int cmd_taylor(const Globals& g, cli::RunManifest& man, CLI::App& sub) {
  Settings s(g, man.config());
  const auto field = resolve_geometry(s, sub.get_option("--geometry"), opt_as<std::string>(sub, "--geometry"));
  const auto res = s.resolution("cell_res", sub.get_option("--cell-res"), opt_as<std::string>(sub, "--cell-res"),
                                default_fine_resolution(field.name()));
  const double step = s.number("step", sub.get_option("--step"), opt_as<double>(sub, "--step"), 0.02);
  const CellGrid grid(res);
  const CellOperator op = assemble(field, grid);
  const AcResult ac = run_algorithm_AC(op, field.symmetry());
  const TaylorReport rep = taylor_check(op, ac.A, ac.C, step);
  std::cout << std::setprecision(8) << "second derivatives (finite difference vs 2A):\n";
  for (const auto& e : rep.second)
    std::cout << "  " << to_string(e.alpha) << "  " << e.finite_difference << "  " << e.reference << "  rel "
              << e.rel_dev << "\n";
  std::cout << "fourth derivatives (finite difference vs 24C):\n";
  for (const auto& e : rep.fourth)
    std::cout << "  " << to_string(e.alpha) << "  " << e.finite_difference << "  " << e.reference << "  rel "
              << e.rel_dev << "\n";
  std::cout << "max relative deviation: second " << rep.max_rel_second << ", fourth " << rep.max_rel_fourth
            << " (" << rep.eigen_solves << " eigen-solves)\n";
  man.summary()["max_rel_second"] = rep.max_rel_second;
  man.summary()["max_rel_fourth"] = rep.max_rel_fourth;
  man.summary()["eigen_solves"] = rep.eigen_solves;
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateSetup {
  SimConfig cfg;
  std::vector<double> snapshots;
};

int cmd_simulate(const Globals& g, cli::RunManifest& man, CLI::App& sub) {
  Settings s(g, man.config());
  if (!g.config_path.empty()) man.input(g.config_path);
  const std::string equation =
      s.string("equation", sub.get_option("--equation"), opt_as<std::string>(sub, "--equation"), "eps");
  if (equation != "eps" && equation != "dispersive")
    throw ConfigError("unknown equation '" + equation + "' (expected eps or dispersive)");
  SimConfig cfg;
  cfg.eps = s.number("eps", sub.get_option("--eps"), opt_as<double>(sub, "--eps"), 0.1);
  if (!(cfg.eps > 0.0)) throw ConfigError("eps must be positive");
  cfg.t_final = s.number("t_final", sub.get_option("--t-final"), opt_as<double>(sub, "--t-final"),
                         0.5 / (cfg.eps * cfg.eps));
  cfg.full_step_init = s.boolean("full_step_init", sub.get_option("--full-step-init"), true, false);
  cfg.face_rule = parse_face_rule(
      s.string("face_rule", sub.get_option("--face-rule"), opt_as<std::string>(sub, "--face-rule"), "averaged"));
  const std::string initial = s.string("initial", nullptr, "", "gaussian");
  if (initial != "gaussian") throw ConfigError("unknown initial data '" + initial + "' (expected gaussian)");

  std::optional<CoefficientField> field;
  EffectiveModel model;
  std::vector<int> nodes;
  const std::string model_path = opt_as<std::string>(sub, "--model");
  if (equation == "dispersive" && !model_path.empty()) {
    man.config()["model"] = model_path;
    model = load_model(model_path, man);
  } else {
    field = resolve_geometry(s, sub.get_option("--geometry"), opt_as<std::string>(sub, "--geometry"));
    std::vector<int> fallback;
    try {
      fallback = conforming_cell_nodes(field->name());
    } catch (const ConfigError&) {
      fallback = {16, 16};
    }
    nodes = s.resolution("cell_nodes", sub.get_option("--cell-nodes"),
                         opt_as<std::string>(sub, "--cell-nodes"), fallback);
    model = effective_model(*field, CellGrid(nodes), cfg.face_rule);
  }
  const int d = model.A.n();
  double amax = 0.0;
  for (int j = 0; j < d; ++j) amax = std::max(amax, model.A(j, j));
  const double L = s.number("length", sub.get_option("--length"), opt_as<double>(sub, "--length"),
                            1.25 * std::sqrt(amax) * cfg.t_final + 10.0);
  std::vector<double> hdef;
  if (equation == "eps")
    for (int j = 0; j < d; ++j) hdef.push_back(2.0 * std::numbers::pi * cfg.eps / nodes[j]);
  else
    hdef.assign(d, 0.2);
  cfg.h = s.numbers("h", sub.get_option("--spacing"), opt_as<std::string>(sub, "--spacing"), hdef);
  if (cfg.h.size() == 1) cfg.h.assign(d, cfg.h[0]);
  if (static_cast<int>(cfg.h.size()) != d) throw ConfigError("key 'h' must have one entry per dimension");
  cfg.length.clear();
  for (int j = 0; j < d; ++j) cfg.length.push_back(std::ceil(L / cfg.h[j] - 1e-9) * cfg.h[j]);
  double dt_default = 0.02;
  if (equation == "eps") {
    dt_default = 0.01;
    for (double h : cfg.h) dt_default = std::min(dt_default, h / 4.0);
    dt_default = cfg.t_final / std::ceil(cfg.t_final / dt_default);
  }
  cfg.dt = s.number("dt", sub.get_option("--dt"), opt_as<double>(sub, "--dt"), dt_default);
  const auto snaps = s.numbers("snapshots", sub.get_option("--snapshots"),
                               opt_as<std::string>(sub, "--snapshots"), {cfg.t_final});
  man.config()["length_per_axis"] = cfg.length;

  SimStats stats;
  std::vector<WaveState> states;
  if (equation == "eps") states = simulate_heterogeneous(*field, cfg, snaps, &stats);
  else states = simulate_dispersive(model, cfg, snaps, &stats);
  if (!stats.warning.empty()) std::cerr << "warning: " << stats.warning << "\n";
  for (const auto& st : states) {
    std::ostringstream name;
    name << equation << "_t" << std::setprecision(6) << st.time << (g.csv ? ".csv" : ".bin");
    const std::string path = out_path(g, name.str());
    save_state(path, st, g.csv);
    man.artifact(path);
    std::cout << "t = " << st.time << " (step " << st.step << ") -> " << path << "\n";
  }
  man.summary()["steps"] = stats.steps;
  man.summary()["max_cg_iterations"] = stats.max_cg_iterations;
  man.summary()["max_cg_residual"] = stats.max_cg_residual;
  man.summary()["warning"] = stats.warning;
  man.summary()["tensors"] = tensors_json(model);
  return 0;
}

// ---------------------------------------------------------------- compare

int cmd_compare(const Globals&, cli::RunManifest& man, CLI::App& sub) {
  const auto files = opt_as<std::vector<std::string>>(sub, "files");
  if (files.size() != 2) throw ConfigError("compare needs exactly two snapshot files");
  for (const auto& f : files) man.input(f);
  man.config()["files"] = files;
  const WaveState a = load_state(files[0]);
  const WaveState b = load_state(files[1]);
  // interpolate the coarser state onto the finer one
  const bool a_finer = a.grid.h[0] <= b.grid.h[0];
  const double e = a_finer ? l2_error(a, b) : l2_error(b, a);
  std::cout << std::setprecision(10) << "L2 error " << e << "\n";
  man.summary()["l2_error"] = e;
  return 0;
}

// ---------------------------------------------------------------- convergence

void write_study(const std::string& path, const ConvergenceStudy& st) {
  std::ofstream out(path);
  out << "eps,T,error\n" << std::setprecision(12);
  for (const auto& p : st.points) out << p.eps << "," << p.t_final << "," << p.error << "\n";
}

ConvergenceStudy run_study(const Globals& g, Settings& s, CLI::App& sub, cli::RunManifest& man,
                           const CoefficientField& field) {
  ConvergenceOptions opt;
  opt.eps = s.numbers("eps", sub.get_option("--eps"), opt_as<std::string>(sub, "--eps"), opt.eps);
  opt.t0 = s.number("t0", sub.get_option("--t0"), opt_as<double>(sub, "--t0"), opt.t0);
  opt.dx = s.number("dx", nullptr, 0.0, opt.dx);
  opt.dt_effective = s.number("dt_effective", nullptr, 0.0, opt.dt_effective);
  opt.cell_nodes = s.resolution("cell_nodes", nullptr, "", conforming_cell_nodes(field.name()));
  const auto study = run_convergence(field, opt, [](const StudyPoint& p) {
    std::cout << "eps " << p.eps << "  T " << p.t_final << "  error " << std::setprecision(8) << p.error << "  ("
              << std::setprecision(3) << p.seconds << " s)\n"
              << std::flush;
  });
  const std::string path = out_path(g, "convergence_" + field.name() + ".csv");
  write_study(path, study);
  man.artifact(path);
  json pts = json::array();
  for (const auto& p : study.points) pts.push_back({{"eps", p.eps}, {"T", p.t_final}, {"error", p.error}});
  man.summary()["points"] = pts;
  if (study.points.size() >= 3) {
    std::cout << "fitted rate p = " << std::setprecision(6) << study.fit.rate << " (log-fit residual "
              << study.fit.residual << ")\n";
    man.summary()["rate"] = study.fit.rate;
    man.summary()["fit_residual"] = study.fit.residual;
  }
  return study;
}

int cmd_convergence(const Globals& g, cli::RunManifest& man, CLI::App& sub) {
  Settings s(g, man.config());
  const auto field = resolve_geometry(s, sub.get_option("--geometry"), opt_as<std::string>(sub, "--geometry"));
  run_study(g, s, sub, man, field);
  return 0;
}

// ---------------------------------------------------------------- ray

int cmd_ray(const Globals& g, cli::RunManifest& man, CLI::App& sub) {
  Settings s(g, man.config());
  const std::string snap = opt_as<std::string>(sub, "--snapshot");
  man.config()["snapshot"] = snap;
  man.input(snap);
  const WaveState st = load_state(snap);
  double a1 = 0.0, a2 = 0.0;
  const std::string model_path = opt_as<std::string>(sub, "--model");
  if (!model_path.empty()) {
    man.input(model_path);
    const EffectiveModel m = read_model(Config::load(model_path));
    a1 = m.A(0, 0);
    a2 = m.A(1, 1);
  }
  a1 = s.number("a1", sub.get_option("--a1"), opt_as<double>(sub, "--a1"), a1);
  a2 = s.number("a2", sub.get_option("--a2"), opt_as<double>(sub, "--a2"), a2);
  const auto angles = s.numbers("angles", sub.get_option("--angles"), opt_as<std::string>(sub, "--angles"),
                                {0.0, std::numbers::pi / 4});
  const int samples =
      static_cast<int>(s.number("samples", sub.get_option("--samples"), opt_as<int>(sub, "--samples"), 400));
  const double eps = s.number("eps", sub.get_option("--eps"), opt_as<double>(sub, "--eps"), 0.0);
  const bool moving = eps > 0.0;
  const double r_lo = s.number("r_min", sub.get_option("--r-min"), opt_as<double>(sub, "--r-min"),
                               moving ? -10.0 : 0.0);
  const double r_hi = s.number("r_max", sub.get_option("--r-max"), opt_as<double>(sub, "--r-max"),
                               moving ? 5.0 : st.time + 5.0);
  std::vector<RayProfile> rays;
  for (double phi : angles) {
    if (moving)
      rays.push_back(moving_frame(st, eps * eps * st.time, phi, a1, a2, eps, r_lo, r_hi, samples, true));
    else
      rays.push_back(extract_ray(st, phi, a1, a2, r_lo, r_hi, samples));
    if (rays.back().truncated) std::cerr << "warning: ray at phi = " << phi << " leaves the domain\n";
  }
  const std::string path = out_path(g, fs::path(snap).stem().string() + "_rays.csv");
  std::ofstream out(path);
  out << "r";
  for (double phi : angles) out << ",phi_" << std::setprecision(6) << phi;
  out << "\n" << std::setprecision(12);
  for (std::size_t i = 0; i < rays.front().r.size(); ++i) {
    out << rays.front().r[i];
    for (const auto& r : rays) out << "," << (i < r.values.size() ? r.values[i] : 0.0);
    out << "\n";
  }
  out.close();
  man.artifact(path);
  json masses = json::array();
  if (st.time > 0.0)
    for (double phi : angles) {
      const double mass = trailing_mass(st, phi, a1, a2);
      std::cout << "phi " << phi << " (polar " << polar_angle(a1, a2, phi) << "): trailing mass " << mass << "\n";
      masses.push_back({{"phi", phi}, {"trailing_mass", mass}});
    }
  man.summary()["trailing_mass"] = masses;
  std::cout << "wrote " << path << "\n";
  return 0;
}

// ---------------------------------------------------------------- kdv

int cmd_kdv(const Globals& g, cli::RunManifest& man, CLI::App& sub) {
  Settings s(g, man.config());
  const double kap = s.number("kappa", sub.get_option("--kappa"), opt_as<double>(sub, "--kappa"), -1.0);
  const double t0 = s.number("t0", sub.get_option("--t0"), opt_as<double>(sub, "--t0"), 1.0);
  const auto times = s.numbers("times", sub.get_option("--times"), opt_as<std::string>(sub, "--times"), {100.0});
  Profile1D u0;
  const std::string input = opt_as<std::string>(sub, "--input");
  if (!input.empty()) {
    man.input(input);
    std::ifstream in(input);
    if (!in) throw ConfigError("cannot open profile '" + input + "'");
    std::string line;
    std::getline(in, line);
    std::vector<double> r;
    while (std::getline(in, line)) {
      const auto v = parse_list(line);
      if (v.size() < 2) continue;
      r.push_back(v[0]);
      u0.values.push_back(v[1]);
    }
    if (r.size() < 4) throw ConfigError("profile '" + input + "' needs at least 4 rows");
    u0.r0 = r.front();
    u0.dr = (r.back() - r.front()) / (r.size() - 1);
  } else {
    const double width = s.number("width", sub.get_option("--width"), opt_as<double>(sub, "--width"), 5.0);
    const double half = s.number("half_length", sub.get_option("--half-length"),
                                 opt_as<double>(sub, "--half-length"), 60.0);
    const int n = static_cast<int>(s.number("points", sub.get_option("--points"), opt_as<int>(sub, "--points"), 2048));
    u0.r0 = -half;
    u0.dr = 2.0 * half / n;
    u0.values.resize(n);
    for (int i = 0; i < n; ++i) {
      const double r = u0.coordinate(i) / width;
      u0.values[i] = std::exp(-r * r);
    }
  }
  const KdvResult res = simulate_kdv(kap, u0, t0, times);
  if (res.wraparound_warning) std::cerr << "warning: the solution reaches the edge of the periodic box\n";
  const std::string path = out_path(g, "kdv.csv");
  std::ofstream out(path);
  out << "r";
  for (double t : times) out << ",U_t" << t;
  out << "\n" << std::setprecision(12);
  for (std::size_t i = 0; i < u0.values.size(); ++i) {
    out << u0.coordinate(i);
    for (const auto& p : res.profiles) out << "," << p.values[i];
    out << "\n";
  }
  out.close();
  man.artifact(path);
  man.summary()["wraparound_warning"] = res.wraparound_warning;
  std::cout << "wrote " << path << "\n";
  return 0;
}

// ---------------------------------------------------------------- reproduce

int cmd_reproduce_tables(const Globals& g, cli::RunManifest& man, bool check) {
  const char* names[5] = {"a1", "a2", "alpha1", "alpha2", "beta"};
  const std::string path = out_path(g, "tables.csv");
  std::ofstream out(path);
  out << "geometry,grid,quantity,computed,published,rel_deviation\n" << std::setprecision(8);
  bool ok = true;
  json rows = json::array();
  for (const auto& row : published()) {
    const auto field = builtin_geometry(row.geometry);
    for (int level = 0; level < 2; ++level) {
      const auto& res = level == 0 ? row.coarse_res : row.fine_res;
      const auto& ref = level == 0 ? row.coarse : row.fine;
      const AcResult ac = run_algorithm_AC(field, CellGrid(res));
      const std::array<double, 5> got = {ac.A(0, 0), ac.A(1, 1), ac.C(0, 0, 0, 0), ac.C(1, 1, 1, 1), ac.C(0, 0, 1, 1)};
      const std::string grid = std::to_string(res[0]) + "x" + std::to_string(res[1]);
      std::cout << row.geometry << " " << grid << (level ? " (converged)" : " (coarse)") << "\n";
      for (int q = 0; q < 5; ++q) {
        const double dev = std::abs(got[q] - ref[q]) / std::abs(ref[q]);
        const bool pass = level == 0 || dev <= row.tolerance;
        if (!pass) ok = false;
        std::cout << "  " << std::left << std::setw(7) << names[q] << std::right << std::setw(12) << fmt(got[q])
                  << "  published " << std::setw(8) << ref[q] << "  deviation " << std::setw(8) << fmt(100 * dev, 3)
                  << "%" << (level && !pass ? "  (outside tolerance)" : "") << "\n";
        out << row.geometry << "," << grid << "," << names[q] << "," << got[q] << "," << ref[q] << "," << dev << "\n";
        rows.push_back({{"geometry", row.geometry}, {"grid", grid}, {"quantity", names[q]}, {"computed", got[q]},
                        {"published", ref[q]}, {"rel_deviation", dev}});
      }
    }
  }
  out.close();
  man.artifact(path);
  man.summary()["rows"] = rows;
  man.summary()["within_tolerance"] = ok;
  if (check && !ok) {
    std::cout << "check FAILED: converged values outside the published tolerance\n";
    return static_cast<int>(ExitCode::acceptance);
  }
  return 0;
}

int cmd_reproduce(const Globals& g, cli::RunManifest& man, CLI::App& sub) {
  const std::string target = opt_as<std::string>(sub, "target");
  const bool check = sub.get_option("--check")->count() > 0;
  man.config()["target"] = target;
  man.config()["check"] = check;
  if (target == "tables") return cmd_reproduce_tables(g, man, check);
  if (target == "eps-rate") {
    Settings s(g, man.config());
    const auto field = builtin_geometry("rect");
    const auto study = run_study(g, s, sub, man, field);
    if (check) {
      const bool ok = study.fit.rate >= 0.8 && study.fit.rate <= 1.3;
      std::cout << "check " << (ok ? "passed" : "FAILED") << ": rate " << study.fit.rate << " in [0.8, 1.3]\n";
      if (!ok) return static_cast<int>(ExitCode::acceptance);
    }
    return 0;
  }
  throw ConfigError("unknown reproduce target '" + target + "' (expected eps-rate or tables)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective dispersive models for waves in periodic media"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  if (const char* env = std::getenv("EFFWAVE_THREADS")) g.threads = std::atoi(env);
  app.add_option("--threads", g.threads, "Worker threads (default: EFFWAVE_THREADS or all cores)");
  app.add_option("--out-dir", g.out_dir, "Directory for artifacts and the run manifest");
  app.add_option("--config", g.config_path, "TOML-style configuration file");
  app.add_option("--set", g.overrides, "Override a configuration key: key=value");
  app.add_flag("--csv", g.csv, "Write field snapshots as CSV instead of binary");

  auto* coeffs = app.add_subcommand("coeffs", "Effective tensors A, C, E, F from the cell problems");
  coeffs->add_option("--geometry", "rect, cross, laminate (or custom via --config)");
  coeffs->add_option("--cell-res", "Cell grid resolution, e.g. 208x192");
  coeffs->add_option("--face-rule", "averaged or midpoint");
  coeffs->add_option("--field-csv", "Also dump the sampled field as CSV")->default_str("");

  auto* dec = app.add_subcommand("decompose", "E, F from an (A, C) model file");
  dec->add_option("--model", "Model file")->required();
  dec->add_option("--method", "auto, general or symmetric")->default_str("auto");

  auto* bnd = app.add_subcommand("band", "Lowest Bloch eigenvalues along a path");
  bnd->add_option("--geometry", "rect, cross or laminate");
  bnd->add_option("--cell-res", "Cell grid resolution");
  bnd->add_option("--waypoints", "Semicolon-separated k points, e.g. 0,0;0.5,0");
  bnd->add_option("--samples", "Samples per segment");
  bnd->add_option("--bands", "Number of eigenvalues");

  auto* tay = app.add_subcommand("taylor-check", "Finite differences of the lowest Bloch eigenvalue against A and C");
  tay->add_option("--geometry", "rect, cross or laminate");
  tay->add_option("--cell-res", "Cell grid resolution");
  tay->add_option("--step", "Finite-difference step in k");

  auto* sim = app.add_subcommand("simulate", "Heterogeneous or effective time-domain simulation");
  sim->add_option("--equation", "eps (heterogeneous) or dispersive");
  sim->add_option("--geometry", "Medium for the heterogeneous equation");
  sim->add_option("--model", "Model file for the dispersive equation")->default_str("");
  sim->add_option("--cell-nodes", "Nodes per period, e.g. 13x12");
  sim->add_option("--eps", "Period of the medium");
  sim->add_option("--t-final", "Final time");
  sim->add_option("--dt", "Time step");
  sim->add_option("--spacing", "Spacing, one value or one per axis");
  sim->add_option("--length", "Quadrant side length");
  sim->add_option("--snapshots", "Comma-separated snapshot times");
  sim->add_option("--face-rule", "averaged or midpoint");
  sim->add_flag("--full-step-init", "First step u1 = u0 + dt^2 L u0");

  auto* cmp = app.add_subcommand("compare", "L2 distance between two snapshots");
  cmp->add_option("files", "Two snapshot files")->expected(2)->required();

  auto* conv = app.add_subcommand("convergence", "Error between heterogeneous and effective solutions over eps");
  conv->add_option("--geometry", "rect, cross or laminate");
  conv->add_option("--eps", "Comma-separated, strictly decreasing");
  conv->add_option("--t0", "Final times T = t0 / eps^2");

  auto* ray = app.add_subcommand("ray", "Profiles along elliptic rays of a snapshot");
  ray->add_option("--snapshot", "Snapshot file")->required();
  ray->add_option("--model", "Model file supplying a1, a2")->default_str("");
  ray->add_option("--a1", "Effective a1 (instead of --model)");
  ray->add_option("--a2", "Effective a2 (instead of --model)");
  ray->add_option("--angles", "Elliptic angles, comma-separated");
  ray->add_option("--samples", "Samples per ray");
  ray->add_option("--r-min", "First radius");
  ray->add_option("--r-max", "Last radius");
  ray->add_option("--eps", "Sample in the moving frame of this eps");

  auto* kdv = app.add_subcommand("kdv", "Linearized cylindrical KdV evolution of a profile");
  kdv->add_option("--kappa", "Dispersion coefficient");
  kdv->add_option("--t0", "Initial time");
  kdv->add_option("--times", "Comma-separated output times");
  kdv->add_option("--input", "CSV profile (r,U)")->default_str("");
  kdv->add_option("--width", "Width of the default Gaussian profile");
  kdv->add_option("--half-length", "Half width of the periodic r box");
  kdv->add_option("--points", "Grid points");

  auto* rep = app.add_subcommand("reproduce", "Coefficient tables against published values (tables) or the eps-convergence study (eps-rate)");
  rep->add_option("target", "tables or eps-rate")->required();
  rep->add_flag("--check", "Exit with status 3 if the published values are not reproduced");
  rep->add_option("--eps", "eps values for eps-rate");
  rep->add_option("--t0", "Final times T = t0 / eps^2 for eps-rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::config);
  }

#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
  const int workers = omp_get_max_threads();
#else
  const int workers = 1;
#endif

  CLI::App* sub = app.get_subcommands().front();
  cli::RunManifest man(sub->get_name(), g.out_dir);
  man.config()["threads"] = workers;
  man.config()["out_dir"] = g.out_dir;
  if (!g.config_path.empty()) man.config()["config_file"] = g.config_path;
  man.config()["overrides"] = g.overrides;
  int code = 0;
  std::string error;
  try {
    const std::string name = sub->get_name();
    if (name == "coeffs") code = cmd_coeffs(g, man, *sub);
    else if (name == "decompose") code = cmd_decompose(g, man, *sub);
    else if (name == "band") code = cmd_band(g, man, *sub);
    else if (name == "taylor-check") code = cmd_taylor(g, man, *sub);
    else if (name == "simulate") code = cmd_simulate(g, man, *sub);
    else if (name == "compare") code = cmd_compare(g, man, *sub);
    else if (name == "convergence") code = cmd_convergence(g, man, *sub);
    else if (name == "ray") code = cmd_ray(g, man, *sub);
    else if (name == "kdv") code = cmd_kdv(g, man, *sub);
    else if (name == "reproduce") code = cmd_reproduce(g, man, *sub);
  } catch (const Error& e) {
    error = e.what();
    code = static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    error = e.what();
    code = static_cast<int>(ExitCode::numerical);
  }
  if (!error.empty()) std::cerr << "error: " << error << "\n";
  try {
    man.write(code, error);
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write manifest: " << e.what() << "\n";
    if (code == 0) code = static_cast<int>(ExitCode::numerical);
  }
  return code;
}
