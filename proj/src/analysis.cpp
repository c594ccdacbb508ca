#include "effwave/analysis.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "effwave/errors.hpp"

namespace effwave {

std::optional<double> interpolate(const WaveState& s, std::span<const double> x) {
  const DomainGrid& g = s.grid;
  const int d = g.dim();
  if (static_cast<int>(x.size()) != d) throw ContractViolation("point dimension mismatch");
  std::array<std::size_t, 3> lo{};
  std::array<std::size_t, 3> hi{};
  std::array<double, 3> frac{};
  for (int j = 0; j < d; ++j) {
    const int n = g.nodes(j);
    double u = (x[j] - g.origin[j]) / g.h[j];
    if (g.periodic(j)) {
      u = std::fmod(u, static_cast<double>(n));
      if (u < 0.0) u += n;
      const int i = std::min(static_cast<int>(std::floor(u)), n - 1);
      lo[j] = static_cast<std::size_t>(i);
      hi[j] = static_cast<std::size_t>((i + 1) % n);
      frac[j] = u - i;
      continue;
    }
    const double tol = 1e-9;
    if (u < -tol || u > (n - 1) + tol) return std::nullopt;
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    const int i = std::min(static_cast<int>(std::floor(u)), n - 2);
    lo[j] = static_cast<std::size_t>(i);
    hi[j] = static_cast<std::size_t>(i + 1);
    frac[j] = u - i;
  }
  double v = 0.0;
  for (int c = 0; c < (1 << d); ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int j = 0; j < d; ++j) {
      const bool up = (c >> j) & 1;
      w *= up ? frac[j] : 1.0 - frac[j];
      flat += (up ? hi[j] : lo[j]) * g.stride(j);
    }
    if (w != 0.0) v += w * s.now[flat];
  }
  return v;
}

double l2_error(const WaveState& u, const WaveState& w) {
  if (std::abs(u.time - w.time) > std::max(u.dt, w.dt) * (1.0 + 1e-9))
    throw ContractViolation("l2_error: states are at different times");
  const DomainGrid& g = u.grid;
  if (g.dim() != w.grid.dim()) throw ContractViolation("l2_error: dimension mismatch");
  const int d = g.dim();
  double cell = 1.0;
  for (double h : g.h) cell *= h;
  double sum = 0.0;
  bool any = false;
  for (std::size_t f = 0; f < g.size(); ++f) {
    std::array<double, 3> x{};
    std::size_t rem = f;
    double weight = cell;
    for (int j = 0; j < d; ++j) {
      const int n = g.nodes(j);
      const int t = static_cast<int>(rem % n);
      rem /= n;
      x[j] = g.coordinate(j, t);
      if (!g.periodic(j) && (t == 0 || t == n - 1)) weight *= 0.5;
    }
    const auto wv = interpolate(w, std::span<const double>(x.data(), d));
    if (!wv) continue;
    any = true;
    const double diff = u.now[f] - *wv;
    sum += weight * diff * diff;
  }
  if (!any) throw ContractViolation("l2_error: domains do not overlap");
  return std::sqrt(sum);
}

RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& errors) {
  if (eps.size() != errors.size()) throw ContractViolation("fit_rate: size mismatch");
  if (eps.size() < 3) throw ContractViolation("fit_rate needs at least 3 points");
  const double n = static_cast<double>(eps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !(errors[i] > 0.0)) throw ContractViolation("fit_rate needs positive data");
    const double x = std::log(eps[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (!(den > 1e-12 * n * sxx)) throw ContractViolation("fit_rate needs distinct eps values");
  RateFit fit;
  fit.rate = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.rate * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double r = std::log(errors[i]) - fit.intercept - fit.rate * std::log(eps[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

EllipticCoords elliptic_coords(std::array<double, 2> x, double a1, double a2) {
  if (!(a1 > 0.0) || !(a2 > 0.0)) throw ContractViolation("elliptic_coords needs a1, a2 > 0");
  if (x[0] < 0.0 || x[1] < 0.0) throw ContractViolation("elliptic_coords expects a quadrant point");
  const double s1 = x[0] / std::sqrt(a1), s2 = x[1] / std::sqrt(a2);
  const double r = std::hypot(s1, s2);
  if (r == 0.0) return {};
  return {r, std::atan2(s2, s1)};
}

std::array<double, 2> elliptic_point(double r, double phi, double a1, double a2) {
  return {r * std::sqrt(a1) * std::cos(phi), r * std::sqrt(a2) * std::sin(phi)};
}

namespace {

void check_angle(double phi) {
  if (!(phi >= 0.0 && phi <= 0.5 * std::numbers::pi + 1e-12))
    throw ContractViolation("ray angle must lie in [0, pi/2]");
}

std::vector<double> radii(double lo, double hi, int samples) {
  if (samples < 2 || !(hi > lo)) throw ContractViolation("ray needs at least 2 samples and r_hi > r_lo");
  std::vector<double> r(samples);
  for (int i = 0; i < samples; ++i) r[i] = lo + (hi - lo) * i / (samples - 1);
  return r;
}

std::vector<double> centered_derivative(const std::vector<double>& f, double dr) {
  const std::size_t n = f.size();
  std::vector<double> df(n, 0.0);
  if (n < 3) return df;
  df[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dr);
  df[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dr);
  for (std::size_t i = 1; i + 1 < n; ++i) df[i] = (f[i + 1] - f[i - 1]) / (2.0 * dr);
  return df;
}

}  // namespace

RayProfile extract_ray(const WaveState& state, double phi, double a1, double a2, double r_lo,
                       double r_hi, int samples) {
  check_angle(phi);
  if (state.grid.dim() != 2) throw ContractViolation("rays need a two-dimensional state");
  if (r_lo < 0.0) throw ContractViolation("static-frame rays start at r >= 0");
  RayProfile p;
  p.phi = phi;
  p.phi_polar = polar_angle(a1, a2, phi);
  p.time = state.time;
  for (double r : radii(r_lo, r_hi, samples)) {
    const auto x = elliptic_point(r, phi, a1, a2);
    const auto v = interpolate(state, x);
    if (!v) {
      p.truncated = true;
      break;
    }
    p.r.push_back(r);
    p.values.push_back(*v);
  }
  return p;
}

RayProfile moving_frame(const WaveState& state, double t, double phi, double a1, double a2,
                        double eps, double r_lo, double r_hi, int samples, bool derivative) {
  check_angle(phi);
  if (!(eps > 0.0)) throw ContractViolation("moving_frame needs eps > 0");
  const double shift = t / (eps * eps);
  if (std::abs(state.time - shift) > std::max(state.dt, 1e-12) * (1.0 + 1e-9))
    throw ContractViolation("moving_frame: state time differs from t / eps^2");
  RayProfile p;
  p.phi = phi;
  p.phi_polar = polar_angle(a1, a2, phi);
  p.time = t;
  p.eps = eps;
  for (double r : radii(r_lo, r_hi, samples)) {
    const double rho = r + shift;
    double value = 0.0;
    if (rho >= 0.0) {
      const auto v = interpolate(state, elliptic_point(rho, phi, a1, a2));
      if (!v) {
        p.truncated = true;
        break;
      }
      value = *v;
    }
    p.r.push_back(r);
    p.values.push_back(value);
  }
  if (derivative && p.r.size() >= 2) p.derivative = centered_derivative(p.values, p.r[1] - p.r[0]);
  return p;
}

KdvComparison kdv_compare(const Profile1D& u_t1, double kappa, double t1, double t2,
                          const Profile1D& u_t2) {
  if (!(t1 > 0.0) || !(t2 > t1)) throw ContractViolation("kdv_compare needs 0 < t1 < t2");
  if (u_t1.values.size() != u_t2.values.size() || std::abs(u_t1.dr - u_t2.dr) > 1e-12 * u_t1.dr ||
      std::abs(u_t1.r0 - u_t2.r0) > 1e-12 * std::max(1.0, std::abs(u_t1.r0)))
    throw ContractViolation("kdv_compare: profiles sampled differently");
  KdvComparison out;
  out.predicted = simulate_kdv(kappa, u_t1, t1, {t2}).profiles.front();
  double s = 0.0;
  for (std::size_t i = 0; i < u_t2.values.size(); ++i) {
    const double d = out.predicted.values[i] - u_t2.values[i];
    s += d * d;
  }
  out.discrepancy = std::sqrt(s * u_t1.dr);
  return out;
}

double trailing_mass(const WaveState& state, double phi, double a1, double a2, int samples) {
  const double t = state.time;
  if (!(t > 0.0)) throw ContractViolation("trailing_mass needs a positive time");
  const RayProfile p = extract_ray(state, phi, a1, a2, 0.3 * t, 0.9 * t, samples);
  double m = 0.0;
  for (std::size_t i = 1; i < p.r.size(); ++i)
    m += 0.5 * (p.values[i] * p.values[i] + p.values[i - 1] * p.values[i - 1]) * (p.r[i] - p.r[i - 1]);
  return m;
}

std::vector<int> conforming_cell_nodes(const std::string& geometry) {
  if (geometry == "rect") return {13, 12};
  if (geometry == "cross") return {9, 9};
  if (geometry == "laminate") return {10, 10};
  throw ConfigError("no conforming node count known for geometry '" + geometry + "'");
}

EffectiveModel effective_model(const CoefficientField& field, const CellGrid& grid, FaceRule rule) {
  const AcResult ac = run_algorithm_AC(field, grid, {}, rule);
  EffectiveModel m;
  m.A = ac.A;
  m.C = ac.C;
  DecompositionPart part;
  if (field.dim() == 2 && field.symmetry().even_in_each_axis) {
    part = decompose_symmetric_2d(ac.A(0, 0), ac.A(1, 1), ac.C(0, 0, 0, 0), ac.C(1, 1, 1, 1),
                                  ac.C(0, 0, 1, 1));
  } else {
    part = decompose(ac.A, ac.C);
  }
  m.E = part.E;
  m.F = part.F;
  m.geometry = field.name();
  m.resolution = grid.n;
  m.tolerance = 1e-10;
  return m;
}

ConvergenceStudy run_convergence(const CoefficientField& field, const ConvergenceOptions& opt,
                                 const std::function<void(const StudyPoint&)>& progress) {
  if (field.dim() != 2) throw ConfigError("the convergence study is two-dimensional");
  for (std::size_t i = 1; i < opt.eps.size(); ++i)
    if (!(opt.eps[i] < opt.eps[i - 1])) throw ConfigError("eps values must be strictly decreasing");
  const std::vector<int> nodes =
      opt.cell_nodes.empty() ? conforming_cell_nodes(field.name()) : opt.cell_nodes;
  const EffectiveModel model = effective_model(field, CellGrid(nodes), opt.face_rule);
  const double amax = std::max(model.A(0, 0), model.A(1, 1));

  ConvergenceStudy study;
  std::vector<double> es, errs;
  for (double eps : opt.eps) {
    const auto start = std::chrono::steady_clock::now();
    const double T = opt.t0 / (eps * eps);
    const double L = opt.length > 0.0 ? opt.length : 1.25 * std::sqrt(amax) * T + 10.0;

    SimConfig u;
    u.eps = eps;
    u.t_final = T;
    u.h.clear();
    u.length.clear();
    double limit = 0.01;
    for (int j = 0; j < 2; ++j) {
      const double h = 2.0 * std::numbers::pi * eps / nodes[j];
      u.h.push_back(h);
      u.length.push_back(std::ceil(L / h) * h);
      limit = std::min(limit, h / 4.0);
    }
    u.dt = T / std::ceil(T / limit);
    u.face_rule = opt.face_rule;
    const auto us = simulate_heterogeneous(field, u, {T});

    SimConfig w;
    w.eps = eps;
    w.t_final = T;
    w.dt = T / std::ceil(T / opt.dt_effective - 1e-9);
    const double Lw = std::ceil(L / opt.dx) * opt.dx;
    w.h = {opt.dx, opt.dx};
    w.length = {Lw, Lw};
    const auto ws = simulate_dispersive(model, w, {T});

    StudyPoint pt;
    pt.eps = eps;
    pt.t_final = T;
    pt.error = l2_error(us.front(), ws.front());
    pt.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    study.points.push_back(pt);
    es.push_back(eps);
    errs.push_back(pt.error);
    if (progress) progress(pt);
  }
  if (es.size() >= 3) study.fit = fit_rate(es, errs);
  return study;
}

}  // namespace effwave
