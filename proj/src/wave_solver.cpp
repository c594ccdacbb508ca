#include <algorithm>
#include <cmath>
#include <sstream>

#include "effwave/errors.hpp"
#include "effwave/pde_solvers.hpp"

namespace effwave {

FourierProfile FourierProfile::gaussian(int dim, double kmax, int nk) {
  FourierProfile p;
  p.dim = dim;
  p.kmax = kmax;
  p.nk = nk;
  std::size_t total = 1;
  for (int j = 0; j < dim; ++j) total *= static_cast<std::size_t>(nk);
  p.values.resize(total);
  const double pref = std::pow(2.0 * std::numbers::pi, -0.5 * dim) *
                      std::pow(0.5 * std::sqrt(std::numbers::pi), dim);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double k2 = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double k = p.node(static_cast<int>(rem % nk));
      rem /= nk;
      k2 += k * k;
    }
    p.values[flat] = pref * std::exp(-k2 / 16.0);
  }
  return p;
}

double InitialData::value(std::span<const double> x) const {
  switch (kind) {
    case Kind::gaussian: {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      return std::exp(-4.0 * r2);
    }
    case Kind::custom:
      if (!custom) throw ConfigError("custom initial data without a function");
      return custom(x);
    case Kind::fourier_profile: {
      const int d = profile.dim;
      SymMatrix A(d);
      for (int j = 0; j < d; ++j) A.set(j, j, 1.0);
      return reference_veps(profile, A, Tensor4(d), 0.0, 0.0,
                            {std::vector<double>(x.begin(), x.end())})
          .values.front();
    }
  }
  return 0.0;
}

DomainGrid SimConfig::grid() const {
  std::vector<std::array<Boundary, 2>> b = boundary;
  if (b.empty()) b.assign(h.size(), {Boundary::neumann, Boundary::dirichlet});
  DomainGrid g(length, h, b);
  if (!origin.empty()) {
    if (origin.size() != h.size()) throw ConfigError("origin has wrong dimension");
    g.origin = origin;
  }
  return g;
}

namespace {

std::vector<double> initial_field(const DomainGrid& g, const InitialData& init) {
  std::vector<double> u(g.size());
  const int d = g.dim();
#pragma omp parallel for schedule(static)
  for (long long f = 0; f < static_cast<long long>(g.size()); ++f) {
    std::array<double, 3> x{};
    std::size_t rem = static_cast<std::size_t>(f);
    for (int j = 0; j < d; ++j) {
      const int n = g.nodes(j);
      x[j] = g.coordinate(j, static_cast<int>(rem % n));
      rem /= n;
    }
    u[f] = init.value(std::span<const double>(x.data(), d));
  }
  return u;
}

std::vector<char> pinned_nodes(const DomainGrid& g) {
  std::vector<char> pin(g.size(), 0);
  for (std::size_t f = 0; f < g.size(); ++f) {
    std::size_t rem = f;
    for (int j = 0; j < g.dim(); ++j) {
      const int n = g.nodes(j);
      const int t = static_cast<int>(rem % n);
      rem /= n;
      if (g.periodic(j)) continue;
      if ((t == 0 && g.boundary[j][0] == Boundary::dirichlet) ||
          (t == n - 1 && g.boundary[j][1] == Boundary::dirichlet))
        pin[f] = 1;
    }
  }
  return pin;
}

// out = div(a grad u) with flux-form faces; Neumann sides mirror the first face.
void apply_flux_operator(const DomainGrid& g, const FaceCoefficients& faces,
                         std::span<const double> u, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (int axis = 0; axis < g.dim(); ++axis) {
    const auto& a = faces.values[axis];
    const double h2 = g.h[axis] * g.h[axis];
    const std::size_t s = g.stride(axis);
    const std::size_t n = static_cast<std::size_t>(g.nodes(axis));
    const bool per = g.periodic(axis);
    const bool neu_lo = !per && g.boundary[axis][0] == Boundary::neumann;
    const bool neu_hi = !per && g.boundary[axis][1] == Boundary::neumann;
    const long long lines = static_cast<long long>(g.size() / n);
#pragma omp parallel for schedule(static)
    for (long long line = 0; line < lines; ++line) {
      const std::size_t l = static_cast<std::size_t>(line);
      const std::size_t base = (l / s) * s * n + (l % s);
      const std::size_t faces_n = per ? n : n - 1;
      // flux on face t between node t and t+1 (times h)
      double prev_flux = 0.0;
      if (per) {
        const std::size_t i = base + (n - 1) * s;
        prev_flux = a[i] * (u[base] - u[i]);
      }
      for (std::size_t t = 0; t < n; ++t) {
        const std::size_t i = base + t * s;
        double flux = 0.0;
        if (t < faces_n) {
          const std::size_t ip = base + ((t + 1) % n) * s;
          flux = a[i] * (u[ip] - u[i]);
        } else if (neu_hi) {
          flux = -prev_flux;
        }
        double left = prev_flux;
        if (t == 0 && !per) left = neu_lo ? -flux : 0.0;
        out[i] += (flux - left) / h2;
        prev_flux = flux;
      }
    }
  }
}

void check_finite(std::span<const double> u, long step) {
  for (double v : u)
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite value detected at step " << step;
      throw InstabilityError(os.str(), step);
    }
}

std::vector<long> snapshot_steps(const std::vector<double>& snapshots, double dt, double t_final) {
  std::vector<long> steps;
  for (double t : snapshots) {
    if (t < 0.0 || t > t_final + 0.5 * dt) throw ConfigError("snapshot time outside [0, T]");
    steps.push_back(std::lround(t / dt));
  }
  return steps;
}

}  // namespace

std::vector<WaveState> simulate_heterogeneous(const CoefficientField& field, const SimConfig& cfg,
                                              const std::vector<double>& snapshots,
                                              SimStats* stats) {
  const DomainGrid g = cfg.grid();
  if (field.dim() != g.dim()) throw ConfigError("field and domain dimensions differ");
  double limit = 0.01;
  for (double h : g.h) limit = std::min(limit, h / 4.0);
  if (!(cfg.dt > 0.0) || cfg.dt > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "time step " << cfg.dt << " violates dt <= min(0.01, h/4) = " << limit;
    throw ConfigError(os.str());
  }
  if (!(cfg.eps > 0.0)) throw ConfigError("eps must be positive");
  const FaceCoefficients faces = sample_faces(field, g, cfg.eps, cfg.face_rule);
  SimStats st;
  if (!faces.conforming) st.warning = faces.warning;
  const auto pin = pinned_nodes(g);
  const std::size_t n = g.size();
  const double dt2 = cfg.dt * cfg.dt;
  const long nsteps = std::lround(cfg.t_final / cfg.dt);
  const auto want = snapshot_steps(snapshots, cfg.dt, cfg.t_final);

  std::vector<double> u0 = initial_field(g, cfg.initial), lu(n), u1(n), u2(n);
  for (std::size_t i = 0; i < n; ++i)
    if (pin[i]) u0[i] = 0.0;
  std::vector<WaveState> out(want.size());
  auto record = [&](long step, const std::vector<double>& now, const std::vector<double>& prev) {
    for (std::size_t s = 0; s < want.size(); ++s)
      if (want[s] == step) out[s] = WaveState{g, now, prev, step * cfg.dt, cfg.dt, step};
  };
  record(0, u0, u0);
  apply_flux_operator(g, faces, u0, lu);
  const double start = cfg.full_step_init ? dt2 : 0.5 * dt2;
  for (std::size_t i = 0; i < n; ++i) u1[i] = pin[i] ? 0.0 : u0[i] + start * lu[i];
  if (nsteps >= 1) record(1, u1, u0);
  for (long step = 2; step <= nsteps; ++step) {
    apply_flux_operator(g, faces, u1, lu);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      u2[i] = pin[i] ? 0.0 : 2.0 * u1[i] - u0[i] + dt2 * lu[i];
    std::swap(u0, u1);
    std::swap(u1, u2);
    if (step % 100 == 0 || step == nsteps) check_finite(u1, step);
    record(step, u1, u0);
  }
  st.steps = nsteps;
  if (stats) *stats = st;
  return out;
}

}  // namespace effwave
