#include <algorithm>
#include <cmath>
#include <sstream>

#include "effwave/errors.hpp"
#include "effwave/linalg.hpp"
#include "effwave/pde_solvers.hpp"

namespace effwave {

std::vector<WaveState> simulate_dispersive(const EffectiveModel& model, const SimConfig& cfg,
                                           const std::vector<double>& snapshots, SimStats* stats) {
  const DomainGrid g = cfg.grid();
  const int d = g.dim();
  if (model.A.n() != d) throw ConfigError("model and domain dimensions differ");
  if (!(cfg.dt > 0.0)) throw ConfigError("time step must be positive");
  if (cfg.eps < 0.0) throw ConfigError("eps must be non-negative");
  const DispersiveStencils ops(g);
  const auto& pin = ops.pinned();
  const auto& weights = ops.weights();
  const std::size_t n = g.size();
  const double dt2 = cfg.dt * cfg.dt;
  const double e2 = cfg.eps * cfg.eps;
  const long nsteps = std::lround(cfg.t_final / cfg.dt);

  const bool has_E = model.E.n() == d && model.E.max_abs() > 0.0;
  bool has_F = model.F.n() == d;
  if (has_F) has_F = model.F.norm() > 0.0;
  const bool implicit = e2 > 0.0 && has_E;
  const bool fourth = e2 > 0.0 && has_F;

  std::vector<long> want;
  for (double t : snapshots) {
    if (t < 0.0 || t > cfg.t_final + 0.5 * cfg.dt) throw ConfigError("snapshot time outside [0, T]");
    want.push_back(std::lround(t / cfg.dt));
  }
  std::vector<WaveState> out(want.size());
  auto record = [&](long step, const std::vector<double>& now, const std::vector<double>& prev) {
    for (std::size_t s = 0; s < want.size(); ++s)
      if (want[s] == step) out[s] = WaveState{g, now, prev, step * cfg.dt, cfg.dt, step};
  };

  std::vector<double> diag(n, 1.0);
  if (implicit) {
    double c = 0.0;
    for (int j = 0; j < d; ++j) c += model.E(j, j) * 30.0 / (12.0 * g.h[j] * g.h[j]);
    for (std::size_t i = 0; i < n; ++i) diag[i] = 1.0 + e2 * c;
  }
  std::vector<double> tmp(n);
  auto apply_implicit = [&](const std::vector<double>& x, std::vector<double>& y) {
    ops.second(model.E, x, tmp);
    for (std::size_t i = 0; i < n; ++i) y[i] = pin[i] ? 0.0 : x[i] - e2 * tmp[i];
  };
  auto precond = [&](const std::vector<double>& r, std::vector<double>& z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  };
  auto project = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i)
      if (pin[i]) x[i] = 0.0;
  };
  SimStats st;
  const CgOptions cg{cfg.cg_tol, std::max<int>(1000, static_cast<int>(20 * std::sqrt(double(n))))};
  auto solve = [&](const std::vector<double>& z, std::vector<double>& w, long step) {
    if (!implicit) {
      w = z;
      project(w);
      return;
    }
    const CgResult r = conjugate_gradient<double>(apply_implicit, precond, project, weights, z, w, cg);
    st.max_cg_iterations = std::max(st.max_cg_iterations, r.iterations);
    st.max_cg_residual = std::max(st.max_cg_residual, r.relative_residual);
    if (!r.converged) {
      std::ostringstream os;
      os << "implicit solve did not converge at step " << step;
      throw ConvergenceError(os.str(), r.iterations, r.relative_residual);
    }
  };
  std::vector<double> rhs(n), lap(n), bih(n);
  // rhs = (A D^2 - eps^2 F D^4) w
  auto explicit_part = [&](const std::vector<double>& w) {
    ops.second(model.A, w, lap);
    if (fourth) {
      ops.fourth(model.F, w, bih);
      for (std::size_t i = 0; i < n; ++i) rhs[i] = lap[i] - e2 * bih[i];
    } else {
      rhs = lap;
    }
  };
  auto to_z = [&](const std::vector<double>& w, std::vector<double>& z) {
    if (implicit) apply_implicit(w, z);
    else z = w;
  };

  std::vector<double> w0(n), w1(n), w2(n), z0(n), z1(n), z2(n);
  for (std::size_t f = 0; f < n; ++f) {
    std::array<double, 3> x{};
    std::size_t rem = f;
    for (int j = 0; j < d; ++j) {
      const int m = g.nodes(j);
      x[j] = g.coordinate(j, static_cast<int>(rem % m));
      rem /= m;
    }
    w0[f] = pin[f] ? 0.0 : cfg.initial.value(std::span<const double>(x.data(), d));
  }
  record(0, w0, w0);
  to_z(w0, z0);
  explicit_part(w0);
  const double start = cfg.full_step_init ? dt2 : 0.5 * dt2;
  for (std::size_t i = 0; i < n; ++i) z1[i] = pin[i] ? 0.0 : z0[i] + start * rhs[i];
  w1 = w0;
  solve(z1, w1, 1);
  if (nsteps >= 1) record(1, w1, w0);
  for (long step = 2; step <= nsteps; ++step) {
    explicit_part(w1);
    for (std::size_t i = 0; i < n; ++i) {
      z2[i] = pin[i] ? 0.0 : 2.0 * z1[i] - z0[i] + dt2 * rhs[i];
      w2[i] = 2.0 * w1[i] - w0[i];
    }
    solve(z2, w2, step);
    std::swap(z0, z1);
    std::swap(z1, z2);
    std::swap(w0, w1);
    std::swap(w1, w2);
    if (step % 100 == 0 || step == nsteps)
      for (double v : w1)
        if (!std::isfinite(v)) {
          std::ostringstream os;
          os << "non-finite value detected at step " << step;
          throw InstabilityError(os.str(), step);
        }
    record(step, w1, w0);
  }
  st.steps = nsteps;
  if (stats) *stats = st;
  return out;
}

}  // namespace effwave
