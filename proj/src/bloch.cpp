#include "effwave/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "effwave/errors.hpp"
#include "effwave/fft.hpp"

namespace effwave {

namespace {

using Vec = std::vector<Complex>;

Complex dot(const Vec& a, const Vec& b) {
  Complex s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(std::max(0.0, dot(a, a).real())); }

void remove_mean(Vec& v) {
  Complex s{};
  for (const auto& x : v) s += x;
  s /= static_cast<double>(v.size());
  for (auto& x : v) x -= s;
}

// Classical Gram-Schmidt applied twice; returns false if a column collapses.
bool orthonormalize(std::vector<Vec>& cols) {
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t p = 0; p < c; ++p) {
        const Complex r = dot(cols[p], cols[c]);
        for (std::size_t i = 0; i < cols[c].size(); ++i) cols[c][i] -= r * cols[p][i];
      }
    const double nrm = norm2(cols[c]);
    if (!(nrm > 1e-300)) return false;
    for (auto& x : cols[c]) x /= nrm;
  }
  return true;
}

// Appends the columns of `extra` orthonormalized against `basis`, dropping
// numerically dependent ones.
void extend_basis(std::vector<Vec>& basis, std::vector<Vec> extra) {
  for (auto& v : extra) {
    const double n0 = norm2(v);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& p : basis) {
        const Complex r = dot(p, v);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= r * p[i];
      }
    const double nrm = norm2(v);
    if (!(nrm > 1e-8 * n0)) continue;
    for (auto& x : v) x /= nrm;
    basis.push_back(std::move(v));
  }
}

void check_zone(std::span<const double> k, int dim) {
  if (static_cast<int>(k.size()) != dim) throw ContractViolation("Bloch vector has wrong dimension");
  for (double v : k)
    if (!(std::abs(v) <= 0.5 + 1e-12))
      throw ContractViolation("Bloch vector component outside [-1/2, 1/2]");
}

}  // namespace

BlochOperator::BlochOperator(CellOperator base, std::vector<double> k)
    : base_(std::move(base)), k_(std::move(k)) {
  check_zone(k_, base_.dim());
}

double BlochOperator::rayleigh_quotient(std::span<const Complex> f) const {
  double nn = 0.0;
  for (const auto& v : f) nn += std::norm(v);
  return base_.energy(f, k_) / nn;
}

BlochOperator assemble_shifted(const CoefficientField& field, const CellGrid& grid,
                               std::vector<double> k, FaceRule rule) {
  return BlochOperator(assemble(field, grid, rule), std::move(k));
}

BlochPoint lowest_eigenpairs(const CellOperator& op, std::span<const double> k, int m,
                             const BlochOptions& opt) {
  if (m < 1) throw ContractViolation("lowest_eigenpairs: m must be at least 1");
  check_zone(k, op.dim());
  const std::size_t n = op.size();
  const bool zero_k = std::all_of(k.begin(), k.end(), [](double v) { return v == 0.0; });
  const std::vector<double> kv(k.begin(), k.end());
  BlochPoint out;
  out.k = kv;

  std::vector<Vec> locked;
  if (zero_k) locked.push_back(Vec(n, Complex(1.0 / std::sqrt(static_cast<double>(n)), 0.0)));
  const int nfree = m - static_cast<int>(locked.size());
  std::vector<Vec> X;
  std::vector<double> theta;
  std::vector<double> resid;

  if (nfree > 0) {
    const int b = nfree + opt.guard;
    std::vector<double> h(op.dim()), abar(op.dim());
    for (int j = 0; j < op.dim(); ++j) {
      h[j] = op.grid().h(j);
      abar[j] = op.face_mean(j);
    }
    SpectralPreconditioner pre(op.grid().n, h, abar, kv);
    auto project = [&](Vec& v) {
      if (zero_k) remove_mean(v);
    };
    auto apply = [&](const Vec& x, Vec& y) { op.apply(x, y, kv); };
    auto precond = [&](const Vec& r, Vec& z) { pre.apply(r, z); };

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal;
    X.assign(b, Vec(n));
    for (auto& col : X) {
      for (auto& v : col) v = Complex(normal(rng), normal(rng));
      project(col);
    }
    if (!orthonormalize(X)) throw NumericalError("lowest_eigenpairs: degenerate start block");
    theta.assign(b, 0.0);
    int it = 0;
    for (; it < opt.max_outer; ++it) {
      std::vector<Vec> Y(b, Vec(n));
      for (int c = 0; c < b; ++c) {
        if (theta[c] > 0.0)
          for (std::size_t i = 0; i < n; ++i) Y[c][i] = X[c][i] / theta[c];
        conjugate_gradient<Complex>(apply, precond, project, {}, X[c], Y[c],
                                    CgOptions{opt.inner_tol, static_cast<int>(std::min<std::size_t>(20 * n, 5000))});
        project(Y[c]);
      }
      // Rayleigh-Ritz over the previous Ritz vectors and the new block
      if (!orthonormalize(Y)) throw NumericalError("lowest_eigenpairs: block collapsed");
      std::vector<Vec> S = std::move(Y);
      if (it > 0) extend_basis(S, X);
      const int s = static_cast<int>(S.size());
      std::vector<Vec> W(s, Vec(n));
      for (int c = 0; c < s; ++c) apply(S[c], W[c]);
      ComplexMatrix H(s, s);
      for (int r = 0; r < s; ++r)
        for (int c = r; c < s; ++c) {
          const Complex v = dot(S[r], W[c]);
          H(r, c) = v;
          H(c, r) = std::conj(v);
        }
      for (int r = 0; r < s; ++r) H(r, r) = H(r, r).real();
      const auto eig = hermitian_eigen(H);
      std::vector<Vec> Xn(b, Vec(n)), Wn(b, Vec(n));
      for (int c = 0; c < b; ++c)
        for (int r = 0; r < s; ++r) {
          const Complex v = eig.vectors(r, c);
          for (std::size_t i = 0; i < n; ++i) {
            Xn[c][i] += S[r][i] * v;
            Wn[c][i] += W[r][i] * v;
          }
        }
      X = std::move(Xn);
      theta.assign(eig.values.begin(), eig.values.begin() + b);
      resid.assign(nfree, 0.0);
      bool done = true;
      for (int c = 0; c < nfree; ++c) {
        const double nx = norm2(X[c]);
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) r2 += std::norm(Wn[c][i] - theta[c] * X[c][i]);
        resid[c] = std::sqrt(r2) / nx;
        done = done && resid[c] <= opt.tol;
      }
      if (done) break;
    }
    out.outer_iterations = it + 1;
    if (it == opt.max_outer) {
      std::ostringstream os;
      os << "Bloch eigensolver did not converge; residuals:";
      for (double r : resid) os << ' ' << r;
      throw ConvergenceError(os.str(), it, *std::max_element(resid.begin(), resid.end()));
    }
  }

  const double vol = op.grid().cell_volume();
  auto finish = [&](Vec v, double residual) {
    double nn = 0.0;
    Complex sum{};
    for (const auto& x : v) {
      nn += std::norm(x);
      sum += x;
    }
    // deterministic phase: positive real mean where the mean is significant
    Complex phase = std::abs(sum) > 1e-8 * std::sqrt(nn * n) ? std::conj(sum) / std::abs(sum) : 1.0;
    const double scale = 1.0 / std::sqrt(nn * vol);
    for (auto& x : v) x *= phase * scale;
    double mu = 0.0;
    if (!zero_k || !out.psi.empty()) mu = op.energy(v, kv) / (nn * scale * scale);
    out.mu.push_back(mu);
    out.residuals.push_back(residual);
    out.psi.emplace_back(op.grid(), std::move(v));
  };
  for (auto& v : locked) finish(v, 0.0);
  for (int c = 0; c < nfree; ++c) finish(X[c], resid[c]);
  // Rayleigh quotients may reorder nearly equal values by round-off
  std::vector<std::size_t> perm(out.mu.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t a, std::size_t b) { return out.mu[a] < out.mu[b]; });
  BlochPoint sorted;
  sorted.k = out.k;
  sorted.outer_iterations = out.outer_iterations;
  for (std::size_t i : perm) {
    sorted.mu.push_back(out.mu[i]);
    sorted.residuals.push_back(out.residuals[i]);
    sorted.psi.push_back(std::move(out.psi[i]));
  }
  out = std::move(sorted);
  for (std::size_t i = 1; i < out.mu.size(); ++i)
    if (out.mu[i] - out.mu[i - 1] < 1e-10) out.degenerate = true;
  return out;
}

namespace {

using Key = std::array<int, 3>;

// 1D central stencils for derivative order 0..4 (offsets -2..2), unscaled.
const std::array<std::array<double, 5>, 5>& stencils() {
  static const std::array<std::array<double, 5>, 5> s{{
      {0.0, 0.0, 1.0, 0.0, 0.0},
      {0.0, -0.5, 0.0, 0.5, 0.0},
      {0.0, 1.0, -2.0, 1.0, 0.0},
      {-0.5, 1.0, 0.0, -1.0, 0.5},
      {1.0, -4.0, 6.0, -4.0, 1.0},
  }};
  return s;
}

}  // namespace

TaylorReport taylor_check(const CellOperator& op, const SymMatrix& A, const Tensor4& C, double step,
                          const BlochOptions& opt) {
  if (!(step >= 0.005 && step <= 0.05))
    throw ContractViolation("taylor_check: step must lie in [0.005, 0.05]");
  const int d = op.dim();
  if (A.n() != d || C.n() != d) throw ContractViolation("taylor_check: tensor dimension mismatch");
  TaylorReport rep;
  rep.step = step;
  std::map<Key, double> cache;
  auto mu_at = [&](Key key) {
    // mu(k) = mu(-k): canonical sign has its first nonzero offset positive
    for (int j = 0; j < 3; ++j) {
      if (key[j] == 0) continue;
      if (key[j] < 0)
        for (auto& v : key) v = -v;
      break;
    }
    if (key == Key{0, 0, 0}) return 0.0;
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<double> k(d);
    for (int j = 0; j < d; ++j) k[j] = key[j] * step;
    const double mu = lowest_eigenpairs(op, k, 1, opt).mu.front();
    ++rep.eigen_solves;
    cache.emplace(key, mu);
    return mu;
  };
  auto tensor_stencil = [&](const MultiIndex& a) {
    double sum = 0.0;
    const auto& st = stencils();
    for (int o0 = -2; o0 <= 2; ++o0)
      for (int o1 = (d >= 2 ? -2 : 0); o1 <= (d >= 2 ? 2 : 0); ++o1)
        for (int o2 = (d >= 3 ? -2 : 0); o2 <= (d >= 3 ? 2 : 0); ++o2) {
          const double w = st[a[0]][o0 + 2] * st[a[1]][o1 + 2] * st[a[2]][o2 + 2];
          if (w == 0.0) continue;
          sum += w * mu_at({o0, o1, o2});
        }
    return sum / std::pow(step, order(a));
  };
  // second derivatives
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      MultiIndex a{0, 0, 0};
      ++a[i];
      ++a[j];
      TaylorEntry e;
      e.alpha = a;
      if (i == j) {
        Key k1{0, 0, 0}, k2{0, 0, 0};
        k1[i] = 1;
        k2[i] = 2;
        e.finite_difference = (-2.0 * mu_at(k2) + 32.0 * mu_at(k1)) / (12.0 * step * step);
      } else {
        e.finite_difference = tensor_stencil(a);
      }
      e.reference = 2.0 * A(i, j);
      rep.second.push_back(e);
    }
  // fourth derivatives against the symmetrized C
  std::map<MultiIndex, std::pair<double, int>> csym;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          MultiIndex a{0, 0, 0};
          ++a[i];
          ++a[j];
          ++a[k];
          ++a[l];
          auto& [s, c] = csym[a];
          s += C(i, j, k, l);
          ++c;
        }
  for (const auto& [a, sc] : csym) {
    TaylorEntry e;
    e.alpha = a;
    e.finite_difference = tensor_stencil(a);
    e.reference = 24.0 * sc.first / sc.second;
    rep.fourth.push_back(e);
  }
  auto finalize = [](std::vector<TaylorEntry>& list, double& worst) {
    double scale = 0.0;
    for (const auto& e : list) scale = std::max(scale, std::abs(e.reference));
    for (auto& e : list) {
      e.abs_dev = std::abs(e.finite_difference - e.reference);
      const double denom = std::max(std::abs(e.reference), 1e-3 * scale);
      e.rel_dev = denom > 0.0 ? e.abs_dev / denom : e.abs_dev;
      worst = std::max(worst, e.rel_dev);
    }
  };
  finalize(rep.second, rep.max_rel_second);
  finalize(rep.fourth, rep.max_rel_fourth);
  return rep;
}

std::vector<BlochPoint> band(const CellOperator& op, const std::vector<std::vector<double>>& waypoints,
                             int samples_per_segment, int m, const BlochOptions& opt) {
  if (waypoints.size() < 2) throw ConfigError("band path needs at least two waypoints");
  if (samples_per_segment < 1) throw ConfigError("samples per segment must be positive");
  std::vector<BlochPoint> out;
  const int d = op.dim();
  for (std::size_t s = 0; s + 1 < waypoints.size(); ++s) {
    const bool last = s + 2 == waypoints.size();
    const int count = samples_per_segment + (last ? 1 : 0);
    for (int t = 0; t < count; ++t) {
      const double f = static_cast<double>(t) / samples_per_segment;
      std::vector<double> k(d);
      for (int j = 0; j < d; ++j) k[j] = (1.0 - f) * waypoints[s][j] + f * waypoints[s + 1][j];
      out.push_back(lowest_eigenpairs(op, k, m, opt));
    }
  }
  return out;
}

}  // namespace effwave
