#include "effwave/cell_solver.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "effwave/errors.hpp"
#include "effwave/fft.hpp"

namespace effwave {

namespace {

constexpr Complex I{0.0, 1.0};

// Calls fn(base, stride, n) for every grid line along `axis`.
template <class Fn>
void for_each_line(const CellGrid& g, int axis, Fn&& fn) {
  const std::size_t s = g.stride(axis);
  const std::size_t n = static_cast<std::size_t>(g.n[axis]);
  const long long lines = static_cast<long long>(g.size() / n);
#pragma omp parallel for schedule(static)
  for (long long line = 0; line < lines; ++line) {
    const std::size_t l = static_cast<std::size_t>(line);
    const std::size_t base = (l / s) * s * n + (l % s);
    fn(base, s, n);
  }
}

long long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<MultiIndex> indices_of_order(int dim, int p) {
  std::vector<MultiIndex> out;
  for (int a = 0; a <= p; ++a)
    for (int b = 0; b <= (dim >= 2 ? p - a : 0); ++b) {
      const int c = p - a - b;
      if (dim == 1 && (b != 0 || c != 0)) continue;
      if (dim == 2 && c != 0) continue;
      if (c < 0) continue;
      out.push_back({a, b, c});
    }
  return out;
}

}  // namespace

int order(const MultiIndex& a) { return a[0] + a[1] + a[2]; }

std::string to_string(const MultiIndex& a) {
  std::ostringstream os;
  os << '(' << a[0] << ',' << a[1] << ',' << a[2] << ')';
  return os.str();
}

Complex CellField::mean() const {
  Complex s{};
  for (const auto& v : values) s += v;
  return s / static_cast<double>(values.size());
}

CellOperator::CellOperator(CellGrid grid, FaceCoefficients faces)
    : grid_(std::move(grid)), faces_(std::move(faces)) {
  if (static_cast<int>(faces_.values.size()) != grid_.dim())
    throw ContractViolation("CellOperator: face data does not match grid");
  for (int j = 0; j < grid_.dim(); ++j) abar_.push_back(faces_.mean(j));
}

template <class T>
void CellOperator::apply_impl(std::span<const T> f, std::span<T> out,
                              std::span<const double> k) const {
  std::fill(out.begin(), out.end(), T{});
  for (int axis = 0; axis < dim(); ++axis) {
    const auto& a = faces_.values[axis];
    const double h = grid_.h(axis);
    const double kj = k.empty() ? 0.0 : k[axis];
    for_each_line(grid_, axis, [&](std::size_t base, std::size_t s, std::size_t n) {
      std::vector<T> g(n);
      for (std::size_t t = 0; t < n; ++t) {
        const std::size_t i = base + t * s;
        const std::size_t ip = base + ((t + 1) % n) * s;
        T d = (f[ip] - f[i]) / h;
        if constexpr (std::is_same_v<T, Complex>) {
          if (kj != 0.0) d += I * kj * (f[i] + f[ip]) * 0.5;
        }
        g[t] = a[i] * d;
      }
      for (std::size_t t = 0; t < n; ++t) {
        const std::size_t i = base + t * s;
        const std::size_t tm = (t + n - 1) % n;
        out[i] += (g[tm] - g[t]) / h;
        if constexpr (std::is_same_v<T, Complex>) {
          if (kj != 0.0) out[i] += -I * (0.5 * kj) * (g[tm] + g[t]);
        }
      }
    });
  }
}

void CellOperator::apply(std::span<const double> f, std::span<double> out) const {
  apply_impl<double>(f, out, {});
}

void CellOperator::apply(std::span<const Complex> f, std::span<Complex> out,
                         std::span<const double> k) const {
  apply_impl<Complex>(f, out, k);
}

void CellOperator::apply_first(int axis, std::span<const Complex> f, std::span<Complex> out) const {
  const auto& a = faces_.values[axis];
  const double h = grid_.h(axis);
  for_each_line(grid_, axis, [&](std::size_t base, std::size_t s, std::size_t n) {
    std::vector<Complex> p(n), q(n);
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t i = base + t * s;
      const std::size_t ip = base + ((t + 1) % n) * s;
      p[t] = a[i] * (f[i] + f[ip]) * 0.5;
      q[t] = a[i] * (f[ip] - f[i]) / h;
    }
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t tm = (t + n - 1) % n;
      out[base + t * s] = I * ((p[tm] - p[t]) / h - (q[tm] + q[t]) * 0.5);
    }
  });
}

void CellOperator::apply_second(int axis, std::span<const Complex> f, std::span<Complex> out) const {
  const auto& a = faces_.values[axis];
  for_each_line(grid_, axis, [&](std::size_t base, std::size_t s, std::size_t n) {
    std::vector<Complex> p(n);
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t i = base + t * s;
      const std::size_t ip = base + ((t + 1) % n) * s;
      p[t] = a[i] * (f[i] + f[ip]) * 0.5;
    }
    for (std::size_t t = 0; t < n; ++t) out[base + t * s] = p[(t + n - 1) % n] + p[t];
  });
}

Complex CellOperator::mean_first(int axis, std::span<const Complex> f) const {
  const auto& a = faces_.values[axis];
  const double h = grid_.h(axis);
  const std::size_t s = grid_.stride(axis);
  const std::size_t n = static_cast<std::size_t>(grid_.n[axis]);
  Complex sum{};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::size_t t = (i / s) % n;
    const std::size_t ip = t + 1 == n ? i - (n - 1) * s : i + s;
    sum += a[i] * (f[ip] - f[i]) / h;
  }
  return -I * sum / static_cast<double>(f.size());
}

Complex CellOperator::mean_second(int axis, std::span<const Complex> f) const {
  const auto& a = faces_.values[axis];
  const std::size_t s = grid_.stride(axis);
  const std::size_t n = static_cast<std::size_t>(grid_.n[axis]);
  Complex sum{};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::size_t t = (i / s) % n;
    const std::size_t ip = t + 1 == n ? i - (n - 1) * s : i + s;
    sum += a[i] * (f[i] + f[ip]);
  }
  return sum / static_cast<double>(f.size());
}

double CellOperator::energy(std::span<const Complex> f, std::span<const double> k) const {
  double e = 0.0;
  for (int axis = 0; axis < dim(); ++axis) {
    const auto& a = faces_.values[axis];
    const double h = grid_.h(axis);
    const double kj = k.empty() ? 0.0 : k[axis];
    const std::size_t s = grid_.stride(axis);
    const std::size_t n = static_cast<std::size_t>(grid_.n[axis]);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::size_t t = (i / s) % n;
      const std::size_t ip = t + 1 == n ? i - (n - 1) * s : i + s;
      const Complex d = (f[ip] - f[i]) / h + I * kj * (f[i] + f[ip]) * 0.5;
      e += a[i] * std::norm(d);
    }
  }
  return e;
}

CellOperator assemble(const CoefficientField& field, const CellGrid& grid, FaceRule rule) {
  return CellOperator(grid, sample_faces(field, grid, rule));
}

CellField solve_zero_mean(const CellOperator& op, const CellField& rhs, const CellSolveOptions& opt,
                          CellSolveStats* stats) {
  const std::size_t n = op.size();
  if (rhs.values.size() != n) throw ContractViolation("solve_zero_mean: size mismatch");
  double rms = 0.0;
  for (const auto& v : rhs.values) rms += std::norm(v);
  rms = std::sqrt(rms / static_cast<double>(n));
  const Complex m = rhs.mean();
  if (std::abs(m) > 10.0 * opt.tol * std::max(1.0, rms)) {
    std::ostringstream os;
    os << "cell problem right-hand side has mean " << std::abs(m) << " (incompatible)";
    throw CompatibilityError(os.str());
  }
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : static_cast<int>(20 * n);
  std::vector<double> h(op.dim()), zero(op.dim(), 0.0), abar(op.dim());
  for (int j = 0; j < op.dim(); ++j) {
    h[j] = op.grid().h(j);
    abar[j] = op.face_mean(j);
  }
  SpectralPreconditioner pre(op.grid().n, h, abar, zero);
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) { op.apply(x, y); };
  auto precond = [&](const std::vector<double>& r, std::vector<double>& z) { pre.apply(r, z); };
  auto project = [](std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    s /= static_cast<double>(v.size());
    for (double& x : v) x -= s;
  };
  CellField out(op.grid());
  CellSolveStats st;
  for (int part = 0; part < 2; ++part) {
    std::vector<double> b(n), x(n, 0.0);
    bool nonzero = false;
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = part == 0 ? rhs.values[i].real() : rhs.values[i].imag();
      nonzero = nonzero || b[i] != 0.0;
    }
    if (!nonzero) continue;
    const auto res = conjugate_gradient<double>(apply, precond, project, {}, b, x,
                                                CgOptions{opt.tol, max_iter});
    st.iterations = std::max(st.iterations, res.iterations);
    st.residual = std::max(st.residual, res.relative_residual);
    if (!res.converged)
      throw ConvergenceError("cell problem CG did not converge", res.iterations,
                             res.relative_residual);
    for (std::size_t i = 0; i < n; ++i)
      out.values[i] += part == 0 ? Complex(x[i], 0.0) : Complex(0.0, x[i]);
  }
  if (stats) *stats = st;
  return out;
}

namespace {

const std::vector<Complex>& psi_of(const MultiIndex& b, const CellProblemSet& set,
                                   const std::vector<Complex>& ones) {
  if (order(b) == 0) {
    auto it = set.psi.find(b);
    return it == set.psi.end() ? ones : it->second.values;
  }
  auto it = set.psi.find(b);
  if (it == set.psi.end())
    throw DependencyError("missing cell solution psi" + to_string(b));
  return it->second.values;
}

Complex mu_of(const MultiIndex& b, const CellProblemSet& set) {
  if (order(b) % 2 == 1) return 0.0;
  auto it = set.mu.find(b);
  if (it == set.mu.end()) throw DependencyError("missing eigenvalue derivative mu" + to_string(b));
  return it->second;
}

}  // namespace

CellField cell_problem_rhs(const MultiIndex& alpha, const CellProblemSet& set,
                           const CellOperator& op) {
  const std::size_t n = op.size();
  const int d = op.dim();
  const std::vector<Complex> ones(n, Complex(1.0, 0.0));
  CellField rhs(op.grid());
  std::vector<Complex> tmp(n);
  for (int j = 0; j < d; ++j) {
    if (alpha[j] >= 1) {
      MultiIndex b = alpha;
      --b[j];
      op.apply_first(j, psi_of(b, set, ones), tmp);
      for (std::size_t i = 0; i < n; ++i) rhs.values[i] -= static_cast<double>(alpha[j]) * tmp[i];
    }
    if (alpha[j] >= 2) {
      MultiIndex b = alpha;
      b[j] -= 2;
      op.apply_second(j, psi_of(b, set, ones), tmp);
      const double c = static_cast<double>(binom(alpha[j], 2));
      for (std::size_t i = 0; i < n; ++i) rhs.values[i] -= c * tmp[i];
    }
  }
  for (int b0 = 0; b0 <= alpha[0]; ++b0)
    for (int b1 = 0; b1 <= alpha[1]; ++b1)
      for (int b2 = 0; b2 <= alpha[2]; ++b2) {
        const MultiIndex beta{b0, b1, b2};
        if (order(beta) == 0 || order(beta) % 2 == 1) continue;
        const Complex mu = mu_of(beta, set);
        if (mu == Complex{}) continue;
        const MultiIndex rest{alpha[0] - b0, alpha[1] - b1, alpha[2] - b2};
        const double c = static_cast<double>(binom(alpha[0], b0) * binom(alpha[1], b1) *
                                             binom(alpha[2], b2));
        const auto& p = psi_of(rest, set, ones);
        for (std::size_t i = 0; i < n; ++i) rhs.values[i] += c * mu * p[i];
      }
  return rhs;
}

Complex mu_formal(const MultiIndex& alpha, const CellProblemSet& set, const CellOperator& op) {
  const std::vector<Complex> ones(op.size(), Complex(1.0, 0.0));
  Complex mu{};
  for (int j = 0; j < op.dim(); ++j) {
    if (alpha[j] >= 1) {
      MultiIndex b = alpha;
      --b[j];
      mu += static_cast<double>(alpha[j]) * op.mean_first(j, psi_of(b, set, ones));
    }
    if (alpha[j] >= 2) {
      MultiIndex b = alpha;
      b[j] -= 2;
      mu += static_cast<double>(binom(alpha[j], 2)) * op.mean_second(j, psi_of(b, set, ones));
    }
  }
  return mu;
}

Complex mu_even(const MultiIndex& alpha, const CellProblemSet& set, const CellOperator& op) {
  if (order(alpha) % 2 != 0)
    throw ContractViolation("mu_even: odd order " + to_string(alpha) + " vanishes identically");
  return mu_formal(alpha, set, op);
}

AcResult run_algorithm_AC(const CoefficientField& field, const CellGrid& grid,
                          const CellSolveOptions& opt, FaceRule rule) {
  return run_algorithm_AC(assemble(field, grid, rule), field.symmetry(), opt);
}

AcResult run_algorithm_AC(const CellOperator& op, SymmetryFlags flags, const CellSolveOptions& opt) {
  const int d = op.dim();
  AcResult res;
  auto& set = res.set;
  set.psi.emplace(MultiIndex{0, 0, 0},
                  CellField(op.grid(), std::vector<Complex>(op.size(), Complex(1.0, 0.0))));
  auto forced_zero = [&](const MultiIndex& a) {
    if (!flags.even_in_each_axis) return false;
    return a[0] % 2 != 0 || a[1] % 2 != 0 || a[2] % 2 != 0;
  };
  auto solve_order = [&](int p) {
    for (const auto& a : indices_of_order(d, p)) {
      CellSolveStats st;
      set.psi.emplace(a, solve_zero_mean(op, cell_problem_rhs(a, set, op), opt, &st));
      res.max_iterations = std::max(res.max_iterations, st.iterations);
      res.max_residual = std::max(res.max_residual, st.residual);
      ++res.solves;
    }
  };
  auto eval_mu = [&](int p) {
    for (const auto& a : indices_of_order(d, p)) {
      const Complex mu = mu_even(a, set, op);
      if (forced_zero(a)) {
        res.forced_zero_max = std::max(res.forced_zero_max, std::abs(mu));
        set.mu[a] = 0.0;
      } else {
        set.mu[a] = mu;
      }
    }
  };
  solve_order(1);
  eval_mu(2);
  solve_order(2);
  solve_order(3);
  eval_mu(4);
  double mu_max = 0.0, im_max = 0.0;
  for (const auto& [a, mu] : set.mu) {
    mu_max = std::max(mu_max, std::abs(mu));
    im_max = std::max(im_max, std::abs(mu.imag()));
  }
  res.imag_residue = mu_max > 0.0 ? im_max / mu_max : 0.0;
  if (res.imag_residue > 1e-8) {
    std::ostringstream os;
    os << "effective tensors have imaginary residue " << res.imag_residue;
    throw NumericalError(os.str());
  }
  res.A = SymMatrix(d);
  res.C = Tensor4(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      MultiIndex a{0, 0, 0};
      ++a[i];
      ++a[j];
      res.A.set(i, j, 0.5 * set.mu.at(a).real());
    }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          MultiIndex a{0, 0, 0};
          ++a[i];
          ++a[j];
          ++a[k];
          ++a[l];
          res.C(i, j, k, l) = set.mu.at(a).real() / 24.0;
        }
  res.C.symmetrize_major();
  return res;
}

void write_cell_field_csv(std::ostream& out, const CellField& f) {
  if (f.grid.dim() != 2) throw ConfigError("cell field CSV export is two-dimensional only");
  out << "y1,y2,re,im\n" << std::setprecision(17);
  for (int i2 = 0; i2 < f.grid.n[1]; ++i2)
    for (int i1 = 0; i1 < f.grid.n[0]; ++i1) {
      const auto& v = f.values[static_cast<std::size_t>(i2) * f.grid.n[0] + i1];
      out << f.grid.coordinate(0, i1) << ',' << f.grid.coordinate(1, i2) << ',' << v.real() << ','
          << v.imag() << '\n';
    }
}

}  // namespace effwave
