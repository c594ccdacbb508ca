#include "effwave/tensors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "effwave/errors.hpp"

namespace effwave {

SymMatrix SymMatrix::from(const RealMatrix& m) {
  SymMatrix s(static_cast<int>(m.rows()));
  for (int i = 0; i < s.n(); ++i)
    for (int j = i; j < s.n(); ++j) s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
  return s;
}

RealMatrix SymMatrix::matrix() const {
  RealMatrix m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

double SymMatrix::quad(const std::vector<double>& k) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) s += (*this)(i, j) * k[i] * k[j];
  return s;
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

void Tensor4::symmetrize_major() {
  const int n2 = n_ * n_;
  for (int p = 0; p < n2; ++p)
    for (int q = p + 1; q < n2; ++q) {
      const std::size_t a = static_cast<std::size_t>(p) * n2 + q;
      const std::size_t b = static_cast<std::size_t>(q) * n2 + p;
      const double v = 0.5 * (data_[a] + data_[b]);
      data_[a] = v;
      data_[b] = v;
    }
  major_ = true;
}

double Tensor4::contract(const std::vector<double>& k) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b) s += (*this)(i, j, a, b) * k[i] * k[j] * k[a] * k[b];
  return s;
}

double Tensor4::norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

Tensor4& Tensor4::operator+=(const Tensor4& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  major_ = major_ && o.major_;
  return *this;
}

Diagonalization diagonalize(const SymMatrix& A) {
  const int n = A.n();
  const auto eig = jacobi_eigen(A.matrix());
  Diagonalization d;
  d.diag = eig.values;
  for (int k = 0; k < n; ++k) {
    if (!(d.diag[k] > 0.0)) {
      std::ostringstream os;
      os << "matrix is not positive definite: eigenvalue " << d.diag[k];
      throw DefinitenessError(os.str());
    }
  }
  d.S = RealMatrix(n, n);
  for (int k = 0; k < n; ++k) {
    double sign = 1.0;
    for (int i = 0; i < n; ++i) {
      if (std::abs(eig.vectors(i, k)) > 1e-14) {
        sign = eig.vectors(i, k) > 0 ? 1.0 : -1.0;
        break;
      }
    }
    for (int i = 0; i < n; ++i) d.S(k, i) = sign * eig.vectors(i, k);
  }
  if (determinant(d.S) < 0.0)
    for (int i = 0; i < n; ++i) d.S(n - 1, i) = -d.S(n - 1, i);
  return d;
}

Tensor4 rotate_tensor4(const Tensor4& T, const RealMatrix& S) {
  const int n = T.n();
  if (static_cast<int>(S.rows()) != n || static_cast<int>(S.cols()) != n)
    throw ContractViolation("rotate_tensor4: shape mismatch");
  const RealMatrix sts = multiply(transpose(S), S);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(sts(i, j) - (i == j ? 1.0 : 0.0)) > 1e-10)
        throw ContractViolation("rotate_tensor4: matrix is not orthogonal");
  // contract one slot at a time; each pass moves the rotated slot to the front
  Tensor4 cur = T;
  for (int pass = 0; pass < 4; ++pass) {
    Tensor4 next(n);
    for (int i = 0; i < n; ++i)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            double s = 0.0;
            for (int a = 0; a < n; ++a) s += S(i, a) * cur(b, c, d, a);
            next(i, b, c, d) = s;
          }
    cur = std::move(next);
  }
  // after four cyclic passes slot order is restored
  if (T.major_symmetric()) cur.symmetrize_major();
  return cur;
}

namespace {
double pos(double x) { return x > 0.0 ? x : 0.0; }

// (E, F) for c D_i^2 D_j^2 (i == j allowed).
void pair_pair(double c, int i, int j, const std::vector<double>& a, DecompositionPart& out) {
  const int n = static_cast<int>(a.size());
  if (c > 0.0) {
    out.F(i, j, i, j) += c;
  } else if (c < 0.0) {
    out.E.add(i, i, -c / a[j]);
    for (int m = 0; m < n; ++m)
      if (m != j) out.F(i, m, i, m) += -c * a[m] / a[j];
  }
}

// (E, F) for c D_i^2 D_p D_q with p != q (covers the triple case q == i).
void with_pair(double c, int i, int p, int q, const std::vector<double>& a, DecompositionPart& out) {
  const int n = static_cast<int>(a.size());
  const double ct = -c / (2.0 * a[i]);
  out.E.add(p, q, ct);
  out.E.add(p, p, std::abs(ct));
  out.E.add(q, q, std::abs(ct));
  for (int m = 0; m < n; ++m) {
    out.F(p, m, p, m) += std::abs(ct) * a[m];
    out.F(q, m, q, m) += std::abs(ct) * a[m];
    if (m != i) {
      out.F(p, m, q, m) += ct * a[m];
      out.F(q, m, p, m) += ct * a[m];
    }
  }
}
}  // namespace

DecompositionPart decompose_entry(double c, std::array<int, 4> idx, const std::vector<double>& diag) {
  const int n = static_cast<int>(diag.size());
  DecompositionPart out{SymMatrix(n), Tensor4(n)};
  if (c == 0.0) return out;
  for (int v : idx)
    if (v < 0 || v >= n) throw ContractViolation("decompose_entry: index out of range");
  std::vector<int> count(n, 0);
  for (int v : idx) ++count[v];
  std::vector<int> distinct;
  for (int v : idx)
    if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
  const int i0 = idx[0];
  if (distinct.size() == 1) {
    pair_pair(c, i0, i0, diag, out);
  } else if (distinct.size() == 2) {
    const int other = distinct[0] == i0 ? distinct[1] : distinct[0];
    if (count[i0] == 2) {
      pair_pair(c, i0, other, diag, out);
    } else {
      const int triple = count[i0] == 3 ? i0 : other;
      const int single = triple == i0 ? other : i0;
      with_pair(c, triple, triple, single, diag, out);
    }
  } else if (distinct.size() == 3) {
    int pair = -1;
    for (int v : distinct)
      if (count[v] == 2) pair = v;
    std::vector<int> rest;
    for (int v : distinct)
      if (v != pair) rest.push_back(v);
    with_pair(c, pair, rest[0], rest[1], diag, out);
  } else {
    const int i = idx[0], j = idx[1], k = idx[2], l = idx[3];
    out.F(i, j, k, l) += 0.5 * c;
    out.F(k, l, i, j) += 0.5 * c;
    out.F(i, j, i, j) += 0.5 * std::abs(c);
    out.F(k, l, k, l) += 0.5 * std::abs(c);
    pair_pair(-0.5 * std::abs(c), i, j, diag, out);
    pair_pair(-0.5 * std::abs(c), k, l, diag, out);
  }
  out.F.symmetrize_major();
  return out;
}

DecompositionPart decompose(const SymMatrix& A, const Tensor4& C) {
  const int n = A.n();
  if (C.n() != n) throw ContractViolation("decompose: A and C dimensions differ");
  const Diagonalization d = diagonalize(A);
  const Tensor4 Ct = rotate_tensor4(C, d.S);
  DecompositionPart rot{SymMatrix(n), Tensor4(n)};
  // all-distinct quadruples first (empty for n <= 3), then everything else
  for (int pass = 0; pass < 2; ++pass)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const bool distinct =
                i != j && i != k && i != l && j != k && j != l && k != l;
            if (distinct != (pass == 0)) continue;
            const double c = Ct(i, j, k, l);
            if (c == 0.0) continue;
            auto part = decompose_entry(c, {i, j, k, l}, d.diag);
            for (int p = 0; p < n; ++p)
              for (int q = p; q < n; ++q) rot.E.add(p, q, part.E(p, q));
            rot.F += part.F;
          }
  rot.F.symmetrize_major();
  DecompositionPart out{SymMatrix(n), Tensor4(n)};
  const RealMatrix St = transpose(d.S);
  out.E = SymMatrix::from(multiply(St, multiply(rot.E.matrix(), d.S)));
  out.F = rotate_tensor4(rot.F, St);
  out.F.symmetrize_major();
  return out;
}

void symmetric_2d_tensors(double a1, double a2, double alpha1, double alpha2, double beta,
                          SymMatrix& A, Tensor4& C) {
  A = SymMatrix(2);
  A.set(0, 0, a1);
  A.set(1, 1, a2);
  C = Tensor4(2);
  C(0, 0, 0, 0) = alpha1;
  C(1, 1, 1, 1) = alpha2;
  C(0, 0, 1, 1) = C(1, 1, 0, 0) = C(0, 1, 0, 1) = C(1, 0, 1, 0) = C(0, 1, 1, 0) = C(1, 0, 0, 1) =
      beta;
}

DecompositionPart decompose_symmetric_2d(double a1, double a2, double alpha1, double alpha2,
                                         double beta) {
  if (!(a1 > 0.0) || !(a2 > 0.0)) throw DefinitenessError("decompose_symmetric_2d: a1, a2 must be positive");
  DecompositionPart out{SymMatrix(2), Tensor4(2)};
  out.E.set(0, 0, pos(-alpha1) / a1 + 3.0 * pos(-beta) / a2);
  out.E.set(1, 1, pos(-alpha2) / a2 + 3.0 * pos(-beta) / a1);
  out.F(0, 0, 0, 0) = pos(alpha1) + 3.0 * (a1 / a2) * pos(-beta);
  out.F(1, 1, 1, 1) = pos(alpha2) + 3.0 * (a2 / a1) * pos(-beta);
  out.F(1, 0, 1, 0) = (a1 / a2) * pos(-alpha2) + 3.0 * pos(beta);
  out.F(0, 1, 0, 1) = (a2 / a1) * pos(-alpha1) + 3.0 * pos(beta);
  out.F.symmetrize_major();
  return out;
}

double verify_decomposition(const SymMatrix& A, const Tensor4& C, const SymMatrix& E,
                            const Tensor4& F, int trials, std::uint64_t seed) {
  const int n = A.n();
  if (C.n() != n || E.n() != n || F.n() != n)
    throw ContractViolation("verify_decomposition: dimension mismatch");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double cnorm = C.norm();
  double worst = 0.0;
  std::vector<double> k(n);
  for (int t = 0; t < trials; ++t) {
    double k2 = 0.0;
    for (auto& v : k) {
      v = normal(rng);
      k2 += v * v;
    }
    const double r = std::abs(C.contract(k) + E.quad(k) * A.quad(k) - F.contract(k));
    worst = std::max(worst, r / (1.0 + k2 * k2 * cnorm));
  }
  return worst;
}

PsdReport psd_checks(const SymMatrix& E, const Tensor4& F) {
  const int n = E.n();
  PsdReport rep;
  const auto ee = jacobi_eigen(E.matrix());
  rep.e_min = ee.values.empty() ? 0.0 : ee.values.front();
  rep.e_tol = 1e-12 * std::max(1.0, E.max_abs());
  const int n2 = n * n;
  RealMatrix M(n2, n2);
  double fmax = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double v = 0.5 * (F(i, j, k, l) + F(k, l, i, j));
          M(i * n + j, k * n + l) = v;
          fmax = std::max(fmax, std::abs(v));
        }
  const auto fe = jacobi_eigen(M);
  rep.f_min = fe.values.empty() ? 0.0 : fe.values.front();
  rep.f_tol = 1e-12 * std::max(1.0, fmax);
  if (rep.e_min < -rep.e_tol) {
    rep.passed = false;
    rep.failed_part = "E";
    for (int i = 0; i < n; ++i) rep.witness.push_back(ee.vectors(i, 0));
  } else if (rep.f_min < -rep.f_tol) {
    rep.passed = false;
    rep.failed_part = "F";
    for (int i = 0; i < n2; ++i) rep.witness.push_back(fe.vectors(i, 0));
  }
  return rep;
}

double kappa(double a1, double a2, double alpha1, double alpha2, double beta, double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  const double c2 = c * c, s2 = s * s;
  return 6.0 * beta * c2 * s2 / (a1 * a2) + alpha1 * c2 * c2 / (a1 * a1) +
         alpha2 * s2 * s2 / (a2 * a2);
}

double kappa_contraction(const SymMatrix& A, const Tensor4& C, double phi) {
  if (A.n() != 2) throw ContractViolation("kappa_contraction: two-dimensional only");
  return C.contract({std::cos(phi) / std::sqrt(A(0, 0)), std::sin(phi) / std::sqrt(A(1, 1))});
}

double polar_angle(double a1, double a2, double phi) {
  return std::atan2(std::sqrt(a2) * std::sin(phi), std::sqrt(a1) * std::cos(phi));
}

namespace {
// Maximizes g over [0, pi/2]: scan then golden section on the bracketing
// interval, keeping the scan point unless refinement strictly improves it.
double scan_maximize(const std::function<double(double)>& g) {
  constexpr int samples = 1024;
  const double upper = std::numbers::pi / 2.0;
  const double step = upper / (samples - 1);
  int best = 0;
  double best_val = g(0.0);
  for (int i = 1; i < samples; ++i) {
    const double v = g(i * step);
    if (v > best_val) {
      best = i;
      best_val = v;
    }
  }
  double lo = std::max(0, best - 1) * step;
  double hi = std::min(samples - 1, best + 1) * step;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double g1 = g(x1), g2 = g(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (g1 >= g2) {
      hi = x2;
      x2 = x1;
      g2 = g1;
      x1 = hi - invphi * (hi - lo);
      g1 = g(x1);
    } else {
      lo = x1;
      x1 = x2;
      g1 = g2;
      x2 = lo + invphi * (hi - lo);
      g2 = g(x2);
    }
  }
  const double cand = 0.5 * (lo + hi);
  return g(cand) > best_val ? cand : best * step;
}
}  // namespace

KappaExtrema kappa_minimizer(double a1, double a2, double alpha1, double alpha2, double beta) {
  auto k = [&](double phi) { return kappa(a1, a2, alpha1, alpha2, beta, phi); };
  KappaExtrema out;
  out.phi_m = scan_maximize(k);
  out.kappa_m = k(out.phi_m);
  out.phi_m_polar = polar_angle(a1, a2, out.phi_m);
  out.phi_min_abs = scan_maximize([&](double p) { return -std::abs(k(p)); });
  out.kappa_min_abs = k(out.phi_min_abs);
  out.phi_most_negative = scan_maximize([&](double p) { return -k(p); });
  out.kappa_most_negative = k(out.phi_most_negative);
  return out;
}

}  // namespace effwave
