#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace effwave {

using Complex = std::complex<double>;

/// Row-major dense matrix for the small problems in this library
/// (tensor algebra, Rayleigh-Ritz blocks).
template <class T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, T value = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const T> data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = DenseMatrix<double>;
using ComplexMatrix = DenseMatrix<Complex>;

RealMatrix transpose(const RealMatrix& m);
RealMatrix multiply(const RealMatrix& a, const RealMatrix& b);
double determinant(const RealMatrix& m);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  RealMatrix vectors;          // column k belongs to values[k]
};

/// Cyclic Jacobi eigen-decomposition of a real symmetric matrix.  Ties keep
/// their original order, so a diagonal input returns the identity basis.
SymmetricEigen jacobi_eigen(const RealMatrix& a, double tol = 1e-15, int max_sweeps = 100);

struct HermitianEigen {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // column k belongs to values[k]
};

HermitianEigen hermitian_eigen(const ComplexMatrix& a, double tol = 1e-15, int max_sweeps = 100);

struct CgOptions {
  double tol = 1e-10;  // relative to the (projected) right-hand side norm
  int max_iter = 1000;
};

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

inline double conj_dot_re(double a, double b) { return a * b; }
inline double conj_dot_re(const Complex& a, const Complex& b) {
  return a.real() * b.real() + a.imag() * b.imag();
}

/// Real part of sum_i w_i conj(a_i) b_i; w empty means unit weights.
template <class T>
double weighted_dot(std::span<const T> a, std::span<const T> b, std::span<const double> w) {
  double s = 0.0;
  if (w.empty()) {
    for (std::size_t i = 0; i < a.size(); ++i) s += conj_dot_re(a[i], b[i]);
  } else {
    for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * conj_dot_re(a[i], b[i]);
  }
  return s;
}

/// Preconditioned conjugate gradients for operators that are self-adjoint and
/// positive (semi-)definite in the inner product weighted by `weights`.
/// `project` maps a vector onto the complement of the kernel and is applied to
/// the right-hand side, the preconditioned residual and the iterate.  The
/// recursive residual is re-checked against the true residual on exit and the
/// iteration restarts from the current iterate if they disagree.
template <class T, class Apply, class Precond, class Project>
CgResult conjugate_gradient(const Apply& apply, const Precond& precond, const Project& project,
                            std::span<const double> weights, std::vector<T> b, std::vector<T>& x,
                            const CgOptions& opt) {
  const std::size_t n = b.size();
  project(b);
  project(x);
  const double bnorm = std::sqrt(weighted_dot<T>(b, b, weights));
  CgResult res;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), T{});
    res.converged = true;
    return res;
  }
  std::vector<T> r(n), z(n), p(n), q(n);
  auto true_residual = [&] {
    apply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    project(r);
    return std::sqrt(weighted_dot<T>(r, r, weights));
  };
  double rnorm = true_residual();
  res.relative_residual = rnorm / bnorm;
  int it = 0;
  for (int restart = 0; restart < 4; ++restart) {
    if (rnorm <= opt.tol * bnorm) {
      res.converged = true;
      break;
    }
    precond(r, z);
    project(z);
    p = z;
    double rz = weighted_dot<T>(r, z, weights);
    bool breakdown = false;
    while (it < opt.max_iter) {
      ++it;
      apply(p, q);
      const double pq = weighted_dot<T>(p, q, weights);
      if (!(pq > 0.0) || !(rz > 0.0)) {
        breakdown = true;
        break;
      }
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      rnorm = std::sqrt(weighted_dot<T>(r, r, weights));
      if (rnorm <= opt.tol * bnorm) break;
      precond(r, z);
      project(z);
      const double rz_new = weighted_dot<T>(r, z, weights);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    project(x);
    rnorm = true_residual();
    res.relative_residual = rnorm / bnorm;
    res.iterations = it;
    if (rnorm <= opt.tol * bnorm) {
      res.converged = true;
      break;
    }
    if (it >= opt.max_iter || breakdown) break;
  }
  return res;
}

}  // namespace effwave
