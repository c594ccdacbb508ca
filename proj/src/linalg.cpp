#include "effwave/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <type_traits>

namespace effwave {

RealMatrix transpose(const RealMatrix& m) {
  RealMatrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

RealMatrix multiply(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: shape mismatch");
  RealMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

double determinant(const RealMatrix& m) {
  const std::size_t n = m.rows();
  RealMatrix lu = m;
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (lu(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      det = -det;
    }
    det *= lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      for (std::size_t j = k; j < n; ++j) lu(i, j) -= f * lu(k, j);
    }
  }
  return det;
}

namespace {

template <class T>
T conj_of(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    return std::conj(v);
  }
}

template <class T>
void jacobi_sweeps(DenseMatrix<T>& a, DenseMatrix<T>& v, double tol, int max_sweeps) {
  const std::size_t n = a.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total += std::norm(a(i, j));
  total = std::sqrt(total);
  if (total == 0.0) return;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(off) <= tol * total) return;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const T b = a(p, q);
        const double mag = std::abs(b);
        if (mag == 0.0) continue;
        const T phase = b / mag;  // unit modulus
        const double app = std::real(a(p, p));
        const double aqq = std::real(a(q, q));
        const double theta = (aqq - app) / (2.0 * mag);
        const double t =
            (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // U = diag(1, conj(phase)) * [[c, s], [-s, c]] restricted to (p, q)
        const T dq = conj_of(phase);
        const T upp = T(c), upq = T(s), uqp = -s * dq, uqq = c * dq;
        for (std::size_t k = 0; k < n; ++k) {
          const T akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * upp + akq * uqp;
          a(k, q) = akp * upq + akq * uqq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const T apk = a(p, k), aqk = a(q, k);
          a(p, k) = conj_of(upp) * apk + conj_of(uqp) * aqk;
          a(q, k) = conj_of(upq) * apk + conj_of(uqq) * aqk;
        }
        a(p, q) = T{};
        a(q, p) = T{};
        a(p, p) = T(std::real(a(p, p)));
        a(q, q) = T(std::real(a(q, q)));
        for (std::size_t k = 0; k < n; ++k) {
          const T vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * upp + vkq * uqp;
          v(k, q) = vkp * upq + vkq * uqq;
        }
      }
    }
  }
}

template <class T>
void sort_pairs(DenseMatrix<T>& a, DenseMatrix<T>& v, std::vector<double>& values,
                DenseMatrix<T>& vectors) {
  const std::size_t n = a.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::real(a(i, i)) < std::real(a(j, j));
  });
  values.resize(n);
  vectors = DenseMatrix<T>(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    values[k] = std::real(a(order[k], order[k]));
    for (std::size_t i = 0; i < n; ++i) vectors(i, k) = v(i, order[k]);
  }
}

}  // namespace

SymmetricEigen jacobi_eigen(const RealMatrix& a, double tol, int max_sweeps) {
  if (a.rows() != a.cols()) throw std::invalid_argument("jacobi_eigen: matrix not square");
  RealMatrix work = a;
  RealMatrix v = RealMatrix::identity(a.rows());
  jacobi_sweeps(work, v, tol, max_sweeps);
  SymmetricEigen out;
  sort_pairs(work, v, out.values, out.vectors);
  return out;
}

HermitianEigen hermitian_eigen(const ComplexMatrix& a, double tol, int max_sweeps) {
  if (a.rows() != a.cols()) throw std::invalid_argument("hermitian_eigen: matrix not square");
  ComplexMatrix work = a;
  ComplexMatrix v = ComplexMatrix::identity(a.rows());
  jacobi_sweeps(work, v, tol, max_sweeps);
  HermitianEigen out;
  sort_pairs(work, v, out.values, out.vectors);
  return out;
}

}  // namespace effwave
