#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "effwave/linalg.hpp"

namespace effwave {

/// Symmetric n x n matrix; writes always update both triangles.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * n, 0.0) {}
  static SymMatrix from(const RealMatrix& m);  // symmetrizes (m + m^T)/2

  int n() const noexcept { return n_; }
  double operator()(int i, int j) const { return data_[i * n_ + j]; }
  void set(int i, int j, double v) {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }
  void add(int i, int j, double v) {
    data_[i * n_ + j] += v;
    if (i != j) data_[j * n_ + i] += v;
  }
  RealMatrix matrix() const;
  /// sum_ij M_ij k_i k_j
  double quad(const std::vector<double>& k) const;
  double max_abs() const;

 private:
  int n_ = 0;
  std::vector<double> data_;
};

/// Dense fourth-order tensor T_ijkl on R^n.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  int n() const noexcept { return n_; }
  double& operator()(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }
  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  /// T_ijkl <- (T_ijkl + T_klij)/2 and marks the tensor major-symmetric.
  void symmetrize_major();
  bool major_symmetric() const noexcept { return major_; }
  /// sum_ijkl T_ijkl k_i k_j k_k k_l
  double contract(const std::vector<double>& k) const;
  double norm() const;  // Frobenius
  Tensor4& operator+=(const Tensor4& o);

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l;
  }
  int n_ = 0;
  std::vector<double> data_;
  bool major_ = false;
};

struct EffectiveModel {
  SymMatrix A;
  Tensor4 C;
  SymMatrix E;
  Tensor4 F;
  std::string geometry;
  std::vector<int> resolution;
  double tolerance = 0.0;
};

struct Diagonalization {
  RealMatrix S;              // orthogonal, det +1, A = S^T diag S
  std::vector<double> diag;  // ascending, positive
};

/// A = S^T diag(a) S by cyclic Jacobi.  Eigenvalues ascend (ties keep their
/// order), each row of S has its first nonzero entry positive, and the last
/// row is negated if needed so that det S = +1.  Throws DefinitenessError if
/// A is not positive definite.
Diagonalization diagonalize(const SymMatrix& A);

/// T~_ijkl = sum S_ia S_jb S_kc S_ld T_abcd, so that T~ (S k)^4 = T k^4.
Tensor4 rotate_tensor4(const Tensor4& T, const RealMatrix& S);

struct DecompositionPart {
  SymMatrix E;
  Tensor4 F;
};

/// (E, F) with E D^2 A D^2 - F D^4 = -c D_a D_b D_c D_d for diagonal A.
DecompositionPart decompose_entry(double c, std::array<int, 4> idx, const std::vector<double>& diag);

/// General constructive decomposition -C D^4 = E D^2 A D^2 - F D^4.
DecompositionPart decompose(const SymMatrix& A, const Tensor4& C);

/// Closed-form choice for the two-dimensional even-symmetric structure with
/// A = diag(a1, a2), C_iiii = alpha_i and the six mixed entries equal to beta.
DecompositionPart decompose_symmetric_2d(double a1, double a2, double alpha1, double alpha2,
                                         double beta);

/// Builds the even-symmetric two-dimensional (A, C) pair.
void symmetric_2d_tensors(double a1, double a2, double alpha1, double alpha2, double beta,
                          SymMatrix& A, Tensor4& C);

/// max over random k of |C k^4 + (E k k)(A k k) - F k^4| / (1 + |k|^4 |C|).
double verify_decomposition(const SymMatrix& A, const Tensor4& C, const SymMatrix& E,
                            const Tensor4& F, int trials, std::uint64_t seed = 20240611);

struct PsdReport {
  bool passed = true;
  double e_min = 0.0;  // smallest eigenvalue of E
  double f_min = 0.0;  // smallest eigenvalue of the n^2 x n^2 matrix F_(ij),(kl)
  double e_tol = 0.0;
  double f_tol = 0.0;
  std::vector<double> witness;  // xi (length n or n^2) for the failing part
  std::string failed_part;
};

/// Eigenvalue tests of E and of the symmetrized F, with tolerance
/// 1e-12 * max(1, max |entry|).
PsdReport psd_checks(const SymMatrix& E, const Tensor4& F);

/// Dispersion coefficient along the elliptic angle phi.
double kappa(double a1, double a2, double alpha1, double alpha2, double beta, double phi);
/// Same quantity as the contraction C xi^4 with xi = (cos phi/sqrt a1, sin phi/sqrt a2).
double kappa_contraction(const SymMatrix& A, const Tensor4& C, double phi);

/// Polar angle of the direction with elliptic angle phi.
double polar_angle(double a1, double a2, double phi);

struct KappaExtrema {
  double phi_m = 0.0;      // maximizer of kappa (weakest dispersion), elliptic angle
  double kappa_m = 0.0;
  double phi_m_polar = 0.0;
  double phi_min_abs = 0.0;  // smallest |kappa|
  double kappa_min_abs = 0.0;
  double phi_most_negative = 0.0;
  double kappa_most_negative = 0.0;
};

/// 1024-point scan of [0, pi/2] with golden-section refinement.  Ties go to
/// the smallest angle.
KappaExtrema kappa_minimizer(double a1, double a2, double alpha1, double alpha2, double beta);

}  // namespace effwave
