#pragma once

#include <array>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "effwave/geometry.hpp"
#include "effwave/linalg.hpp"
#include "effwave/tensors.hpp"

namespace effwave {

/// Multi-index alpha = (alpha_1, alpha_2, alpha_3); unused axes are zero.
using MultiIndex = std::array<int, 3>;

int order(const MultiIndex& a);
std::string to_string(const MultiIndex& a);

/// Complex scalar field on the periodic cell grid.
struct CellField {
  CellGrid grid;
  std::vector<Complex> values;

  explicit CellField(CellGrid g) : grid(std::move(g)), values(grid.size()) {}
  CellField(CellGrid g, std::vector<Complex> v) : grid(std::move(g)), values(std::move(v)) {}
  Complex mean() const;
};

/// Periodic flux-form discretization of f -> -div(a grad f) and of its
/// Bloch-shifted family
///   A(k) = sum_j G_j^* a_j G_j,  G_j f = (f(+e_j) - f)/h_j + i k_j (f + f(+e_j))/2,
/// with a_j the face coefficients.  A(k) is exactly quadratic in k:
///   A(k) = A^0 + sum_j k_j A^{e_j} + sum_j (k_j^2 / 2) A^{2 e_j}.
class CellOperator {
 public:
  CellOperator(CellGrid grid, FaceCoefficients faces);

  const CellGrid& grid() const noexcept { return grid_; }
  const FaceCoefficients& faces() const noexcept { return faces_; }
  int dim() const noexcept { return grid_.dim(); }
  std::size_t size() const noexcept { return grid_.size(); }
  double face_mean(int axis) const { return abar_[axis]; }

  /// out = A(k) f.  k = 0 (or empty) runs the real path, bitwise identical
  /// to the unshifted operator.
  void apply(std::span<const double> f, std::span<double> out) const;
  void apply(std::span<const Complex> f, std::span<Complex> out,
             std::span<const double> k = {}) const;

  /// out = A^{e_j} f = i (delta^T a m - m^T a delta) f.
  void apply_first(int axis, std::span<const Complex> f, std::span<Complex> out) const;
  /// out = A^{2 e_j} f = 2 m^T a m f.
  void apply_second(int axis, std::span<const Complex> f, std::span<Complex> out) const;
  /// Node means of A^{e_j} f and A^{2 e_j} f.
  Complex mean_first(int axis, std::span<const Complex> f) const;
  Complex mean_second(int axis, std::span<const Complex> f) const;

  /// sum over faces of a |G_j f|^2  (the quadratic form <f, A(k) f>).
  double energy(std::span<const Complex> f, std::span<const double> k) const;

 private:
  template <class T>
  void apply_impl(std::span<const T> f, std::span<T> out, std::span<const double> k) const;

  CellGrid grid_;
  FaceCoefficients faces_;
  std::vector<double> abar_;
};

CellOperator assemble(const CoefficientField& field, const CellGrid& grid,
                      FaceRule rule = FaceRule::averaged);

struct CellSolveOptions {
  double tol = 1e-10;
  int max_iter = 0;  // 0: 20 * node count
};

struct CellSolveStats {
  int iterations = 0;
  double residual = 0.0;  // relative 2-norm
};

/// Zero-mean solution of A^0 psi = rhs; real and imaginary parts are solved
/// separately by spectrally preconditioned CG.  Throws CompatibilityError if
/// the right-hand side has a mean and ConvergenceError if CG stalls.
CellField solve_zero_mean(const CellOperator& op, const CellField& rhs,
                          const CellSolveOptions& opt = {}, CellSolveStats* stats = nullptr);

/// psi^alpha (|alpha| <= 3) and mu^alpha (|alpha| <= 4): the k-derivatives at
/// k = 0 of the lowest Bloch eigenpair of A(k), normalized by <psi(k)> = 1.
struct CellProblemSet {
  std::map<MultiIndex, CellField> psi;
  std::map<MultiIndex, Complex> mu;
};

/// Right-hand side of the cell problem for psi^alpha:
///   -sum_j alpha_j A^{e_j} psi^{alpha-e_j} - sum_j C(alpha_j,2) A^{2e_j} psi^{alpha-2e_j}
///   + sum_{0 < beta <= alpha} C(alpha,beta) mu^beta psi^{alpha-beta}
/// Throws DependencyError naming the first missing prerequisite.
CellField cell_problem_rhs(const MultiIndex& alpha, const CellProblemSet& set,
                           const CellOperator& op);

/// mu^alpha = < sum_j alpha_j A^{e_j} psi^{alpha-e_j}
///            + sum_j C(alpha_j,2) A^{2e_j} psi^{alpha-2e_j} >,  evaluated for any |alpha|.
Complex mu_formal(const MultiIndex& alpha, const CellProblemSet& set, const CellOperator& op);
/// As mu_formal, restricted to even |alpha| (odd orders vanish identically).
Complex mu_even(const MultiIndex& alpha, const CellProblemSet& set, const CellOperator& op);

struct AcResult {
  SymMatrix A;
  Tensor4 C;
  CellProblemSet set;
  double imag_residue = 0.0;    // largest |Im mu| relative to max |mu|
  double forced_zero_max = 0.0; // largest skipped entry (symmetry-forced zero)
  int max_iterations = 0;
  double max_residual = 0.0;
  int solves = 0;
};

/// Cell-problem chain for A and C.  Uses the symmetry flags of `field` to
/// zero the entries forced to vanish.
AcResult run_algorithm_AC(const CoefficientField& field, const CellGrid& grid,
                          const CellSolveOptions& opt = {}, FaceRule rule = FaceRule::averaged);
AcResult run_algorithm_AC(const CellOperator& op, SymmetryFlags flags,
                          const CellSolveOptions& opt = {});

/// CSV dump of a two-dimensional cell field: y1,y2,re,im.
void write_cell_field_csv(std::ostream& out, const CellField& f);

}  // namespace effwave
