#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "effwave/cell_solver.hpp"
#include "effwave/tensors.hpp"

namespace effwave {

/// The shifted operator -(grad + ik) . (a (grad + ik)) on the cell grid.
class BlochOperator {
 public:
  BlochOperator(CellOperator base, std::vector<double> k);
  const CellOperator& base() const noexcept { return base_; }
  const std::vector<double>& k() const noexcept { return k_; }
  void apply(std::span<const Complex> f, std::span<Complex> out) const { base_.apply(f, out, k_); }
  /// <f, A(k) f> / <f, f> in energy form.
  double rayleigh_quotient(std::span<const Complex> f) const;

 private:
  CellOperator base_;
  std::vector<double> k_;
};

BlochOperator assemble_shifted(const CoefficientField& field, const CellGrid& grid,
                               std::vector<double> k, FaceRule rule = FaceRule::averaged);

struct BlochOptions {
  double tol = 1e-10;        // eigen-residual |A psi - mu psi| for unit vectors
  double inner_tol = 1e-12;  // relative residual of the inner PCG solves
  int max_outer = 100;
  int guard = 6;             // extra block vectors; clustered bands at the zone edge need several
  std::uint64_t seed = 7;
};

struct BlochPoint {
  std::vector<double> k;
  std::vector<double> mu;          // ascending
  std::vector<CellField> psi;      // unit L2(Y) norm
  std::vector<double> residuals;   // |A psi - mu psi| for Euclidean-unit psi
  bool degenerate = false;         // two returned eigenvalues closer than 1e-10
  int outer_iterations = 0;
};

/// m smallest eigenpairs of A(k) by block inverse iteration with PCG inner
/// solves and Rayleigh-Ritz.  At k = 0 the constant eigenvector is locked and
/// the iteration runs on mean-zero fields.
BlochPoint lowest_eigenpairs(const CellOperator& op, std::span<const double> k, int m,
                             const BlochOptions& opt = {});

struct TaylorEntry {
  MultiIndex alpha;
  double finite_difference = 0.0;
  double reference = 0.0;  // 2 A_ij or 24 C (symmetrized)
  double abs_dev = 0.0;
  double rel_dev = 0.0;    // relative to max(|reference|, 1e-3 * largest reference of that order)
};

struct TaylorReport {
  double step = 0.0;
  std::vector<TaylorEntry> second;
  std::vector<TaylorEntry> fourth;
  double max_rel_second = 0.0;
  double max_rel_fourth = 0.0;
  int eigen_solves = 0;
};

/// Central finite differences of mu_0 at k = 0 (fourth-order accurate for pure
/// second derivatives) compared with 2A and 24C.  step must lie in [0.005, 0.05].
TaylorReport taylor_check(const CellOperator& op, const SymMatrix& A, const Tensor4& C,
                          double step = 0.02, const BlochOptions& opt = {});

/// Uniformly sampled path through `waypoints` (each a point of the zone).
std::vector<BlochPoint> band(const CellOperator& op, const std::vector<std::vector<double>>& waypoints,
                             int samples_per_segment, int m, const BlochOptions& opt = {});

}  // namespace effwave
