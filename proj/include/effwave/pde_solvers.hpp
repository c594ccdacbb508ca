#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "effwave/geometry.hpp"
#include "effwave/tensors.hpp"

namespace effwave {

/// Two consecutive time levels of a real field on a domain grid.
struct WaveState {
  DomainGrid grid;
  std::vector<double> now;
  std::vector<double> prev;
  double time = 0.0;
  double dt = 0.0;
  long step = 0;
};

/// Samples of F0 on a tensor grid over K = [-kmax, kmax]^n (midpoint rule,
/// nk points per axis, axis 0 fastest).
struct FourierProfile {
  int dim = 2;
  double kmax = 0.0;
  int nk = 0;
  std::vector<double> values;

  double dk() const { return 2.0 * kmax / nk; }
  double node(int i) const { return -kmax + (i + 0.5) * dk(); }
  /// F0 of f(x) = exp(-4 |x|^2):  (2 pi)^{-n/2} (sqrt(pi)/2)^n exp(-|k|^2/16).
  static FourierProfile gaussian(int dim, double kmax = 24.0, int nk = 256);
};

struct InitialData {
  enum class Kind { gaussian, fourier_profile, custom };
  Kind kind = Kind::gaussian;
  FourierProfile profile;
  std::function<double(std::span<const double>)> custom;

  double value(std::span<const double> x) const;
};

struct SimConfig {
  double eps = 0.1;
  double t_final = 1.0;
  double dt = 0.01;
  std::vector<double> h{0.2, 0.2};
  std::vector<double> length{10.0, 10.0};
  std::vector<std::array<Boundary, 2>> boundary;  // empty: quadrant
  std::vector<double> origin;                     // empty: zeros
  InitialData initial;
  bool full_step_init = false;  // u1 = u0 + dt^2 L u0 instead of the second-order starter
  FaceRule face_rule = FaceRule::averaged;
  double cg_tol = 1e-10;

  DomainGrid grid() const;
};

struct SimStats {
  long steps = 0;
  int max_cg_iterations = 0;
  double max_cg_residual = 0.0;
  std::string warning;
};

/// Leapfrog for u_tt = div(a(x/eps) grad u) with the flux-form stencil.
/// Snapshots are taken at the nearest completed step.
std::vector<WaveState> simulate_heterogeneous(const CoefficientField& field, const SimConfig& cfg,
                                              const std::vector<double>& snapshots,
                                              SimStats* stats = nullptr);

/// Leapfrog for w_tt = A D^2 w + eps^2 E D^2 w_tt - eps^2 F D^4 w with fourth-order
/// stencils, advanced in z = (I - eps^2 E D^2) w.
std::vector<WaveState> simulate_dispersive(const EffectiveModel& model, const SimConfig& cfg,
                                           const std::vector<double>& snapshots,
                                           SimStats* stats = nullptr);

/// Fourth-order finite-difference operators on a domain grid with reflection
/// ghosts (even at Neumann sides, odd at Dirichlet sides) or wraparound.
class DispersiveStencils {
 public:
  explicit DispersiveStencils(DomainGrid grid);
  const DomainGrid& grid() const noexcept { return grid_; }

  /// out = sum_ij M_ij D_i D_j w
  void second(const SymMatrix& M, std::span<const double> w, std::span<double> out) const;
  /// out = sum_ijkl F_ijkl D_i D_j D_k D_l w
  void fourth(const Tensor4& F, std::span<const double> w, std::span<double> out) const;
  /// Quadrature weights: 1/2 per Neumann side the node lies on; 0 at pinned nodes.
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<char>& pinned() const noexcept { return pinned_; }

  /// D_i D_j applied to a field whose reflection parity differs from w's by
  /// (-1)^{flips[m]} along axis m.
  void mixed(int i, int j, std::span<const double> g, std::array<int, 3> flips,
             std::span<double> out) const;

 private:
  void first_derivative(int axis, std::span<const double> g, int flip, std::span<double> out) const;
  void second_derivative(int axis, std::span<const double> g, int flip, std::span<double> out) const;
  double ghost_sign(int axis, int side, int flip) const;

  DomainGrid grid_;
  std::vector<double> weights_;
  std::vector<char> pinned_;
};

struct VepsResult {
  std::vector<double> values;
  bool accuracy_warning = false;
  double phase_per_cell = 0.0;
};

/// v(x, t) = (2 pi)^{-n/2} (1/2) sum_{+-} int_K F0(k) e^{ik.x}
///           exp(+- i t sqrt(Akk)) exp(+- i (eps^2 t / 2) C k^4 / sqrt(Akk)) dk,
/// real part; the dispersive phase is zero at k = 0.
VepsResult reference_veps(const FourierProfile& F0, const SymMatrix& A, const Tensor4& C, double eps,
                          double t, const std::vector<std::vector<double>>& points);

struct Profile1D {
  double r0 = 0.0;  // coordinate of the first sample
  double dr = 0.0;
  std::vector<double> values;
  double coordinate(std::size_t i) const { return r0 + static_cast<double>(i) * dr; }
};

struct KdvResult {
  std::vector<double> times;
  std::vector<Profile1D> profiles;
  bool wraparound_warning = false;
};

/// U_t + U/(2t) - (kappa/2) U_rrr = 0 on the periodic box spanned by the
/// profile, integrated exactly through V = sqrt(t) U in Fourier space.
KdvResult simulate_kdv(double kappa, const Profile1D& u0, double t0, const std::vector<double>& times);

}  // namespace effwave
