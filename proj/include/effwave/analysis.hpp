#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "effwave/cell_solver.hpp"
#include "effwave/geometry.hpp"
#include "effwave/pde_solvers.hpp"
#include "effwave/tensors.hpp"

namespace effwave {

/// Multilinear interpolation of a state at x; nullopt outside the grid.
/// Bounded axes use the mirror/odd extension implied by their boundary type
/// only on the grid itself, so points past an edge are outside.
std::optional<double> interpolate(const WaveState& s, std::span<const double> x);

/// Trapezoid-rule L2 norm of u - w over the nodes of u that lie inside w's
/// grid, with w interpolated onto them.
double l2_error(const WaveState& u, const WaveState& w);

struct RateFit {
  double rate = 0.0;
  double intercept = 0.0;  // log e = intercept + rate * log eps
  double residual = 0.0;   // rms of the log-log fit
};

RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& errors);

struct EllipticCoords {
  double r = 0.0;
  double phi = 0.0;
};

/// (x1, x2) = (r sqrt(a1) cos phi, r sqrt(a2) sin phi) inverted in the quadrant.
EllipticCoords elliptic_coords(std::array<double, 2> x, double a1, double a2);
std::array<double, 2> elliptic_point(double r, double phi, double a1, double a2);

struct RayProfile {
  double phi = 0.0;
  double phi_polar = 0.0;
  std::vector<double> r;
  std::vector<double> values;
  std::vector<double> derivative;  // dW/dr by centered differences, if requested
  double time = 0.0;
  double eps = 0.0;
  bool truncated = false;
};

/// Samples a two-dimensional state along the elliptic ray of angle phi at
/// `samples` radii spread evenly over [r_lo, r_hi].
RayProfile extract_ray(const WaveState& state, double phi, double a1, double a2, double r_lo,
                       double r_hi, int samples);

/// W(r, phi, t) = w(r + t/eps^2, phi, t/eps^2) for r in [r_lo, r_hi]; the state
/// must sit at physical time t/eps^2.  Radii left of the origin read zero.
RayProfile moving_frame(const WaveState& state, double t, double phi, double a1, double a2,
                        double eps, double r_lo, double r_hi, int samples, bool derivative = true);

struct KdvComparison {
  Profile1D predicted;
  double discrepancy = 0.0;
};

/// Evolves U(t1) with the KdV solver to t2 and measures the L2 distance to U(t2).
KdvComparison kdv_compare(const Profile1D& u_t1, double kappa, double t1, double t2,
                          const Profile1D& u_t2);

/// Integral of W^2 over r in [0.3 t, 0.9 t] along the ray, t the state's time.
double trailing_mass(const WaveState& state, double phi, double a1, double a2, int samples = 2000);

struct StudyPoint {
  double eps = 0.0;
  double t_final = 0.0;
  double error = 0.0;
  double seconds = 0.0;
};

struct ConvergenceStudy {
  std::vector<StudyPoint> points;
  RateFit fit;
};

struct ConvergenceOptions {
  std::vector<double> eps{0.2, 0.15, 0.1};
  double t0 = 0.5;                 // T = t0 / eps^2
  std::vector<int> cell_nodes;     // heterogeneous nodes per period; empty: geometry default
  double dx = 0.2;                 // effective-model spacing
  double dt_effective = 0.02;
  double length = 0.0;             // 0: 1.25 sqrt(max a) T + 10
  FaceRule face_rule = FaceRule::averaged;
};

/// Nodes per period that put every interface of a built-in geometry on the
/// half-node lattice.
std::vector<int> conforming_cell_nodes(const std::string& geometry);

/// Heterogeneous versus effective solutions for each eps, using the effective
/// tensors of the cell problem discretized at the same nodes per period.
ConvergenceStudy run_convergence(const CoefficientField& field, const ConvergenceOptions& opt,
                                 const std::function<void(const StudyPoint&)>& progress = {});

/// Effective model of a two-dimensional even-symmetric field on a cell grid.
EffectiveModel effective_model(const CoefficientField& field, const CellGrid& grid,
                               FaceRule rule = FaceRule::averaged);

}  // namespace effwave
