#pragma once

#include <array>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "effwave/linalg.hpp"

namespace effwave {

/// Map a coordinate into the periodicity interval [-pi, pi).
double wrap_to_cell(double y);

/// Axis-aligned box with half-open extent [lo, hi) in every coordinate.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
  double value = 0.0;

  bool contains(std::span<const double> y) const;
  double volume() const;
};

/// Analytic description of a piecewise-constant scalar field: the first box
/// containing a point wins, the background covers the rest, and `shift` is
/// added everywhere.
struct RegionList {
  std::vector<Box> boxes;
  double background = 0.0;
  double shift = 0.0;

  double value_at(std::span<const double> y) const;
  double mean() const;  // over Y, analytic
  double min_value() const;
};

struct SymmetryFlags {
  bool even_in_each_axis = false;
  bool axis_exchange = false;
};

/// Periodic symmetric-matrix valued coefficient y -> a_Y(y) on Y = (-pi, pi)^n.
class CoefficientField {
 public:
  /// Writes the n*n row-major matrix at the (already wrapped) point y.
  using Evaluator = std::function<void(std::span<const double> y, std::span<double> a)>;

  CoefficientField(int dim, Evaluator eval, double gamma, SymmetryFlags flags = {},
                   std::string name = "custom");

  /// Scalar piecewise-constant field a_Y = value * I.
  static CoefficientField piecewise(int dim, RegionList regions, SymmetryFlags flags = {},
                                    std::string name = "custom");
  static CoefficientField constant(int dim, double c);

  int dim() const noexcept { return dim_; }
  double gamma() const noexcept { return gamma_; }
  const SymmetryFlags& symmetry() const noexcept { return flags_; }
  const std::string& name() const noexcept { return name_; }
  const std::optional<RegionList>& regions() const noexcept { return regions_; }

  /// Evaluates at y after periodic wrapping.  Pure; safe to call concurrently.
  void evaluate(std::span<const double> y, std::span<double> a) const;
  RealMatrix operator()(std::span<const double> y) const;

 private:
  int dim_;
  Evaluator eval_;
  double gamma_;
  SymmetryFlags flags_;
  std::string name_;
  std::optional<RegionList> regions_;
};

/// The three built-in two-dimensional test media: "rect", "cross", "laminate".
CoefficientField builtin_geometry(const std::string& name);

/// Periodic grid on Y with nodes y = i * h_j, h_j = 2 pi / N_j.
struct CellGrid {
  std::vector<int> n;

  explicit CellGrid(std::vector<int> resolution);
  int dim() const noexcept { return static_cast<int>(n.size()); }
  double h(int j) const;
  std::size_t size() const noexcept;
  double cell_volume() const;  // prod h_j
  double coordinate(int axis, int i) const { return wrap_to_cell(i * h(axis)); }
  std::size_t stride(int axis) const;
};

enum class Boundary { neumann, dirichlet, periodic };

/// Rectangular domain [0, L_1] x ... with node spacing h_j.  Non-periodic axes
/// carry nodes 0..M_j (node M_j lies on the outer side); periodic axes carry
/// nodes 0..M_j - 1 with wraparound.
struct DomainGrid {
  std::vector<double> length;
  std::vector<double> h;
  std::vector<int> cells;  // M_j = L_j / h_j
  std::vector<std::array<Boundary, 2>> boundary;
  std::vector<double> origin;  // coordinate of node 0; zeros by default

  /// Quadrant domain: Neumann on the axes, Dirichlet on the outer sides.
  DomainGrid() = default;
  static DomainGrid quadrant(std::vector<double> length, std::vector<double> h);
  static DomainGrid periodic_box(std::vector<double> length, std::vector<double> h);
  DomainGrid(std::vector<double> length, std::vector<double> h,
             std::vector<std::array<Boundary, 2>> boundary);

  int dim() const noexcept { return static_cast<int>(h.size()); }
  int nodes(int axis) const;
  std::size_t size() const;
  std::size_t stride(int axis) const;
  bool periodic(int axis) const { return boundary[axis][0] == Boundary::periodic; }
  double coordinate(int axis, int i) const { return origin[axis] + i * h[axis]; }
};

enum class FaceRule {
  averaged,  // harmonic mean along the edge, arithmetic mean across it
  midpoint,  // single sample at the face midpoint
};

/// Per-face coefficients for conservative flux stencils.  values[j][i] is the
/// coefficient on the face between node i and node i + e_j (wrapping on
/// periodic axes; the entry past the last node of a bounded axis is unused).
struct FaceCoefficients {
  std::vector<std::vector<double>> values;
  bool conforming = true;
  std::string warning;

  double mean(int axis) const;
};

FaceCoefficients sample_faces(const CoefficientField& field, const CellGrid& grid,
                              FaceRule rule = FaceRule::averaged);
FaceCoefficients sample_faces(const CoefficientField& field, const DomainGrid& grid, double eps,
                              FaceRule rule = FaceRule::averaged);

struct ValidationReport {
  bool passed = true;
  double gamma_found = 0.0;
  int samples = 0;
};

/// Symmetry, periodicity, ellipticity and (if flagged) even-symmetry checks at
/// quasi-random points.  Throws ValidationError naming the offending point.
ValidationReport validate_field(const CoefficientField& field, int samples);

/// CSV dump of a two-dimensional field on a cell grid: y1,y2,a11,a12,a22.
void write_field_csv(std::ostream& out, const CoefficientField& field, const CellGrid& grid);

}  // namespace effwave
