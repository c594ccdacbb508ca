#include <doctest.h>

#include <cmath>

#include "effwave/analysis.hpp"
#include "effwave/errors.hpp"
#include "effwave/geometry.hpp"
#include "generators.hpp"

using namespace effwave;

namespace {
double at(const CoefficientField& f, double y1, double y2) {
  const double y[2] = {y1, y2};
  return f(y)(0, 0);
}
}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("wrap_to_cell maps into [-pi, pi)") {
  CHECK(wrap_to_cell(0.5) == doctest::Approx(0.5));
  CHECK(wrap_to_cell(M_PI) == doctest::Approx(-M_PI));
  CHECK(wrap_to_cell(-M_PI) == doctest::Approx(-M_PI));
  CHECK(wrap_to_cell(3.0 * M_PI + 0.25) == doctest::Approx(-M_PI + 0.25));
  gen::Source src(21);
  for (int i = 0; i < 1000; ++i) {
    const double y = src.uniform(-50.0, 50.0);
    const double w = wrap_to_cell(y);
    CHECK(w >= -M_PI);
    CHECK(w < M_PI);
    const double turns = (y - w) / (2.0 * M_PI);
    CHECK(std::abs(turns - std::round(turns)) < 1e-9);
  }
}

TEST_CASE("built-in media values and means") {
  const auto rect = builtin_geometry("rect");
  const double shift = 0.5 - (0.2 + 1.4 * (22.0 / 26.0) * (2.0 / 6.0));
  CHECK(at(rect, 0.0, 0.0) == doctest::Approx(1.6 + shift));
  CHECK(at(rect, 3.0, 0.0) == doctest::Approx(0.2 + shift));
  CHECK(at(rect, 0.0, 1.2) == doctest::Approx(0.2 + shift));
  CHECK(rect.regions()->mean() == doctest::Approx(0.5));

  const auto cross = builtin_geometry("cross");
  CHECK(at(cross, 0.0, 2.0) == doctest::Approx(2.0));
  CHECK(at(cross, 2.0, 0.0) == doctest::Approx(2.0));
  CHECK(at(cross, 2.0, 2.0) == doctest::Approx(0.2));
  // two 14x4 arms of a 18x18 lattice overlapping in a 4x4 square
  CHECK(cross.regions()->mean() == doctest::Approx(0.2 + 1.8 * 96.0 / 324.0));

  const auto lam = builtin_geometry("laminate");
  CHECK(at(lam, 3.0, 0.0) == doctest::Approx(2.0));
  CHECK(at(lam, 0.0, 2.0) == doctest::Approx(0.2));
  CHECK(lam.regions()->mean() == doctest::Approx(0.92));

  for (const char* n : {"rect", "cross", "laminate"}) {
    const auto f = builtin_geometry(n);
    CHECK(f.symmetry().even_in_each_axis);
    CHECK(f.gamma() > 0.0);
    CHECK(f.regions()->min_value() == doctest::Approx(f.gamma()));
  }
  CHECK(builtin_geometry("cross").symmetry().axis_exchange);
  CHECK_THROWS_AS(builtin_geometry("hexagon"), ConfigError);
}

TEST_CASE("fields are periodic, symmetric and uniformly elliptic") {
  gen::Source src(22);
  for (const char* n : {"rect", "cross", "laminate"}) {
    const auto f = builtin_geometry(n);
    const auto rep = validate_field(f, 2000);
    CHECK(rep.passed);
    CHECK(rep.gamma_found >= f.gamma() - 1e-12);
    for (int i = 0; i < 500; ++i) {
      const double y1 = src.uniform(-M_PI, M_PI), y2 = src.uniform(-M_PI, M_PI);
      const int s1 = src.integer(-3, 3), s2 = src.integer(-3, 3);
      CHECK(at(f, y1, y2) == at(f, y1 + 2.0 * M_PI * s1, y2 + 2.0 * M_PI * s2));
      CHECK(at(f, y1, y2) >= f.gamma());
      // even in each axis away from the interfaces
      if (std::abs(at(f, y1, y2) - at(f, -y1, y2)) > 0.0) {
        CHECK(at(f, -y1 + 1e-9, y2) == at(f, y1 - 1e-9, y2));
      }
    }
  }
}

TEST_CASE("validation rejects asymmetric, non-elliptic and non-even fields") {
  const CoefficientField skew(
      2,
      [](std::span<const double>, std::span<double> a) {
        a[0] = 1.0;
        a[1] = 0.3;
        a[2] = 0.1;
        a[3] = 1.0;
      },
      0.5);
  CHECK_THROWS_AS(validate_field(skew, 50), ValidationError);

  const CoefficientField weak(
      2,
      [](std::span<const double> y, std::span<double> a) {
        a[0] = a[3] = 0.1 + 0.05 * std::cos(y[0]);
        a[1] = a[2] = 0.0;
      },
      0.2);
  CHECK_THROWS_AS(validate_field(weak, 200), ValidationError);

  const CoefficientField odd(
      2,
      [](std::span<const double> y, std::span<double> a) {
        a[0] = a[3] = 1.0 + 0.5 * std::sin(y[0]);
        a[1] = a[2] = 0.0;
      },
      0.4, SymmetryFlags{true, false});
  CHECK_THROWS_AS(validate_field(odd, 200), ValidationError);

  const CoefficientField fine(
      2,
      [](std::span<const double> y, std::span<double> a) {
        a[0] = 1.0 + 0.5 * std::cos(y[0]);
        a[3] = 1.0 + 0.5 * std::cos(y[1]);
        a[1] = a[2] = 0.1 * std::sin(y[0]) * std::sin(y[1]);  // odd under each reflection
      },
      0.3, SymmetryFlags{true, false});
  CHECK(validate_field(fine, 500).passed);
}

TEST_CASE("box containment is half-open") {
  const Box b{{0.0, 0.0}, {1.0, 2.0}, 3.0};
  const double in[2] = {0.0, 1.999}, out1[2] = {1.0, 0.5}, out2[2] = {-1e-12, 0.5};
  CHECK(b.contains(in));
  CHECK_FALSE(b.contains(out1));
  CHECK_FALSE(b.contains(out2));
  CHECK(b.volume() == doctest::Approx(2.0));
}

TEST_CASE("cell and domain grids") {
  const CellGrid g({13, 12});
  CHECK(g.size() == 156u);
  CHECK(g.h(0) == doctest::Approx(2.0 * M_PI / 13.0));
  CHECK(g.stride(1) == 13u);
  CHECK(g.cell_volume() == doctest::Approx(4.0 * M_PI * M_PI / 156.0));

  const auto q = DomainGrid::quadrant({10.0, 4.0}, {0.2, 0.5});
  CHECK(q.nodes(0) == 51);
  CHECK(q.nodes(1) == 9);
  CHECK(q.boundary[0][0] == Boundary::neumann);
  CHECK(q.boundary[0][1] == Boundary::dirichlet);
  const auto p = DomainGrid::periodic_box({10.0, 4.0}, {0.2, 0.5});
  CHECK(p.nodes(0) == 50);
  CHECK(p.size() == 400u);
  CHECK(p.periodic(1));
}

TEST_CASE("face sampling") {
  const CellGrid g({10, 8});
  const auto c = sample_faces(CoefficientField::constant(2, 0.7), g);
  for (const auto& axis : c.values)
    for (double v : axis) CHECK(v == doctest::Approx(0.7));
  CHECK(c.mean(0) == doctest::Approx(0.7));

  for (const char* n : {"rect", "cross", "laminate"}) {
    const auto faces = sample_faces(builtin_geometry(n), CellGrid(conforming_cell_nodes(n)));
    CHECK(faces.conforming);
    CHECK(faces.warning.empty());
  }
  CHECK_FALSE(sample_faces(builtin_geometry("rect"), CellGrid({14, 12})).conforming);
}

TEST_CASE("laminate faces give the arithmetic and harmonic layer means") {
  const auto faces = sample_faces(builtin_geometry("laminate"), CellGrid({10, 10}));
  CHECK(faces.mean(0) == doctest::Approx(0.92).epsilon(1e-14));
  double inv = 0.0;
  for (double v : faces.values[1]) inv += 1.0 / v;
  CHECK(faces.values[1].size() / inv == doctest::Approx(0.3125).epsilon(1e-14));
}

}  // TEST_SUITE
