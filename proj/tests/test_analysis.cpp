#include <doctest.h>

#include <cmath>

#include "effwave/analysis.hpp"
#include "effwave/errors.hpp"
#include "generators.hpp"

using namespace effwave;

namespace {

WaveState make_state(DomainGrid g, const std::function<double(double, double)>& f, double t = 1.0) {
  WaveState s;
  s.grid = std::move(g);
  s.now.resize(s.grid.size());
  const int n0 = s.grid.nodes(0);
  for (int j = 0; j < s.grid.nodes(1); ++j)
    for (int i = 0; i < n0; ++i)
      s.now[i + std::size_t(n0) * j] = f(s.grid.coordinate(0, i), s.grid.coordinate(1, j));
  s.prev = s.now;
  s.time = t;
  s.dt = 0.01;
  return s;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("interpolation reproduces bilinear functions and respects the domain") {
  const auto s = make_state(DomainGrid::quadrant({4.0, 3.0}, {0.5, 0.25}),
                            [](double x, double y) { return 1.0 + 2.0 * x - y + 0.5 * x * y; });
  gen::Source src(71);
  for (int i = 0; i < 500; ++i) {
    const double x[2] = {src.uniform(0.0, 4.0), src.uniform(0.0, 3.0)};
    REQUIRE(interpolate(s, x).has_value());
    CHECK(*interpolate(s, x) == doctest::Approx(1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]));
  }
  const double out[2] = {4.01, 1.0}, neg[2] = {-0.01, 1.0}, edge[2] = {4.0, 3.0};
  CHECK_FALSE(interpolate(s, out).has_value());
  CHECK_FALSE(interpolate(s, neg).has_value());
  CHECK(interpolate(s, edge).has_value());

  const auto p = make_state(DomainGrid::periodic_box({2.0, 2.0}, {0.5, 0.5}),
                            [](double x, double) { return std::cos(M_PI * x); });
  const double a[2] = {0.5, 0.0}, b[2] = {2.5, 0.0}, c[2] = {-1.5, 0.0};
  CHECK(*interpolate(p, a) == doctest::Approx(*interpolate(p, b)));
  CHECK(*interpolate(p, a) == doctest::Approx(*interpolate(p, c)));
}

TEST_CASE("l2_error uses the trapezoid rule over the overlap") {
  const auto g = DomainGrid::quadrant({1.0, 1.0}, {0.01, 0.01});
  const auto one = make_state(g, [](double, double) { return 1.0; });
  const auto zero = make_state(g, [](double, double) { return 0.0; });
  CHECK(l2_error(one, zero) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(l2_error(one, one) == 0.0);
  const auto lin = make_state(g, [](double x, double) { return x; });
  CHECK(l2_error(lin, zero) == doctest::Approx(std::sqrt(1.0 / 3.0 + 1e-4 / 6.0)).epsilon(1e-10));

  // only the part of u's grid inside w's grid is measured
  const auto half = make_state(DomainGrid::quadrant({0.5, 1.0}, {0.01, 0.01}), [](double, double) { return 0.0; });
  CHECK(l2_error(one, half) == doctest::Approx(std::sqrt(0.5 + 0.5 * 0.01)).epsilon(1e-9));

  gen::Source src(72);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = src.normal(), b = src.normal();
    const auto u = make_state(g, [&](double x, double y) { return a * std::sin(x + y); });
    const auto w = make_state(g, [&](double x, double y) { return b * std::sin(x + y); });
    const auto z = make_state(g, [&](double x, double y) { return 0.0 * x * y; });
    CHECK(l2_error(u, w) == doctest::Approx(std::abs(a - b) * l2_error(u, z) / std::abs(a)));
    CHECK(l2_error(u, w) == doctest::Approx(l2_error(w, u)));
  }

  auto late = zero;
  late.time = 1.5;
  CHECK_THROWS_AS(l2_error(one, late), ContractViolation);
  auto far = make_state(DomainGrid::quadrant({1.0, 1.0}, {0.1, 0.1}), [](double, double) { return 0.0; });
  far.grid.origin = {5.0, 5.0};
  CHECK_THROWS_AS(l2_error(one, far), ContractViolation);
}

TEST_CASE("rate fits recover power laws") {
  gen::Source src(73);
  for (int trial = 0; trial < 100; ++trial) {
    const double p = src.uniform(0.2, 3.0), c = src.uniform(0.01, 10.0);
    std::vector<double> eps, err;
    for (int i = 0; i < src.integer(3, 7); ++i) {
      eps.push_back(0.3 * std::pow(0.8, i));
      err.push_back(c * std::pow(eps.back(), p));
    }
    const auto fit = fit_rate(eps, err);
    CHECK(fit.rate == doctest::Approx(p).epsilon(1e-10));
    CHECK(std::exp(fit.intercept) == doctest::Approx(c).epsilon(1e-9));
    CHECK(fit.residual < 1e-10);
  }
  CHECK_THROWS_AS(fit_rate({0.2, 0.1}, {1.0, 0.5}), ContractViolation);
  CHECK_THROWS_AS(fit_rate({0.2, 0.1, 0.05}, {1.0, 0.0, 0.5}), ContractViolation);
  CHECK_THROWS_AS(fit_rate({0.1, 0.1, 0.1}, {1.0, 0.5, 0.3}), ContractViolation);
}

TEST_CASE("elliptic coordinates") {
  const auto c = elliptic_coords({std::sqrt(0.3), 0.0}, 0.3, 0.2);
  CHECK(c.r == doctest::Approx(1.0));
  CHECK(c.phi == doctest::Approx(0.0));
  const auto d = elliptic_coords({0.0, 2.0 * std::sqrt(0.2)}, 0.3, 0.2);
  CHECK(d.r == doctest::Approx(2.0));
  CHECK(d.phi == doctest::Approx(M_PI / 2));
  gen::Source src(74);
  for (int i = 0; i < 1000; ++i) {
    const double a1 = src.uniform(0.05, 2.0), a2 = src.uniform(0.05, 2.0);
    const double r = src.uniform(0.0, 50.0), phi = src.uniform(0.0, M_PI / 2);
    const auto x = elliptic_point(r, phi, a1, a2);
    const auto back = elliptic_coords(x, a1, a2);
    CHECK(back.r == doctest::Approx(r).epsilon(1e-12).scale(1.0));
    if (r > 1e-6) CHECK(back.phi == doctest::Approx(phi).epsilon(1e-10).scale(1.0));
  }
  CHECK_THROWS_AS(elliptic_coords({-1.0, 0.0}, 1.0, 1.0), ContractViolation);
}

TEST_CASE("rays follow elliptic radii") {
  const double a1 = 0.3, a2 = 0.15;
  const auto s = make_state(DomainGrid::quadrant({20.0, 20.0}, {0.05, 0.05}),
                            [&](double x, double y) { return x * x / a1 + y * y / a2; }, 40.0);
  for (double phi : {0.0, 0.4, M_PI / 2}) {
    const auto p = extract_ray(s, phi, a1, a2, 0.0, 10.0, 101);
    REQUIRE(p.r.size() == 101u);
    CHECK_FALSE(p.truncated);
    // bilinear interpolation error of a quadratic is at most h^2/8 times its second derivatives
    const double bound = 0.05 * 0.05 / 8.0 * (2.0 / a1 + 2.0 / a2);
    for (std::size_t i = 0; i < p.r.size(); ++i) CHECK(std::abs(p.values[i] - p.r[i] * p.r[i]) <= bound);
  }
  const auto cut = extract_ray(s, 0.0, a1, a2, 0.0, 100.0, 101);
  CHECK(cut.truncated);
  CHECK(cut.r.back() <= 20.0 / std::sqrt(a1));
  CHECK_THROWS_AS(extract_ray(s, 2.0, a1, a2, 0.0, 1.0, 10), ContractViolation);

  // W^2 = 1 over [0.3 t, 0.9 t]
  const auto ones = make_state(DomainGrid::quadrant({30.0, 30.0}, {0.1, 0.1}), [](double, double) { return 1.0; }, 20.0);
  CHECK(trailing_mass(ones, 0.3, 1.0, 1.0) == doctest::Approx(12.0));
}

TEST_CASE("moving frame shifts by t / eps^2") {
  const double a1 = 0.5, a2 = 0.5, eps = 0.5;
  const auto s = make_state(DomainGrid::quadrant({20.0, 20.0}, {0.02, 0.02}),
                            [&](double x, double y) {
                              return x * std::cos(0.7) / std::sqrt(a1) + y * std::sin(0.7) / std::sqrt(a2);
                            },
                            2.0);
  const auto w = moving_frame(s, 0.5, 0.7, a1, a2, eps, -4.0, 3.0, 71);
  for (std::size_t i = 0; i < w.r.size(); ++i) {
    const double rho = w.r[i] + 2.0;
    CHECK(w.values[i] == doctest::Approx(rho < 0.0 ? 0.0 : rho).epsilon(1e-9).scale(1.0));
    if (w.r[i] > -1.9 && w.r[i] < 2.9) CHECK(w.derivative[i] == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(moving_frame(s, 1.0, 0.7, a1, a2, eps, 0.0, 1.0, 10), ContractViolation);
}

TEST_CASE("KdV comparison of a profile with its own evolution") {
  Profile1D u{-50.0, 0.1, std::vector<double>(1000)};
  for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] = std::exp(-u.coordinate(i) * u.coordinate(i) / 4.0);
  const auto later = simulate_kdv(-2.0, u, 1.0, {3.0}).profiles.front();
  CHECK(kdv_compare(u, -2.0, 1.0, 3.0, later).discrepancy < 1e-12);
  CHECK(kdv_compare(u, -1.0, 1.0, 3.0, later).discrepancy > 1e-3);
  CHECK_THROWS_AS(kdv_compare(u, -2.0, 3.0, 1.0, later), ContractViolation);
}

TEST_CASE("effective model and study set-up") {
  CHECK(conforming_cell_nodes("rect") == std::vector<int>{13, 12});
  CHECK_THROWS_AS(conforming_cell_nodes("custom"), ConfigError);
  const auto m = effective_model(CoefficientField::constant(2, 0.6), CellGrid({8, 8}));
  CHECK(m.A(0, 0) == doctest::Approx(0.6));
  CHECK(m.E.max_abs() < 1e-8);
  const auto lam = effective_model(builtin_geometry("laminate"), CellGrid({10, 10}));
  CHECK(verify_decomposition(lam.A, lam.C, lam.E, lam.F, 200) < 1e-10);

  ConvergenceOptions bad;
  bad.eps = {0.1, 0.2, 0.05};
  CHECK_THROWS_AS(run_convergence(builtin_geometry("rect"), bad), ConfigError);
}

TEST_CASE("convergence study on a homogeneous medium measures only discretization error") {
  ConvergenceOptions opt;
  opt.eps = {0.5, 0.4, 0.3};
  opt.t0 = 0.05;
  opt.cell_nodes = {8, 8};
  int calls = 0;
  const auto st = run_convergence(CoefficientField::constant(2, 0.5), opt, [&](const StudyPoint&) { ++calls; });
  CHECK(calls == 3);
  REQUIRE(st.points.size() == 3u);
  for (const auto& p : st.points) {
    CHECK(p.t_final == doctest::Approx(opt.t0 / (p.eps * p.eps)));
    CHECK(p.error < 0.02);
  }
}

}  // TEST_SUITE
