#include <doctest.h>

#include <cmath>
#include <numeric>

#include "effwave/cell_solver.hpp"
#include "effwave/errors.hpp"
#include "generators.hpp"

using namespace effwave;

namespace {

CoefficientField layered_1d() {
  RegionList r;
  r.boxes.push_back({{-0.4 * M_PI}, {0.4 * M_PI}, 2.0});
  r.background = 0.2;
  return CoefficientField::piecewise(1, r, SymmetryFlags{true, false}, "layers");
}

// Lowest Bloch frequency of -(a u')' = w^2 u for the two-layer medium above,
// from the transfer-matrix dispersion relation
//   cos(2 pi k) = cos(q1 l1) cos(q2 l2) - (Z1/Z2 + Z2/Z1)/2 sin(q1 l1) sin(q2 l2),
// q_i = w / sqrt(a_i), Z_i = sqrt(a_i).
double layered_mu(double k) {
  const double a1 = 2.0, a2 = 0.2, l1 = 0.8 * M_PI, l2 = 1.2 * M_PI;
  const double ratio = 0.5 * (std::sqrt(a1 / a2) + std::sqrt(a2 / a1));
  auto f = [&](double w) {
    const double p1 = w * l1 / std::sqrt(a1), p2 = w * l2 / std::sqrt(a2);
    // both sides minus one, written to avoid cancellation at small k
    const double lhs = -2.0 * std::pow(std::sin(M_PI * k), 2);
    const double rhs = -2.0 * std::pow(std::sin(0.5 * (p1 + p2)), 2) -
                       (ratio - 1.0) * std::sin(p1) * std::sin(p2);
    return rhs - lhs;
  };
  const double guess = std::sqrt(0.3125) * k;
  double lo = 0.8 * guess, hi = 1.2 * guess;
  REQUIRE(f(lo) * f(hi) < 0.0);
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
  }
  const double w = 0.5 * (lo + hi);
  return w * w;
}

void remove_mean(std::vector<Complex>& v) {
  const Complex m = std::accumulate(v.begin(), v.end(), Complex{}) / double(v.size());
  for (auto& x : v) x -= m;
}

Complex dot(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  Complex s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace

TEST_SUITE("cell_solver") {

TEST_CASE("constant coefficient gives A = c I and C = 0") {
  for (int d = 1; d <= 3; ++d) {
    std::vector<int> n(d, d == 3 ? 6 : 10);
    const auto res = run_algorithm_AC(CoefficientField::constant(d, 0.7), CellGrid(n));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) CHECK(res.A(i, j) == doctest::Approx(i == j ? 0.7 : 0.0));
    CHECK(res.C.norm() < 1e-10);
  }
}

TEST_CASE("operator is symmetric, annihilates constants and is Hermitian in k") {
  gen::Source src(31);
  for (const char* name : {"rect", "cross", "laminate"}) {
    const CellGrid grid({11, 9});
    const auto op = assemble(builtin_geometry(name), grid);
    const auto n = grid.size();
    std::vector<double> ones(n, 1.0), out(n);
    op.apply(ones, out);
    for (double v : out) CHECK(std::abs(v) < 1e-12);

    const std::vector<double> k{src.uniform(-0.5, 0.5), src.uniform(-0.5, 0.5)};
    const auto f = src.complex_vector(n), g = src.complex_vector(n);
    std::vector<Complex> af(n), ag(n);
    op.apply(f, af, k);
    op.apply(g, ag, k);
    CHECK(std::abs(dot(g, af) - dot(ag, f)) < 1e-10 * std::abs(dot(g, af)));
    // quadratic form matches the face energy
    CHECK(dot(f, af).real() == doctest::Approx(op.energy(f, k)).epsilon(1e-12));

    // exact quadratic dependence on k
    std::vector<Complex> a0(n), t(n), sum(n);
    op.apply(f, a0, std::vector<double>{0.0, 0.0});
    sum = a0;
    for (int j = 0; j < 2; ++j) {
      op.apply_first(j, f, t);
      for (std::size_t i = 0; i < n; ++i) sum[i] += k[j] * t[i];
      op.apply_second(j, f, t);
      for (std::size_t i = 0; i < n; ++i) sum[i] += 0.5 * k[j] * k[j] * t[i];
    }
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(sum[i] - af[i]) < 1e-10);
  }
}

TEST_CASE("zero-mean solve recovers manufactured solutions") {
  gen::Source src(32);
  const char* names[] = {"rect", "cross", "laminate"};
  for (int trial = 0; trial < 12; ++trial) {
    const CellGrid grid({src.integer(6, 18), src.integer(6, 18)});
    const auto op = assemble(builtin_geometry(names[trial % 3]), grid);
    auto psi = src.complex_vector(grid.size());
    remove_mean(psi);
    CellField rhs(grid);
    op.apply(psi, rhs.values, {});
    CellSolveStats st;
    const auto sol = solve_zero_mean(op, rhs, {1e-13, 0}, &st);
    CHECK(st.residual < 1e-12);
    for (std::size_t i = 0; i < psi.size(); ++i) CHECK(std::abs(sol.values[i] - psi[i]) < 1e-8);
    CHECK(std::abs(sol.mean()) < 1e-12);
  }
}

TEST_CASE("incompatible right-hand sides and missing prerequisites are rejected") {
  const CellGrid grid({8, 8});
  const auto op = assemble(builtin_geometry("rect"), grid);
  CellField rhs(grid, std::vector<Complex>(grid.size(), 1.0));
  CHECK_THROWS_AS(solve_zero_mean(op, rhs), CompatibilityError);
  CellProblemSet empty;
  CHECK_THROWS_AS(cell_problem_rhs({2, 0, 0}, empty, op), DependencyError);
  CHECK_THROWS_AS(mu_even({1, 0, 0}, empty, op), ContractViolation);
  CHECK_THROWS_AS(mu_even({2, 1, 0}, empty, op), ContractViolation);
}

TEST_CASE("effective tensors carry the medium's symmetries") {
  const auto rect = run_algorithm_AC(builtin_geometry("rect"), CellGrid({13, 12}));
  CHECK(rect.A(0, 1) == 0.0);
  CHECK(rect.imag_residue < 1e-10);
  CHECK(rect.forced_zero_max < 1e-8);
  const int perm[][4] = {{0, 0, 1, 1}, {0, 1, 0, 1}, {1, 0, 1, 0}, {1, 1, 0, 0}, {0, 1, 1, 0}};
  for (const auto& p : perm)
    CHECK(rect.C(p[0], p[1], p[2], p[3]) == doctest::Approx(rect.C(0, 0, 1, 1)).epsilon(1e-10));
  CHECK(rect.C(0, 0, 0, 1) == 0.0);
  CHECK(rect.C(0, 1, 1, 1) == 0.0);

  const auto cross = run_algorithm_AC(builtin_geometry("cross"), CellGrid({9, 9}));
  CHECK(cross.A(0, 0) == doctest::Approx(cross.A(1, 1)).epsilon(1e-10));
  CHECK(cross.C(0, 0, 0, 0) == doctest::Approx(cross.C(1, 1, 1, 1)).epsilon(1e-8));
  // dispersion is negative along the axes for all three media
  CHECK(rect.C(0, 0, 0, 0) < 0.0);
  CHECK(cross.C(0, 0, 0, 0) < 0.0);
}

TEST_CASE("layered medium: A is the harmonic mean and C matches the transfer-matrix relation") {
  // mu(k)/k^2 = A + C k^2 + G k^4; three samples eliminate G
  const double k1 = 0.01, k2 = 0.02, k3 = 0.03;
  const double g1 = layered_mu(k1) / (k1 * k1), g2 = layered_mu(k2) / (k2 * k2),
               g3 = layered_mu(k3) / (k3 * k3);
  const double s1 = k1 * k1, s2 = k2 * k2, s3 = k3 * k3;
  // quadratic in s through the three points, evaluated for its coefficients
  const double d12 = (g2 - g1) / (s2 - s1), d23 = (g3 - g2) / (s3 - s2);
  const double G = (d23 - d12) / (s3 - s1);
  const double C_exact = d12 - G * (s1 + s2);
  const double A_exact = g1 - C_exact * s1 - G * s1 * s1;
  CHECK(A_exact == doctest::Approx(0.3125).epsilon(1e-9));

  const auto field = layered_1d();
  double prev_err = 0.0;
  for (int n : {200, 400}) {
    const auto res = run_algorithm_AC(field, CellGrid({n}));
    CHECK(res.A(0, 0) == doctest::Approx(0.3125).epsilon(1e-12));
    const double err = std::abs(res.C(0, 0, 0, 0) - C_exact) / std::abs(C_exact);
    CHECK(err < 2e-3);
    if (prev_err > 0.0) CHECK(prev_err / err > 3.5);  // second-order convergence
    prev_err = err;
  }
}

TEST_CASE("laminate across the layers reduces to the one-dimensional medium") {
  const auto one = run_algorithm_AC(layered_1d(), CellGrid({40}));
  const auto two = run_algorithm_AC(builtin_geometry("laminate"), CellGrid({4, 40}));
  CHECK(two.A(1, 1) == doctest::Approx(one.A(0, 0)).epsilon(1e-10));
  CHECK(two.C(1, 1, 1, 1) == doctest::Approx(one.C(0, 0, 0, 0)).epsilon(1e-8));
  CHECK(two.A(0, 0) == doctest::Approx(0.92).epsilon(1e-12));
}

}  // TEST_SUITE
