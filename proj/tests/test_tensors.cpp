#include <doctest.h>

#include <cmath>

#include "effwave/errors.hpp"
#include "effwave/tensors.hpp"
#include "generators.hpp"

using namespace effwave;

namespace {

double form4(const Tensor4& T, const std::vector<double>& k) {
  double s = 0.0;
  const int n = T.n();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) s += T(i, j, a, b) * k[i] * k[j] * k[a] * k[b];
  return s;
}

}  // namespace

TEST_SUITE("tensors") {

TEST_CASE("diagonalize reconstructs A with a proper rotation") {
  gen::Source src(51);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = src.integer(1, 4);
    const auto A = src.spd(n);
    const auto d = diagonalize(A);
    CHECK(determinant(d.S) == doctest::Approx(1.0));
    for (int i = 1; i < n; ++i) CHECK(d.diag[i - 1] <= d.diag[i]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int a = 0; a < n; ++a) s += d.S(a, i) * d.diag[a] * d.S(a, j);
        CHECK(s == doctest::Approx(A(i, j)).epsilon(1e-12).scale(1.0));
      }
    for (int r = 0; r < n; ++r) {
      int first = 0;
      while (first < n && std::abs(d.S(r, first)) < 1e-14) ++first;
      if (r < n - 1) CHECK(d.S(r, first) > 0.0);
    }
  }
}

TEST_CASE("diagonalize example and definiteness failure") {
  SymMatrix A(2);
  A.set(0, 0, 2.0);
  A.set(1, 1, 1.0);
  const auto d = diagonalize(A);
  CHECK(d.diag == std::vector<double>{1.0, 2.0});
  CHECK(std::abs(d.S(0, 1)) == 1.0);
  CHECK(determinant(d.S) == doctest::Approx(1.0));
  SymMatrix B(2);
  B.set(0, 0, 1.0);
  B.set(0, 1, 2.0);
  B.set(1, 1, 1.0);
  CHECK_THROWS_AS(diagonalize(B), DefinitenessError);
}

TEST_CASE("rotation of fourth-order tensors preserves the quartic form") {
  gen::Source src(52);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = src.integer(1, 4);
    const auto T = src.tensor(n);
    const auto S = diagonalize(src.spd(n)).S;
    const auto R = rotate_tensor4(T, S);
    const auto k = src.vector(n);
    std::vector<double> sk(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sk[i] += S(i, j) * k[j];
    CHECK(form4(R, sk) == doctest::Approx(form4(T, k)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("decomposition of random pairs is exact with PSD parts") {
  gen::Source src(53);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 4;
    const auto A = src.spd(n, 0.05, 5.0);
    auto C = src.tensor(n, src.uniform(0.1, 10.0));
    const auto part = decompose(A, C);
    CHECK(verify_decomposition(A, C, part.E, part.F, 200, 1000 + trial) < 1e-10);
    const auto psd = psd_checks(part.E, part.F);
    CHECK(psd.passed);
    CHECK(psd.e_min >= -1e-12 * std::max(1.0, part.E.max_abs()));
  }
}

TEST_CASE("single-entry decomposition") {
  gen::Source src(54);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = src.integer(1, 4);
    std::vector<double> diag(n);
    for (auto& x : diag) x = src.uniform(0.1, 3.0);
    std::array<int, 4> idx{src.integer(0, n - 1), src.integer(0, n - 1), src.integer(0, n - 1),
                           src.integer(0, n - 1)};
    const double c = src.normal();
    const auto part = decompose_entry(c, idx, diag);
    SymMatrix A(n);
    for (int i = 0; i < n; ++i) A.set(i, i, diag[i]);
    Tensor4 C(n);
    C(idx[0], idx[1], idx[2], idx[3]) = c;
    CHECK(verify_decomposition(A, C, part.E, part.F, 100, trial) < 1e-12);
    CHECK(psd_checks(part.E, part.F).passed);
  }
  CHECK_THROWS_AS(decompose_entry(1.0, {0, 0, 0, 2}, {1.0, 1.0}), ContractViolation);
}

TEST_CASE("symmetric two-dimensional closed form") {
  gen::Source src(55);
  for (int trial = 0; trial < 200; ++trial) {
    const double a1 = src.uniform(0.05, 2.0), a2 = src.uniform(0.05, 2.0);
    const double al1 = src.uniform(-3.0, 0.5), al2 = src.uniform(-3.0, 0.5), b = src.uniform(-1.0, 1.0);
    SymMatrix A;
    Tensor4 C;
    symmetric_2d_tensors(a1, a2, al1, al2, b, A, C);
    const auto part = decompose_symmetric_2d(a1, a2, al1, al2, b);
    CHECK(verify_decomposition(A, C, part.E, part.F, 100, trial) < 1e-12);
    CHECK(psd_checks(part.E, part.F).passed);
  }
  CHECK_THROWS_AS(decompose_symmetric_2d(-1.0, 1.0, 0.0, 0.0, 0.0), DefinitenessError);
}

TEST_CASE("E and F from the printed coarse-grid rectangle and laminate coefficients") {
  // inputs are rounded to four digits, so agreement is to that level
  const auto r = decompose_symmetric_2d(0.2784, 0.1506, -0.369, -0.034, 0.032);
  CHECK(r.E(0, 0) == doctest::Approx(1.3256).epsilon(3e-4));
  CHECK(r.E(1, 1) == doctest::Approx(0.2257).epsilon(3e-4));
  CHECK(r.F(1, 0, 1, 0) == doctest::Approx(0.1588).epsilon(3e-3));
  CHECK(r.F(0, 1, 0, 1) == doctest::Approx(0.2957).epsilon(3e-3));
  const auto l = decompose_symmetric_2d(0.8750, 0.3019, -1.9185, -0.0933, 0.1448);
  CHECK(l.E(0, 0) == doctest::Approx(2.1925).epsilon(3e-4));
  CHECK(l.E(1, 1) == doctest::Approx(0.3091).epsilon(3e-4));
  CHECK(l.F(1, 0, 1, 0) == doctest::Approx(0.7050).epsilon(3e-3));
  CHECK(l.F(0, 1, 0, 1) == doctest::Approx(1.0964).epsilon(3e-3));
}

TEST_CASE("psd checks report a witness") {
  SymMatrix E(2);
  E.set(0, 0, 1.0);
  E.set(1, 1, -0.5);
  Tensor4 F(2);
  const auto rep = psd_checks(E, F);
  CHECK_FALSE(rep.passed);
  CHECK(rep.failed_part == "E");
  CHECK(rep.e_min == doctest::Approx(-0.5));
  REQUIRE(rep.witness.size() == 2u);
  CHECK(std::abs(rep.witness[1]) == doctest::Approx(1.0));

  SymMatrix Z(2);
  Tensor4 G(2);
  G(0, 1, 0, 1) = -1.0;
  const auto rf = psd_checks(Z, G);
  CHECK_FALSE(rf.passed);
  CHECK(rf.failed_part == "F");
  CHECK(rf.witness.size() == 4u);
}

TEST_CASE("kappa and its contraction form agree") {
  gen::Source src(56);
  for (int trial = 0; trial < 200; ++trial) {
    const double a1 = src.uniform(0.05, 2.0), a2 = src.uniform(0.05, 2.0);
    const double al1 = src.normal(), al2 = src.normal(), b = src.normal();
    SymMatrix A;
    Tensor4 C;
    symmetric_2d_tensors(a1, a2, al1, al2, b, A, C);
    const double phi = src.uniform(0.0, M_PI / 2);
    CHECK(kappa(a1, a2, al1, al2, b, phi) ==
          doctest::Approx(kappa_contraction(A, C, phi)).epsilon(1e-12).scale(1.0));
  }
  // along the axes kappa reduces to alpha_i / a_i^2
  CHECK(kappa(0.2784, 0.1506, -0.369, -0.034, 0.032, 0.0) ==
        doctest::Approx(-0.369 / (0.2784 * 0.2784)));
  CHECK(kappa(0.2784, 0.1506, -0.369, -0.034, 0.032, M_PI / 2) ==
        doctest::Approx(-0.034 / (0.1506 * 0.1506)));
}

TEST_CASE("polar angle of elliptic directions") {
  CHECK(polar_angle(1.0, 1.0, 0.7) == doctest::Approx(0.7));
  CHECK(polar_angle(2.0, 0.5, 0.0) == doctest::Approx(0.0));
  CHECK(polar_angle(2.0, 0.5, M_PI / 2) == doctest::Approx(M_PI / 2));
  CHECK(polar_angle(4.0, 1.0, M_PI / 4) == doctest::Approx(std::atan(0.5)));
}

TEST_CASE("kappa extrema dominate a fine scan") {
  gen::Source src(57);
  for (int trial = 0; trial < 50; ++trial) {
    const double a1 = src.uniform(0.1, 1.0), a2 = src.uniform(0.1, 1.0);
    const double al1 = src.uniform(-3.0, 0.0), al2 = src.uniform(-3.0, 0.0), b = src.uniform(-0.5, 0.5);
    const auto ex = kappa_minimizer(a1, a2, al1, al2, b);
    double best = -1e300, most_neg = 1e300;
    for (int i = 0; i <= 20000; ++i) {
      const double k = kappa(a1, a2, al1, al2, b, M_PI / 2 * i / 20000.0);
      best = std::max(best, k);
      most_neg = std::min(most_neg, k);
    }
    CHECK(ex.kappa_m >= best - 1e-9);
    CHECK(ex.kappa_most_negative <= most_neg + 1e-9);
    CHECK(ex.kappa_m == doctest::Approx(kappa(a1, a2, al1, al2, b, ex.phi_m)));
    CHECK(ex.phi_m_polar == doctest::Approx(polar_angle(a1, a2, ex.phi_m)));
  }
  const auto flat = kappa_minimizer(1.0, 1.0, -1.0, -1.0, -1.0 / 3.0);
  CHECK(flat.kappa_m == doctest::Approx(-1.0));
  CHECK(flat.kappa_most_negative == doctest::Approx(-1.0));
}

}  // TEST_SUITE
