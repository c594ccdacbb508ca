#include <cmath>
#include <complex>
#include <numbers>

#include "effwave/errors.hpp"
#include "effwave/pde_solvers.hpp"

namespace effwave {

VepsResult reference_veps(const FourierProfile& F0, const SymMatrix& A, const Tensor4& C, double eps,
                          double t, const std::vector<std::vector<double>>& points) {
  const int d = F0.dim;
  if (d < 1 || d > 3) throw ContractViolation("reference_veps supports 1 to 3 dimensions");
  if (A.n() != d || (C.n() != 0 && C.n() != d)) throw ContractViolation("tensor dimensions differ");
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(F0.nk);
  if (F0.values.size() != total) throw ContractViolation("profile sample count mismatch");

  const double dk = F0.dk();
  const double scale = std::pow(2.0 * std::numbers::pi, -0.5 * d) * std::pow(dk, d);
  std::vector<double> G(total);
  std::vector<double> k(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int j = 0; j < d; ++j) {
      k[j] = F0.node(static_cast<int>(rem % F0.nk));
      rem /= F0.nk;
    }
    const double akk = A.quad(k);
    double phase = t * std::sqrt(std::max(akk, 0.0));
    if (akk > 0.0 && eps != 0.0 && C.n() == d)
      phase += 0.5 * eps * eps * t * C.contract(k) / std::sqrt(akk);
    G[flat] = scale * F0.values[flat] * std::cos(phase);
  }

  VepsResult res;
  double lmax = 0.0;
  for (int j = 0; j < d; ++j) lmax = std::max(lmax, A(j, j));
  {
    const auto eig = jacobi_eigen(A.matrix());
    lmax = std::max(lmax, eig.values.back());
  }
  double xmax = 0.0;
  for (const auto& p : points) {
    if (static_cast<int>(p.size()) != d) throw ContractViolation("point dimension mismatch");
    double r2 = 0.0;
    for (double v : p) r2 += v * v;
    xmax = std::max(xmax, std::sqrt(r2));
  }
  res.phase_per_cell = (t * std::sqrt(lmax) + xmax) * dk;
  res.accuracy_warning = res.phase_per_cell > 0.5 * std::numbers::pi;

  res.values.assign(points.size(), 0.0);
  const int nk = F0.nk;
#pragma omp parallel for schedule(dynamic, 4)
  for (long long p = 0; p < static_cast<long long>(points.size()); ++p) {
    const auto& x = points[p];
    std::vector<std::vector<Complex>> ph(d, std::vector<Complex>(nk));
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < nk; ++i) ph[j][i] = std::polar(1.0, F0.node(i) * x[j]);
    double sum = 0.0;
    if (d == 1) {
      for (int i = 0; i < nk; ++i) sum += G[i] * ph[0][i].real();
    } else if (d == 2) {
      for (int i2 = 0; i2 < nk; ++i2) {
        Complex inner = 0.0;
        const double* row = &G[static_cast<std::size_t>(i2) * nk];
        for (int i1 = 0; i1 < nk; ++i1) inner += row[i1] * ph[0][i1];
        sum += (inner * ph[1][i2]).real();
      }
    } else {
      for (int i3 = 0; i3 < nk; ++i3)
        for (int i2 = 0; i2 < nk; ++i2) {
          Complex inner = 0.0;
          const double* row = &G[(static_cast<std::size_t>(i3) * nk + i2) * nk];
          for (int i1 = 0; i1 < nk; ++i1) inner += row[i1] * ph[0][i1];
          sum += (inner * ph[1][i2] * ph[2][i3]).real();
        }
    }
    res.values[p] = sum;
  }
  return res;
}

}  // namespace effwave
