#include <cmath>
#include <numbers>

#include "effwave/errors.hpp"
#include "effwave/fft.hpp"
#include "effwave/pde_solvers.hpp"

namespace effwave {

KdvResult simulate_kdv(double kappa, const Profile1D& u0, double t0, const std::vector<double>& times) {
  if (!(t0 > 0.0)) throw ContractViolation("initial time must be positive");
  const int n = static_cast<int>(u0.values.size());
  if (n < 4 || !(u0.dr > 0.0)) throw ContractViolation("profile needs at least 4 samples and dr > 0");
  for (double t : times)
    if (t < t0) throw ContractViolation("output time before the initial time");

  FftPlan plan({n});
  std::vector<Complex> vhat(n);
  const double s0 = std::sqrt(t0);
  for (int i = 0; i < n; ++i) vhat[i] = s0 * u0.values[i];
  plan.forward(vhat);
  const double length = n * u0.dr;
  std::vector<double> xi(n);
  for (int j = 0; j < n; ++j) {
    xi[j] = fft_angle(j, n) * n / length;
    if (n % 2 == 0 && j == n / 2) xi[j] = 0.0;  // keep the Nyquist mode real
  }

  double peak0 = 0.0;
  for (double v : u0.values) peak0 = std::max(peak0, std::abs(v));
  const int band = std::max(2, n / 20);

  KdvResult res;
  std::vector<Complex> work(n);
  for (double t : times) {
    const double tau = t - t0;
    for (int j = 0; j < n; ++j)
      work[j] = vhat[j] * std::polar(1.0, -0.5 * kappa * xi[j] * xi[j] * xi[j] * tau);
    plan.backward(work);
    Profile1D p{u0.r0, u0.dr, std::vector<double>(n)};
    const double inv = 1.0 / (n * std::sqrt(t));
    for (int i = 0; i < n; ++i) p.values[i] = work[i].real() * inv;
    double edge = 0.0;
    for (int i = 0; i < band; ++i)
      edge = std::max({edge, std::abs(p.values[i]), std::abs(p.values[n - 1 - i])});
    if (edge > 1e-3 * std::max(peak0, 1e-300)) res.wraparound_warning = true;
    res.times.push_back(t);
    res.profiles.push_back(std::move(p));
  }
  return res;
}

}  // namespace effwave
