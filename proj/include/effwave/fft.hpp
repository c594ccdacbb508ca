#pragma once

#include <memory>
#include <span>
#include <vector>

#include "effwave/linalg.hpp"

namespace effwave {

/// In-place complex FFT on a periodic box.  Axis 0 varies fastest in memory,
/// matching the layout of CellField and DomainGrid data.  Unnormalized:
/// backward(forward(x)) = size() * x.
class FftPlan {
 public:
  explicit FftPlan(std::vector<int> dims);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&&) noexcept;
  FftPlan& operator=(FftPlan&&) noexcept;

  void forward(std::span<Complex> data) const;
  void backward(std::span<Complex> data) const;
  std::size_t size() const noexcept { return size_; }
  const std::vector<int>& dims() const noexcept { return dims_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::vector<int> dims_;
  std::size_t size_ = 0;
};

/// Angular frequency of FFT bin `j` on an axis of `n` points, in (-pi, pi].
double fft_angle(int j, int n);

/// Inverse of the constant-coefficient Bloch operator
///   sum_j abar_j |(e^{i theta_j} - 1)/h_j + i k_j (1 + e^{i theta_j})/2|^2
/// applied in Fourier space.  A zero symbol (the constant mode at k = 0) maps
/// to zero.
class SpectralPreconditioner {
 public:
  SpectralPreconditioner(std::vector<int> dims, std::vector<double> h, std::vector<double> abar,
                         std::vector<double> k);

  void apply(std::span<const Complex> r, std::span<Complex> z) const;
  void apply(std::span<const double> r, std::span<double> z) const;

 private:
  FftPlan plan_;
  std::vector<double> inv_symbol_;
  mutable std::vector<Complex> work_;
};

}  // namespace effwave
