#include "effwave/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace effwave {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct FftPlan::Impl {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

FftPlan::FftPlan(std::vector<int> dims) : impl_(std::make_unique<Impl>()), dims_(std::move(dims)) {
  if (dims_.empty()) throw std::invalid_argument("FftPlan: no dimensions");
  size_ = 1;
  for (int d : dims_) {
    if (d <= 0) throw std::invalid_argument("FftPlan: non-positive dimension");
    size_ *= static_cast<std::size_t>(d);
  }
  std::vector<int> rev(dims_.rbegin(), dims_.rend());
  auto* buf = fftw_alloc_complex(size_);
  std::lock_guard lock(planner_mutex());
  impl_->fwd = fftw_plan_dft(static_cast<int>(rev.size()), rev.data(), buf, buf, FFTW_FORWARD,
                             FFTW_ESTIMATE);
  impl_->bwd = fftw_plan_dft(static_cast<int>(rev.size()), rev.data(), buf, buf, FFTW_BACKWARD,
                             FFTW_ESTIMATE);
  fftw_free(buf);
  if (!impl_->fwd || !impl_->bwd) throw std::runtime_error("FftPlan: planning failed");
}

FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

void FftPlan::forward(std::span<Complex> data) const {
  if (data.size() != size_) throw std::invalid_argument("FftPlan: size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(impl_->fwd, p, p);
}

void FftPlan::backward(std::span<Complex> data) const {
  if (data.size() != size_) throw std::invalid_argument("FftPlan: size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(impl_->bwd, p, p);
}

double fft_angle(int j, int n) {
  const int m = (j <= n / 2) ? j : j - n;
  return 2.0 * std::numbers::pi * m / n;
}

SpectralPreconditioner::SpectralPreconditioner(std::vector<int> dims, std::vector<double> h,
                                               std::vector<double> abar, std::vector<double> k)
    : plan_(dims) {
  const std::size_t d = dims.size();
  if (h.size() != d || abar.size() != d || k.size() != d)
    throw std::invalid_argument("SpectralPreconditioner: dimension mismatch");
  inv_symbol_.assign(plan_.size(), 0.0);
  work_.resize(plan_.size());
  std::vector<int> idx(d, 0);
  for (std::size_t flat = 0; flat < plan_.size(); ++flat) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const Complex e = std::polar(1.0, fft_angle(idx[j], dims[j]));
      const Complex g = (e - 1.0) / h[j] + Complex(0.0, k[j]) * (1.0 + e) * 0.5;
      s += abar[j] * std::norm(g);
    }
    inv_symbol_[flat] = s > 1e-300 ? 1.0 / s : 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (++idx[j] < dims[j]) break;
      idx[j] = 0;
    }
  }
  // the constant mode at k = 0 is the kernel; a symbol that is merely tiny is
  // still inverted
  bool zero_k = std::all_of(k.begin(), k.end(), [](double v) { return v == 0.0; });
  if (zero_k) inv_symbol_[0] = 0.0;
}

void SpectralPreconditioner::apply(std::span<const Complex> r, std::span<Complex> z) const {
  std::copy(r.begin(), r.end(), work_.begin());
  plan_.forward(work_);
  const double scale = 1.0 / static_cast<double>(plan_.size());
  for (std::size_t i = 0; i < work_.size(); ++i) work_[i] *= inv_symbol_[i] * scale;
  plan_.backward(work_);
  std::copy(work_.begin(), work_.end(), z.begin());
}

void SpectralPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  for (std::size_t i = 0; i < r.size(); ++i) work_[i] = r[i];
  plan_.forward(work_);
  const double scale = 1.0 / static_cast<double>(plan_.size());
  for (std::size_t i = 0; i < work_.size(); ++i) work_[i] *= inv_symbol_[i] * scale;
  plan_.backward(work_);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = work_[i].real();
}

}  // namespace effwave
