#include "effwave/pde_solvers.hpp"

#include <cmath>

#include "effwave/errors.hpp"

namespace effwave {

namespace {

// Calls fn(base, stride, n) for every grid line along `axis`.
template <class Fn>
void for_each_domain_line(const DomainGrid& g, int axis, Fn&& fn) {
  const std::size_t s = g.stride(axis);
  const std::size_t n = static_cast<std::size_t>(g.nodes(axis));
  const long long lines = static_cast<long long>(g.size() / n);
#pragma omp parallel for schedule(static)
  for (long long line = 0; line < lines; ++line) {
    const std::size_t l = static_cast<std::size_t>(line);
    fn((l / s) * s * n + (l % s), s, n);
  }
}

}  // namespace

DispersiveStencils::DispersiveStencils(DomainGrid grid) : grid_(std::move(grid)) {
  const int d = grid_.dim();
  for (int j = 0; j < d; ++j)
    if (grid_.nodes(j) < 3) throw ConfigError("dispersive stencils need at least 3 nodes per axis");
  weights_.assign(grid_.size(), 1.0);
  pinned_.assign(grid_.size(), 0);
  for (std::size_t flat = 0; flat < grid_.size(); ++flat) {
    std::size_t rem = flat;
    for (int j = 0; j < d; ++j) {
      const int n = grid_.nodes(j);
      const int t = static_cast<int>(rem % n);
      rem /= n;
      if (grid_.periodic(j)) continue;
      for (int side = 0; side < 2; ++side) {
        const bool on = side == 0 ? t == 0 : t == n - 1;
        if (!on) continue;
        if (grid_.boundary[j][side] == Boundary::dirichlet) pinned_[flat] = 1;
        if (grid_.boundary[j][side] == Boundary::neumann) weights_[flat] *= 0.5;
      }
    }
    if (pinned_[flat]) weights_[flat] = 0.0;
  }
}

double DispersiveStencils::ghost_sign(int axis, int side, int flip) const {
  const double base = grid_.boundary[axis][side] == Boundary::dirichlet ? -1.0 : 1.0;
  return (flip % 2) ? -base : base;
}

namespace {

struct LineReader {
  const double* g;
  std::size_t base, s;
  int n;
  bool periodic;
  double sign_lo, sign_hi;

  double operator()(int t) const {
    if (periodic) {
      t = ((t % n) + n) % n;
      return g[base + static_cast<std::size_t>(t) * s];
    }
    if (t < 0) return sign_lo * g[base + static_cast<std::size_t>(-t) * s];
    if (t >= n) return sign_hi * g[base + static_cast<std::size_t>(2 * (n - 1) - t) * s];
    return g[base + static_cast<std::size_t>(t) * s];
  }
};

}  // namespace

void DispersiveStencils::first_derivative(int axis, std::span<const double> g, int flip,
                                          std::span<double> out) const {
  const double h = grid_.h[axis];
  const bool per = grid_.periodic(axis);
  const double lo = per ? 1.0 : ghost_sign(axis, 0, flip);
  const double hi = per ? 1.0 : ghost_sign(axis, 1, flip);
  for_each_domain_line(grid_, axis, [&](std::size_t base, std::size_t s, std::size_t n) {
    LineReader r{g.data(), base, s, static_cast<int>(n), per, lo, hi};
    for (int t = 0; t < static_cast<int>(n); ++t)
      out[base + t * s] = (r(t - 2) - 8.0 * r(t - 1) + 8.0 * r(t + 1) - r(t + 2)) / (12.0 * h);
  });
}

void DispersiveStencils::second_derivative(int axis, std::span<const double> g, int flip,
                                           std::span<double> out) const {
  const double h2 = grid_.h[axis] * grid_.h[axis];
  const bool per = grid_.periodic(axis);
  const double lo = per ? 1.0 : ghost_sign(axis, 0, flip);
  const double hi = per ? 1.0 : ghost_sign(axis, 1, flip);
  for_each_domain_line(grid_, axis, [&](std::size_t base, std::size_t s, std::size_t n) {
    LineReader r{g.data(), base, s, static_cast<int>(n), per, lo, hi};
    for (int t = 0; t < static_cast<int>(n); ++t)
      out[base + t * s] =
          (-r(t - 2) + 16.0 * r(t - 1) - 30.0 * r(t) + 16.0 * r(t + 1) - r(t + 2)) / (12.0 * h2);
  });
}

void DispersiveStencils::mixed(int i, int j, std::span<const double> g, std::array<int, 3> flips,
                               std::span<double> out) const {
  if (i == j) {
    second_derivative(i, g, flips[i], out);
    return;
  }
  std::vector<double> tmp(g.size());
  first_derivative(j, g, flips[j], tmp);
  first_derivative(i, tmp, flips[i], out);
}

void DispersiveStencils::second(const SymMatrix& M, std::span<const double> w,
                                std::span<double> out) const {
  const int d = grid_.dim();
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> tmp(w.size());
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double c = (i == j ? 1.0 : 2.0) * M(i, j);
      if (c == 0.0) continue;
      mixed(i, j, w, {0, 0, 0}, tmp);
      for (std::size_t p = 0; p < out.size(); ++p) out[p] += c * tmp[p];
    }
}

void DispersiveStencils::fourth(const Tensor4& F, std::span<const double> w,
                                std::span<double> out) const {
  const int d = grid_.dim();
  std::fill(out.begin(), out.end(), 0.0);
  // coefficient of D_{ij} D_{kl} for unordered pairs (i <= j), (k <= l)
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) pairs.emplace_back(i, j);
  const std::size_t np = pairs.size();
  auto pair_index = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    for (std::size_t p = 0; p < np; ++p)
      if (pairs[p].first == a && pairs[p].second == b) return p;
    return np;
  };
  std::vector<double> coef(np * np, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) coef[pair_index(i, j) * np + pair_index(k, l)] += F(i, j, k, l);
  std::vector<double> inner(w.size()), tmp(w.size());
  for (std::size_t q = 0; q < np; ++q) {
    bool used = false;
    for (std::size_t p = 0; p < np; ++p) used = used || coef[p * np + q] != 0.0;
    if (!used) continue;
    const auto [k, l] = pairs[q];
    mixed(k, l, w, {0, 0, 0}, inner);
    std::array<int, 3> flips{0, 0, 0};
    if (k != l) {
      flips[k] = 1;
      flips[l] = 1;
    }
    for (std::size_t p = 0; p < np; ++p) {
      const double c = coef[p * np + q];
      if (c == 0.0) continue;
      mixed(pairs[p].first, pairs[p].second, inner, flips, tmp);
      for (std::size_t x = 0; x < out.size(); ++x) out[x] += c * tmp[x];
    }
  }
}

}  // namespace effwave
