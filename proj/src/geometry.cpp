#include "effwave/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "effwave/errors.hpp"

namespace effwave {

namespace {
constexpr double pi = std::numbers::pi;

std::string format_point(std::span<const double> y) {
  std::ostringstream os;
  os << std::setprecision(17) << '(';
  for (std::size_t i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y[i];
  os << ')';
  return os.str();
}

double radical_inverse(unsigned long index, unsigned base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

// 2 * x is an integer up to round-off: x lies on a node or half-node line.
bool on_half_lattice(double x) {
  const double t = 2.0 * x;
  return std::abs(t - std::round(t)) <= 1e-8 * std::max(1.0, std::abs(t));
}
}  // namespace

double wrap_to_cell(double y) {
  if (y >= -pi && y < pi) return y;
  double w = y - 2.0 * pi * std::floor((y + pi) / (2.0 * pi));
  if (w >= pi) w -= 2.0 * pi;
  if (w < -pi) w = -pi;
  return w;
}

bool Box::contains(std::span<const double> y) const {
  for (std::size_t j = 0; j < lo.size(); ++j)
    if (!(y[j] >= lo[j] && y[j] < hi[j])) return false;
  return true;
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t j = 0; j < lo.size(); ++j) v *= std::max(0.0, hi[j] - lo[j]);
  return v;
}

double RegionList::value_at(std::span<const double> y) const {
  for (const auto& b : boxes)
    if (b.contains(y)) return b.value + shift;
  return background + shift;
}

double RegionList::mean() const {
  if (boxes.empty()) return background + shift;
  const std::size_t d = boxes.front().lo.size();
  // Exact mean: split Y along every box face and evaluate cell centres.
  std::vector<std::vector<double>> cuts(d);
  for (std::size_t j = 0; j < d; ++j) {
    cuts[j] = {-pi, pi};
    for (const auto& b : boxes) {
      cuts[j].push_back(std::clamp(b.lo[j], -pi, pi));
      cuts[j].push_back(std::clamp(b.hi[j], -pi, pi));
    }
    std::sort(cuts[j].begin(), cuts[j].end());
    cuts[j].erase(std::unique(cuts[j].begin(), cuts[j].end()), cuts[j].end());
  }
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> centre(d);
  double total = 0.0;
  while (true) {
    double vol = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      vol *= cuts[j][idx[j] + 1] - cuts[j][idx[j]];
      centre[j] = 0.5 * (cuts[j][idx[j] + 1] + cuts[j][idx[j]]);
    }
    total += vol * value_at(centre);
    std::size_t j = 0;
    for (; j < d; ++j) {
      if (++idx[j] + 1 < cuts[j].size()) break;
      idx[j] = 0;
    }
    if (j == d) break;
  }
  return total / std::pow(2.0 * pi, static_cast<double>(d));
}

double RegionList::min_value() const {
  double m = background;
  for (const auto& b : boxes) m = std::min(m, b.value);
  return m + shift;
}

CoefficientField::CoefficientField(int dim, Evaluator eval, double gamma, SymmetryFlags flags,
                                   std::string name)
    : dim_(dim), eval_(std::move(eval)), gamma_(gamma), flags_(flags), name_(std::move(name)) {
  if (dim < 1 || dim > 3) throw ConfigError("coefficient field dimension must be 1, 2 or 3");
  if (!(gamma > 0.0)) throw ConfigError("coefficient field positivity bound must be positive");
}

CoefficientField CoefficientField::piecewise(int dim, RegionList regions, SymmetryFlags flags,
                                             std::string name) {
  for (const auto& b : regions.boxes) {
    if (b.lo.size() != static_cast<std::size_t>(dim) || b.hi.size() != static_cast<std::size_t>(dim))
      throw ConfigError("box dimension does not match field dimension");
    for (int j = 0; j < dim; ++j)
      if (b.lo[j] < -pi - 1e-12 || b.hi[j] > pi + 1e-12 || b.lo[j] >= b.hi[j])
        throw ConfigError("box must satisfy -pi <= lo < hi <= pi");
  }
  const double gamma = regions.min_value();
  if (!(gamma > 0.0)) throw ConfigError("piecewise field is not positive");
  auto eval = [regions, dim](std::span<const double> y, std::span<double> a) {
    const double v = regions.value_at(y);
    std::fill(a.begin(), a.end(), 0.0);
    for (int j = 0; j < dim; ++j) a[j * dim + j] = v;
  };
  CoefficientField f(dim, eval, gamma, flags, std::move(name));
  f.regions_ = std::move(regions);
  return f;
}

CoefficientField CoefficientField::constant(int dim, double c) {
  RegionList r;
  r.background = c;
  SymmetryFlags flags{true, true};
  return piecewise(dim, r, flags, "constant");
}

void CoefficientField::evaluate(std::span<const double> y, std::span<double> a) const {
  std::array<double, 3> w{};
  for (int j = 0; j < dim_; ++j) w[j] = wrap_to_cell(y[j]);
  eval_(std::span<const double>(w.data(), dim_), a);
}

RealMatrix CoefficientField::operator()(std::span<const double> y) const {
  RealMatrix m(dim_, dim_);
  std::vector<double> buf(dim_ * dim_);
  evaluate(y, buf);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = buf[i * dim_ + j];
  return m;
}

CoefficientField builtin_geometry(const std::string& name) {
  RegionList r;
  SymmetryFlags flags{true, false};
  if (name == "rect") {
    r.boxes.push_back({{-11.0 * pi / 13.0, -pi / 3.0}, {11.0 * pi / 13.0, pi / 3.0}, 1.6});
    r.background = 0.2;
    // a = 0.5 + b - <b>, with <b> from the box area fraction
    const double frac = (22.0 / 26.0) * (2.0 / 6.0);
    r.shift = 0.5 - (0.2 + 1.4 * frac);
  } else if (name == "cross") {
    r.boxes.push_back({{-7.0 * pi / 9.0, -2.0 * pi / 9.0}, {7.0 * pi / 9.0, 2.0 * pi / 9.0}, 2.0});
    r.boxes.push_back({{-2.0 * pi / 9.0, -7.0 * pi / 9.0}, {2.0 * pi / 9.0, 7.0 * pi / 9.0}, 2.0});
    r.background = 0.2;
    flags.axis_exchange = true;
  } else if (name == "laminate") {
    r.boxes.push_back({{-pi, -2.0 * pi / 5.0}, {pi, 2.0 * pi / 5.0}, 2.0});
    r.background = 0.2;
  } else {
    throw ConfigError("unknown geometry '" + name + "' (expected rect, cross or laminate)");
  }
  return CoefficientField::piecewise(2, std::move(r), flags, name);
}

CellGrid::CellGrid(std::vector<int> resolution) : n(std::move(resolution)) {
  if (n.empty() || n.size() > 3) throw ConfigError("cell grid must have 1 to 3 axes");
  for (int v : n)
    if (v < 2) throw ConfigError("cell grid resolution must be at least 2 per axis");
}

double CellGrid::h(int j) const { return 2.0 * pi / n[j]; }

std::size_t CellGrid::size() const noexcept {
  std::size_t s = 1;
  for (int v : n) s *= static_cast<std::size_t>(v);
  return s;
}

double CellGrid::cell_volume() const {
  double v = 1.0;
  for (int j = 0; j < dim(); ++j) v *= h(j);
  return v;
}

std::size_t CellGrid::stride(int axis) const {
  std::size_t s = 1;
  for (int j = 0; j < axis; ++j) s *= static_cast<std::size_t>(n[j]);
  return s;
}

DomainGrid::DomainGrid(std::vector<double> length_, std::vector<double> h_,
                       std::vector<std::array<Boundary, 2>> boundary_)
    : length(std::move(length_)), h(std::move(h_)), boundary(std::move(boundary_)),
      origin(h.size(), 0.0) {
  if (length.size() != h.size() || boundary.size() != h.size() || h.empty() || h.size() > 3)
    throw ConfigError("domain grid: inconsistent dimensions");
  for (std::size_t j = 0; j < h.size(); ++j) {
    if (!(h[j] > 0.0) || !(length[j] > 0.0))
      throw ConfigError("domain grid: lengths and spacings must be positive");
    const double m = length[j] / h[j];
    const double mr = std::round(m);
    if (std::abs(m - mr) > 1e-9 * std::max(1.0, m))
      throw ConfigError("domain grid: L/h must be an integer on every axis");
    cells.push_back(static_cast<int>(mr));
    if ((boundary[j][0] == Boundary::periodic) != (boundary[j][1] == Boundary::periodic))
      throw ConfigError("domain grid: periodic sides must come in pairs");
  }
}

DomainGrid DomainGrid::quadrant(std::vector<double> length, std::vector<double> h) {
  std::vector<std::array<Boundary, 2>> b(h.size(), {Boundary::neumann, Boundary::dirichlet});
  return DomainGrid(std::move(length), std::move(h), std::move(b));
}

DomainGrid DomainGrid::periodic_box(std::vector<double> length, std::vector<double> h) {
  std::vector<std::array<Boundary, 2>> b(h.size(), {Boundary::periodic, Boundary::periodic});
  return DomainGrid(std::move(length), std::move(h), std::move(b));
}

int DomainGrid::nodes(int axis) const { return periodic(axis) ? cells[axis] : cells[axis] + 1; }

std::size_t DomainGrid::size() const {
  std::size_t s = 1;
  for (int j = 0; j < dim(); ++j) s *= static_cast<std::size_t>(nodes(j));
  return s;
}

std::size_t DomainGrid::stride(int axis) const {
  std::size_t s = 1;
  for (int j = 0; j < axis; ++j) s *= static_cast<std::size_t>(nodes(j));
  return s;
}

double FaceCoefficients::mean(int axis) const {
  const auto& v = values[axis];
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

namespace {

// Shared face sampler: node i of a grid with `n` nodes per axis sits at
// x = i * h; the field is evaluated at x * scale.
FaceCoefficients sample_faces_impl(const CoefficientField& field, const std::vector<int>& n,
                                   const std::vector<double>& h, const std::vector<double>& origin,
                                   double scale, FaceRule rule) {
  const int d = field.dim();
  if (static_cast<int>(n.size()) != d) throw ConfigError("grid and field dimensions differ");
  std::size_t total = 1;
  for (int v : n) total *= static_cast<std::size_t>(v);
  FaceCoefficients out;
  out.values.assign(d, std::vector<double>(total));
  bool offdiag = false;
  for (int axis = 0; axis < d; ++axis) {
    auto& vals = out.values[axis];
#pragma omp parallel for schedule(static) reduction(|| : offdiag)
    for (long long flat = 0; flat < static_cast<long long>(total); ++flat) {
      std::array<int, 3> idx{};
      long long rem = flat;
      for (int j = 0; j < d; ++j) {
        idx[j] = static_cast<int>(rem % n[j]);
        rem /= n[j];
      }
      std::array<double, 3> x{}, y{};
      std::array<double, 9> a{};
      auto sample = [&](std::span<const double> pt) {
        for (int j = 0; j < d; ++j) y[j] = pt[j] * scale;
        field.evaluate(std::span<const double>(y.data(), d), std::span<double>(a.data(), d * d));
        for (int m = 0; m < d; ++m)
          if (m != axis && a[axis * d + m] != 0.0) offdiag = true;
        return a[axis * d + axis];
      };
      for (int j = 0; j < d; ++j) x[j] = origin[j] + idx[j] * h[j];
      double value = 0.0;
      if (rule == FaceRule::midpoint) {
        x[axis] += 0.5 * h[axis];
        value = sample(std::span<const double>(x.data(), d));
      } else {
        // across offsets: every combination of +-h/4 on the other axes
        const int others = d - 1;
        const int combos = 1 << others;
        double acc = 0.0;
        for (int c = 0; c < combos; ++c) {
          std::array<double, 3> p = x;
          int bit = 0;
          for (int j = 0; j < d; ++j) {
            if (j == axis) continue;
            p[j] += ((c >> bit) & 1 ? 0.25 : -0.25) * h[j];
            ++bit;
          }
          double inv = 0.0;
          for (double t : {0.25, 0.75}) {
            std::array<double, 3> q = p;
            q[axis] += t * h[axis];
            inv += 0.5 / sample(std::span<const double>(q.data(), d));
          }
          acc += 1.0 / inv;
        }
        value = acc / combos;
      }
      vals[flat] = value;
    }
  }
  if (offdiag)
    throw ConfigError("flux stencils support diagonal coefficient matrices only (a_ij = 0, i != j)");
  if (const auto& regions = field.regions()) {
    for (int j = 0; j < d && out.conforming; ++j) {
      if (!on_half_lattice(2.0 * pi / scale / h[j]) && !regions->boxes.empty()) {
        out.conforming = false;
        break;
      }
      for (const auto& b : regions->boxes) {
        for (double c : {b.lo[j], b.hi[j]}) {
          if (!on_half_lattice((c / scale - origin[j]) / h[j])) {
            out.conforming = false;
            std::ostringstream os;
            os << "grid does not conform to the interface y" << (j + 1) << " = " << c;
            out.warning = os.str();
            break;
          }
        }
        if (!out.conforming) break;
      }
    }
    if (!out.conforming && out.warning.empty())
      out.warning = "cell period is not a multiple of half the grid spacing";
  }
  return out;
}

}  // namespace

FaceCoefficients sample_faces(const CoefficientField& field, const CellGrid& grid, FaceRule rule) {
  std::vector<double> h(grid.dim());
  for (int j = 0; j < grid.dim(); ++j) h[j] = grid.h(j);
  return sample_faces_impl(field, grid.n, h, std::vector<double>(grid.dim(), 0.0), 1.0, rule);
}

FaceCoefficients sample_faces(const CoefficientField& field, const DomainGrid& grid, double eps,
                              FaceRule rule) {
  if (!(eps > 0.0)) throw ConfigError("sample_faces: eps must be positive");
  std::vector<int> n(grid.dim());
  for (int j = 0; j < grid.dim(); ++j) n[j] = grid.nodes(j);
  return sample_faces_impl(field, n, grid.h, grid.origin, 1.0 / eps, rule);
}

ValidationReport validate_field(const CoefficientField& field, int samples) {
  if (samples < 1) throw ContractViolation("validate_field: samples must be at least 1");
  const int d = field.dim();
  static constexpr unsigned bases[3] = {2, 3, 5};
  ValidationReport rep;
  rep.samples = samples;
  rep.gamma_found = std::numeric_limits<double>::infinity();
  std::vector<double> y(d), z(d), a(d * d), b(d * d);
  auto fail = [&](const std::string& what, std::span<const double> pt) {
    throw ValidationError(what + " at y = " + format_point(pt));
  };
  auto close = [](double u, double v) { return std::abs(u - v) <= 1e-12 * std::max(1.0, std::abs(u)); };
  for (int s = 0; s < samples; ++s) {
    for (int j = 0; j < d; ++j) y[j] = -pi + 2.0 * pi * radical_inverse(s + 1, bases[j]);
    field.evaluate(y, a);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        if (a[i * d + j] != a[j * d + i]) fail("symmetry violated", y);
    for (int j = 0; j < d; ++j) {
      z = y;
      z[j] += 2.0 * pi;
      field.evaluate(z, b);
      for (int k = 0; k < d * d; ++k)
        if (!close(a[k], b[k])) fail("periodicity violated", y);
    }
    RealMatrix m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = a[i * d + j];
    const double lmin = jacobi_eigen(m).values.front();
    rep.gamma_found = std::min(rep.gamma_found, lmin);
    if (lmin < field.gamma() - 1e-12) fail("ellipticity bound violated", y);
    if (field.symmetry().even_in_each_axis) {
      for (int r = 0; r < d; ++r) {
        z = y;
        z[r] = -z[r];
        field.evaluate(z, b);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            const double sign = ((i == r) != (j == r)) ? -1.0 : 1.0;
            if (!close(a[i * d + j], sign * b[i * d + j])) fail("even symmetry violated", y);
          }
      }
    }
    if (field.symmetry().axis_exchange && d >= 2) {
      z = y;
      std::swap(z[0], z[1]);
      field.evaluate(z, b);
      auto p = [](int i) { return i == 0 ? 1 : (i == 1 ? 0 : i); };
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          if (!close(a[i * d + j], b[p(i) * d + p(j)])) fail("axis exchange symmetry violated", y);
    }
  }
  return rep;
}

void write_field_csv(std::ostream& out, const CoefficientField& field, const CellGrid& grid) {
  if (grid.dim() != 2 || field.dim() != 2)
    throw ConfigError("field CSV export is two-dimensional only");
  out << "y1,y2,a11,a12,a22\n" << std::setprecision(17);
  std::array<double, 2> y{};
  std::array<double, 4> a{};
  for (int i2 = 0; i2 < grid.n[1]; ++i2)
    for (int i1 = 0; i1 < grid.n[0]; ++i1) {
      y = {grid.coordinate(0, i1), grid.coordinate(1, i2)};
      field.evaluate(y, a);
      out << y[0] << ',' << y[1] << ',' << a[0] << ',' << a[1] << ',' << a[3] << '\n';
    }
}

}  // namespace effwave
