#include "effwave/field_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

#include "effwave/errors.hpp"

namespace effwave {

namespace {

constexpr char kMagic[8] = {'E', 'W', 'S', 'N', 'A', 'P', '1', '\0'};

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("snapshot file is truncated");
  return v;
}

}  // namespace

void write_state_binary(std::ostream& out, const WaveState& s) {
  const DomainGrid& g = s.grid;
  out.write(kMagic, sizeof kMagic);
  put<std::int32_t>(out, g.dim());
  for (int j = 0; j < g.dim(); ++j) {
    put<double>(out, g.length[j]);
    put<double>(out, g.h[j]);
    put<double>(out, g.origin[j]);
    put<std::int32_t>(out, static_cast<std::int32_t>(g.boundary[j][0]));
    put<std::int32_t>(out, static_cast<std::int32_t>(g.boundary[j][1]));
  }
  put<double>(out, s.time);
  put<double>(out, s.dt);
  put<std::int64_t>(out, s.step);
  put<std::uint64_t>(out, s.now.size());
  out.write(reinterpret_cast<const char*>(s.now.data()), static_cast<std::streamsize>(s.now.size() * sizeof(double)));
  const std::vector<double>& prev = s.prev.size() == s.now.size() ? s.prev : s.now;
  out.write(reinterpret_cast<const char*>(prev.data()), static_cast<std::streamsize>(prev.size() * sizeof(double)));
}

WaveState read_state_binary(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw ConfigError("not a snapshot file");
  const int d = get<std::int32_t>(in);
  if (d < 1 || d > 3) throw ConfigError("snapshot has an invalid dimension");
  std::vector<double> length(d), h(d), origin(d);
  std::vector<std::array<Boundary, 2>> b(d);
  for (int j = 0; j < d; ++j) {
    length[j] = get<double>(in);
    h[j] = get<double>(in);
    origin[j] = get<double>(in);
    for (int side = 0; side < 2; ++side) {
      const int t = get<std::int32_t>(in);
      if (t < 0 || t > 2) throw ConfigError("snapshot has an invalid boundary tag");
      b[j][side] = static_cast<Boundary>(t);
    }
  }
  WaveState s;
  s.grid = DomainGrid(length, h, b);
  s.grid.origin = origin;
  s.time = get<double>(in);
  s.dt = get<double>(in);
  s.step = static_cast<long>(get<std::int64_t>(in));
  const auto n = get<std::uint64_t>(in);
  if (n != s.grid.size()) throw ConfigError("snapshot size does not match its grid");
  s.now.resize(n);
  s.prev.resize(n);
  in.read(reinterpret_cast<char*>(s.now.data()), static_cast<std::streamsize>(n * sizeof(double)));
  in.read(reinterpret_cast<char*>(s.prev.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw ConfigError("snapshot file is truncated");
  return s;
}

void write_state_csv(std::ostream& out, const WaveState& s) {
  const DomainGrid& g = s.grid;
  const int d = g.dim();
  for (int j = 0; j < d; ++j) out << "x" << j + 1 << ",";
  out << "u\n";
  out << std::setprecision(10);
  for (std::size_t f = 0; f < g.size(); ++f) {
    std::size_t rem = f;
    for (int j = 0; j < d; ++j) {
      const int n = g.nodes(j);
      out << g.coordinate(j, static_cast<int>(rem % n)) << ",";
      rem /= n;
    }
    out << s.now[f] << "\n";
  }
}

void save_state(const std::string& path, const WaveState& s, bool csv) {
  std::ofstream out(path, csv ? std::ios::out : std::ios::out | std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  if (csv) write_state_csv(out, s);
  else write_state_binary(out, s);
}

WaveState load_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open snapshot '" + path + "'");
  return read_state_binary(in);
}

}  // namespace effwave
