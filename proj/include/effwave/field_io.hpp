#pragma once

#include <iosfwd>
#include <string>

#include "effwave/pde_solvers.hpp"

namespace effwave {

/// Compact little-endian snapshot: magic "EWSNAP1", grid description, time
/// stamp, then both time levels as doubles.
void write_state_binary(std::ostream& out, const WaveState& s);
WaveState read_state_binary(std::istream& in);

/// CSV with columns x1,...,xn,u (current time level only).
void write_state_csv(std::ostream& out, const WaveState& s);

void save_state(const std::string& path, const WaveState& s, bool csv);
WaveState load_state(const std::string& path);

}  // namespace effwave
