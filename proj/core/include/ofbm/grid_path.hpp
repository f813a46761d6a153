#pragma once

#include <cstdint>
#include <vector>

#include "ofbm/error.hpp"

namespace ofbm {

// One sampled path on a fixed time grid; values are row-major [grid point][component].
// Grids handed to samplers are increasing, start at 0, and stay in [0, 1]; the value
// at t = 0 is identically zero.
struct GridPath {
  std::vector<double> grid;
  int d = 0;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;

  double value(int ti, int comp) const { return values[size_t(ti) * d + comp]; }
  double& value(int ti, int comp) { return values[size_t(ti) * d + comp]; }
  int points() const { return static_cast<int>(grid.size()); }
};

inline void check_sampling_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidInputError("sampling grid must be nonempty");
  if (grid.front() != 0.0) throw InvalidInputError("sampling grid must start at 0");
  for (size_t k = 0; k + 1 < grid.size(); ++k)
    if (!(grid[k] < grid[k + 1])) throw InvalidInputError("sampling grid must be increasing");
  if (grid.back() > 1.0) throw InvalidInputError("sampling grid must stay within [0, 1]");
}

}  // namespace ofbm
