#pragma once

// Random-walk representation of the level processes.
//
// For each fitness level f the walk S(f) sums, per step, the number of
// newborn members with fitness <= f minus the negative part of the
// increment; M(f) is its running minimum.  The level count of the ecosystem
// satisfies L_n(f) = S_n(f) - M_n(f) exactly when both consume the same
// (increment, uniform-block) sequence, which makes the walk the integer
// oracle for the ecosystem.  At the critical threshold the rescaled walk
// t -> S_{floor(nt)}(f_c)/sqrt(n) is the finite-n counterpart of the second
// limit coordinate, reached through the functional Psi(x) = x(1) - inf x.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fitpop/increments.hpp"
#include "fitpop/noise.hpp"

namespace fitpop {

struct WalkTrace {
  std::vector<double> f_grid;                   // ascending levels in [0,1]
  std::vector<std::vector<std::int64_t>> s;     // s[g][k], k = 0..steps
  std::vector<std::vector<std::int64_t>> min_s; // running minima
  std::int64_t steps = 0;

  std::size_t grid_index(double f) const {
    for (std::size_t g = 0; g < f_grid.size(); ++g)
      if (std::abs(f_grid[g] - f) <= 1e-12) return g;
    throw std::domain_error("walk trace: f not on grid");
  }
};

// Walk S_k(f) and running minimum M_k(f) for every grid level, driven by the
// same increments and uniform blocks an ecosystem would consume from this
// stream.  Counts are kept as 64-bit integers; nothing is rescaled here.
inline WalkTrace walk_trace(const IncrementLaw& law, std::int64_t n,
                            std::vector<double> f_grid, NoiseStream& stream) {
  if (n < 0) throw std::invalid_argument("walk_trace: n < 0");
  for (std::size_t g = 0; g + 1 < f_grid.size(); ++g)
    if (!(f_grid[g] < f_grid[g + 1]))
      throw std::invalid_argument("walk_trace: grid not ascending");
  for (double f : f_grid)
    if (f < 0.0 || f > 1.0)
      throw std::invalid_argument("walk_trace: grid point outside [0,1]");

  const std::size_t g_count = f_grid.size();
  WalkTrace trace;
  trace.f_grid = std::move(f_grid);
  trace.steps = n;
  trace.s.assign(g_count, std::vector<std::int64_t>(
                              static_cast<std::size_t>(n) + 1, 0));
  trace.min_s = trace.s;

  std::vector<std::int64_t> cell(g_count + 1, 0);
  for (std::int64_t k = 1; k <= n; ++k) {
    const std::int64_t inc = sample_increment(law, stream);
    std::fill(cell.begin(), cell.end(), 0);
    if (inc > 0) {
      for (std::int64_t j = 0; j < inc; ++j) {
        const double u = stream.next_uniform();
        // u counts toward every grid level >= u.
        const auto it = std::lower_bound(trace.f_grid.begin(),
                                         trace.f_grid.end(), u);
        ++cell[static_cast<std::size_t>(it - trace.f_grid.begin())];
      }
    }
    const std::int64_t neg = inc < 0 ? -inc : 0;
    std::int64_t births_leq = 0;
    const auto kk = static_cast<std::size_t>(k);
    for (std::size_t g = 0; g < g_count; ++g) {
      births_leq += cell[g];
      trace.s[g][kk] = trace.s[g][kk - 1] + births_leq - neg;
      trace.min_s[g][kk] = std::min(trace.min_s[g][kk - 1], trace.s[g][kk]);
    }
  }
  return trace;
}

// L_k(f) recovered from the walk: S_k(f) - M_k(f).
inline std::int64_t reflected_level(const WalkTrace& trace, std::int64_t k,
                                    double f) {
  if (k < 0 || k > trace.steps)
    throw std::domain_error("reflected_level: step out of range");
  const std::size_t g = trace.grid_index(f);
  const auto kk = static_cast<std::size_t>(k);
  return trace.s[g][kk] - trace.min_s[g][kk];
}

// Path on a uniform grid of [0,1] together with the applied scale factor.
struct ScaledPath {
  std::vector<double> values;  // n+1 points, values[0] = 0
  double scale = 1.0;
};

// The rescaled critical-level walk t -> S_{floor(nt)}(f_c) / sqrt(n).  The
// walk is already centered: its step mean is f_c E(I+) - E(I-) = 0.
inline ScaledPath y_path(const WalkTrace& trace, double f_c) {
  const std::size_t g = trace.grid_index(f_c);
  ScaledPath path;
  path.scale = trace.steps > 0
                   ? 1.0 / std::sqrt(static_cast<double>(trace.steps))
                   : 1.0;
  path.values.resize(trace.s[g].size());
  for (std::size_t k = 0; k < path.values.size(); ++k)
    path.values[k] = static_cast<double>(trace.s[g][k]) * path.scale;
  return path;
}

// Psi(x) = x(1) - inf_t x(t), evaluated over the stored grid values.
inline double psi(std::span<const double> path) {
  if (path.empty()) throw std::invalid_argument("psi: empty path");
  const double lo = *std::min_element(path.begin(), path.end());
  return path.back() - lo;
}

inline double psi(const ScaledPath& path) { return psi(std::span<const double>(path.values)); }

}  // namespace fitpop
