#pragma once

// Samplers for the Gaussian limit objects and their closed-form covariances.
//
// All paths live on a uniform grid of [0,1] with m cells (m a power of two,
// default 4096).  One underlying triple (W1, W2', W2'') plus an independent
// arc offset u generates every derived object, so joint laws are preserved:
//
//   Br1(f)      = W1(f) - f W1(1)
//   Wt1(t)      = [(1-f_c) W1(f_c t) - f_c * (sum of W1 increments over a
//                  rotated arc of the cells above f_c)] / sqrt(f_c(1-f_c)),
//                 a standard Brownian motion when f_c > 0 (zero otherwise)
//   W2          = (f_c sd(I+) W2' + sd(I-) W3') / sigma2,
//                 W3' = rho W2' + sqrt(1-rho^2) W2''
//   Y(t)        = sigma_tilde1 Wt1(t) + sigma2 W2(t)
//   X(f)        = sqrt(E I+) Br1(f) + f sd(I+) W2'(1) + sd(I-) W3'(1)
//
// The joint sample exposes the pair (T(X)/E I+, Psi(Y)/E I+) with
// T(x)(f) = x(f) + (f_c-f)/(1-f_c) x(1), which collapses to
// sqrt(E I+) Br1(f) + (1-F)(f) sigma2 W2(1).
//
// Grid conventions: evaluation points are snapped to the nearest grid index,
// the arc offset is snapped to whole cells of the region above f_c (so arc
// membership is cell-exact and never touches cells below f_c), and Psi over
// grid values underestimates the continuous functional by O(m^{-1/2}); the
// statistical tolerances downstream budget for both effects.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fitpop/increments.hpp"
#include "fitpop/noise.hpp"
#include "fitpop/walkrep.hpp"

namespace fitpop {

struct PathGrid {
  std::int64_t m = 0;          // cell count
  std::vector<double> values;  // m+1 points; values[0] = 0 for Brownian paths

  double at_fraction(double t) const {
    auto idx = static_cast<std::size_t>(
        std::llround(t * static_cast<double>(m)));
    if (idx >= values.size()) idx = values.size() - 1;
    return values[idx];
  }
};

namespace detail {
inline void check_grid_size(std::int64_t m) {
  if (m < 2 || (m & (m - 1)) != 0)
    throw std::invalid_argument("path grid: m must be a power of two >= 2");
}
}  // namespace detail

// Standard Brownian motion: cumulative sums of m independent N(0, 1/m)
// increments (Box-Muller normals from the stream).
inline PathGrid sample_bm(std::int64_t m, NoiseStream& stream) {
  detail::check_grid_size(m);
  PathGrid path;
  path.m = m;
  path.values.resize(static_cast<std::size_t>(m) + 1);
  path.values[0] = 0.0;
  const double sd = std::sqrt(1.0 / static_cast<double>(m));
  for (std::size_t k = 1; k < path.values.size(); ++k)
    path.values[k] = path.values[k - 1] + sd * stream.next_normal();
  return path;
}

// Brownian bridge associated with a Brownian path: Br(t) = W(t) - t W(1).
inline PathGrid bridge(const PathGrid& bm) {
  PathGrid out;
  out.m = bm.m;
  out.values.resize(bm.values.size());
  const double terminal = bm.values.back();
  const double inv_m = 1.0 / static_cast<double>(bm.m);
  for (std::size_t k = 0; k < bm.values.size(); ++k)
    out.values[k] = bm.values[k] -
                    static_cast<double>(k) * inv_m * terminal;
  return out;
}

// Brownian motion rebuilt from W1: the history below f_c plus increments
// over a uniformly rotated, wrap-around arc of the cells above f_c.  The
// two ingredients use disjoint cell ranges, so they stay independent; each
// rotation covers every upper cell with equal probability, which is what
// makes the construction another standard Brownian motion.  Returns the
// zero path when f_c = 0.
inline PathGrid tilde_w1(const PathGrid& w1, double u, const LimitParams& p) {
  if (!(u >= 0.0 && u < 1.0))
    throw std::invalid_argument("tilde_w1: u outside [0,1)");
  PathGrid out;
  out.m = w1.m;
  out.values.assign(w1.values.size(), 0.0);
  if (p.f_c <= 0.0) return out;

  const std::int64_t m = w1.m;
  std::int64_t k_c = std::llround(p.f_c * static_cast<double>(m));
  k_c = std::clamp<std::int64_t>(k_c, 1, m - 1);
  const std::int64_t upper = m - k_c;  // cells strictly above f_c
  auto u_idx = static_cast<std::int64_t>(u * static_cast<double>(upper));
  if (u_idx >= upper) u_idx = upper - 1;

  const double norm = 1.0 / std::sqrt(p.f_c * (1.0 - p.f_c));
  const auto& w = w1.values;
  for (std::int64_t j = 1; j <= m; ++j) {
    // History term W1(f_c t) at the nearest grid point.
    const auto hist =
        static_cast<std::size_t>(std::llround(p.f_c * static_cast<double>(j)));
    // Arc of round(t * upper) whole cells starting at the rotated offset,
    // wrapping inside the upper region: one or two contiguous ranges.
    const std::int64_t len = std::llround(static_cast<double>(j) *
                                          static_cast<double>(upper) /
                                          static_cast<double>(m));
    double arc = 0.0;
    const std::int64_t first = k_c + u_idx;
    const std::int64_t straight = std::min(len, m - first);
    arc += w[static_cast<std::size_t>(first + straight)] -
           w[static_cast<std::size_t>(first)];
    if (len > straight)  // wrapped part restarts at f_c
      arc += w[static_cast<std::size_t>(k_c + (len - straight))] -
             w[static_cast<std::size_t>(k_c)];
    out.values[static_cast<std::size_t>(j)] =
        norm * ((1.0 - p.f_c) * w[hist] - p.f_c * arc);
  }
  return out;
}

// The second driving motion: W2 = (f_c sd(I+) W2' + sd(I-) W3') / sigma2,
// W3' = rho W2' + sqrt(1-rho^2) W2''.  When f_c = 0 it is W2' itself.
inline PathGrid compose_w2(const PathGrid& w2p, const PathGrid& w2pp,
                           const LimitParams& p) {
  if (w2p.m != w2pp.m)
    throw std::invalid_argument("compose_w2: mismatched grids");
  if (p.f_c <= 0.0) return w2p;
  if (!(p.sigma2 > 0.0))
    throw std::logic_error("compose_w2: sigma2 = 0 with f_c > 0");
  const double root = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
  PathGrid out;
  out.m = w2p.m;
  out.values.resize(w2p.values.size());
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    const double w3 = p.rho * w2p.values[k] + root * w2pp.values[k];
    out.values[k] =
        (p.f_c * p.sigma_plus * w2p.values[k] + p.sigma_minus * w3) / p.sigma2;
  }
  return out;
}

// One draw of the joint limit pair, with the underlying paths retained for
// diagnostics.  All coordinates are built from the same (W1, W2', W2'', u).
struct JointLimitSample {
  std::vector<double> f_grid;
  std::vector<double> first;   // T(X)/E(I+) on f_grid
  double second = 0.0;         // Psi(Y)/E(I+), always >= 0
  std::vector<double> x_inf;   // X on f_grid (same draws)
  double x_inf_1 = 0.0;        // X at f = 1
  double u = 0.0;              // arc offset
  PathGrid w1, w2p, w2pp, wt1, w2, y;
};

inline JointLimitSample sample_joint_limit(const LimitParams& p,
                                           std::span<const double> f_grid,
                                           std::int64_t m,
                                           NoiseStream& stream) {
  for (double f : f_grid)
    if (f < 0.0 || f > 1.0)
      throw std::domain_error("sample_joint_limit: f outside [0,1]");
  JointLimitSample s;
  s.f_grid.assign(f_grid.begin(), f_grid.end());
  s.w1 = sample_bm(m, stream);
  s.w2p = sample_bm(m, stream);
  s.w2pp = sample_bm(m, stream);
  s.u = stream.next_uniform();
  s.wt1 = tilde_w1(s.w1, s.u, p);
  s.w2 = compose_w2(s.w2p, s.w2pp, p);

  s.y.m = m;
  s.y.values.resize(s.w2.values.size());
  for (std::size_t k = 0; k < s.y.values.size(); ++k)
    s.y.values[k] =
        p.sigma_tilde1 * s.wt1.values[k] + p.sigma2 * s.w2.values[k];
  s.second = psi(std::span<const double>(s.y.values)) / p.e_plus;

  const double root = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
  const double w2p_1 = s.w2p.values.back();
  const double w3_1 = p.rho * w2p_1 + root * s.w2pp.values.back();
  const double w2_1 = s.w2.values.back();
  const double w1_1 = s.w1.values.back();
  const double sqrt_eplus = std::sqrt(p.e_plus);

  auto snap = [&](double f) {
    return static_cast<double>(std::llround(f * static_cast<double>(m))) /
           static_cast<double>(m);
  };
  auto x_at = [&](double f) {
    const double fs = snap(f);
    const double br = s.w1.at_fraction(fs) - fs * w1_1;
    return sqrt_eplus * br + fs * p.sigma_plus * w2p_1 +
           p.sigma_minus * w3_1;
  };
  s.x_inf_1 = x_at(1.0);
  for (double f : f_grid) {
    const double fs = snap(f);
    const double br = s.w1.at_fraction(fs) - fs * w1_1;
    const double tail = 1.0 - uniform_tail_cdf(fs, p.f_c);
    s.first.push_back((sqrt_eplus * br + tail * p.sigma2 * w2_1) / p.e_plus);
    s.x_inf.push_back(x_at(f));
  }
  return s;
}

// Closed-form covariances of the limit objects; f, fp in [0,1], s, t in
// [0,1].  Arguments of cov_xx may come in either order.
inline double cov_xx(const LimitParams& p, double f, double fp) {
  if (f < 0.0 || f > 1.0 || fp < 0.0 || fp > 1.0)
    throw std::domain_error("cov_xx: arguments outside [0,1]");
  const double a = std::min(f, fp);
  const double b = std::max(f, fp);
  const double e_minus = p.f_c * p.e_plus;
  return a * (1.0 - b) * p.e_plus + a * b * p.sigma_plus * p.sigma_plus +
         p.sigma_minus * p.sigma_minus + (a + b) * p.e_plus * e_minus;
}

inline double cov_yy(const LimitParams& p, double s, double t) {
  if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0)
    throw std::domain_error("cov_yy: arguments outside [0,1]");
  return std::min(s, t) * cov_xx(p, p.f_c, p.f_c);
}

inline double cov_xy(const LimitParams& p, double f, double t) {
  if (t < 0.0 || t > 1.0)
    throw std::domain_error("cov_xy: t outside [0,1]");
  return t * cov_xx(p, f, p.f_c);
}

}  // namespace fitpop
