#pragma once

// Increment laws for the population-size walk, their moments, and the scalar
// constants of the scaling limits.
//
// A law is either a finite table of integer values with probabilities, or a
// heavy-tail mixture: with weight w the step is a positive integer K with
// P(K = k) proportional to k^(-alpha) (alpha in (1, 2], so E K = infinity),
// and with weight 1 - w the step is -b.  The critical fitness threshold is
// f_c = E(I-) / E(I+); heavy-tail laws have f_c = 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fitpop/noise.hpp"

namespace fitpop {

enum class LawKind { finite_table, heavy_tail };

namespace detail {

// Hurwitz zeta(s, q) = sum_{k>=0} (q+k)^(-s) by Euler-Maclaurin.
// Accurate to ~1e-15 for s in (1, 3], q >= 1.
inline double hurwitz_zeta(double s, double q) {
  constexpr int kDirect = 16;
  double sum = 0.0;
  for (int k = 0; k < kDirect; ++k) sum += std::pow(q + k, -s);
  const double a = q + kDirect;
  const double ainv = 1.0 / a;
  const double as = std::pow(a, -s);
  sum += as * a / (s - 1.0);  // integral tail
  sum += 0.5 * as;
  // Bernoulli corrections B2/2!, B4/4!, B6/6!.
  double deriv = s * as * ainv;
  sum += deriv / 12.0;
  deriv *= (s + 1.0) * (s + 2.0) * ainv * ainv;
  sum -= deriv / 720.0;
  deriv *= (s + 3.0) * (s + 4.0) * ainv * ainv;
  sum += deriv / 30240.0;
  return sum;
}

}  // namespace detail

class IncrementLaw {
 public:
  struct Entry {
    std::int64_t value;
    double prob;
  };

  // Finite table; duplicate values are merged, probabilities must sum to 1
  // within 1e-12 (then renormalized), and some strictly positive value must
  // carry positive probability.
  static IncrementLaw finite_table(
      const std::vector<std::pair<std::int64_t, double>>& entries) {
    if (entries.empty())
      throw std::invalid_argument("increment law: empty table");
    std::map<std::int64_t, double> merged;
    for (const auto& [v, p] : entries) {
      if (!(p > 0.0) || p > 1.0 + 1e-12)
        throw std::invalid_argument("increment law: probability outside (0,1]");
      merged[v] += p;
    }
    double sum = 0.0;
    for (const auto& [v, p] : merged) sum += p;
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument(
          "increment law: probabilities sum to " + std::to_string(sum) +
          ", expected 1");
    bool has_positive = false;
    IncrementLaw law;
    law.kind_ = LawKind::finite_table;
    for (const auto& [v, p] : merged) {
      law.entries_.push_back({v, p / sum});
      if (v > 0) has_positive = true;
    }
    if (!has_positive)
      throw std::invalid_argument("increment law: no positive value");
    law.build_cdf();
    return law;
  }

  // Heavy-tail mixture.  alpha in (1, 2], w in (0, 1], b >= 1.
  static IncrementLaw heavy_tail(double alpha, double w, std::int64_t b) {
    if (!(alpha > 1.0) || alpha > 2.0)
      throw std::invalid_argument("increment law: alpha outside (1,2]");
    if (!(w > 0.0) || w > 1.0)
      throw std::invalid_argument("increment law: weight outside (0,1]");
    if (b < 1)
      throw std::invalid_argument("increment law: negative value must be >= 1");
    IncrementLaw law;
    law.kind_ = LawKind::heavy_tail;
    law.alpha_ = alpha;
    law.w_ = w;
    law.b_ = b;
    law.zeta_ = detail::hurwitz_zeta(alpha, 1.0);
    // Exact cumulative prefix of the normalized zeta weights; draws landing
    // beyond it are inverted analytically (see sample()).
    law.zeta_cdf_.resize(kZetaPrefix);
    double acc = 0.0;
    for (std::int64_t k = 1; k <= kZetaPrefix; ++k) {
      acc += std::pow(static_cast<double>(k), -alpha) / law.zeta_;
      law.zeta_cdf_[static_cast<std::size_t>(k - 1)] = acc;
    }
    return law;
  }

  LawKind kind() const noexcept { return kind_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  double alpha() const noexcept { return alpha_; }
  double positive_weight() const noexcept { return w_; }
  std::int64_t negative_value() const noexcept { return b_; }

  // One draw, advancing the stream.  Finite tables invert the CDF over the
  // sorted support; the heavy tail inverts the normalized zeta weights
  // (exact prefix, then Hurwitz-zeta tail inversion -- no truncation).
  std::int64_t sample(NoiseStream& stream) const {
    const double u = stream.next_uniform();
    if (kind_ == LawKind::finite_table) {
      auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      std::size_t idx = static_cast<std::size_t>(it - cdf_.begin());
      if (idx >= entries_.size()) idx = entries_.size() - 1;
      return entries_[idx].value;
    }
    if (u >= w_) return -b_;
    const double v = u / w_;
    if (v < zeta_cdf_.back()) {
      auto it = std::upper_bound(zeta_cdf_.begin(), zeta_cdf_.end(), v);
      return (it - zeta_cdf_.begin()) + 1;
    }
    return invert_zeta_tail(v);
  }

 private:
  static constexpr std::int64_t kZetaPrefix = 4096;

  void build_cdf() {
    cdf_.resize(entries_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      acc += entries_[i].prob;
      cdf_[i] = acc;
    }
    cdf_.back() = 1.0;
  }

  // Normalized upper tail T(k) = P(K > k) of the zeta weights.
  double zeta_tail(std::int64_t k) const {
    return detail::hurwitz_zeta(alpha_, static_cast<double>(k + 1)) / zeta_;
  }

  // Smallest k with P(K <= k) > v, for v beyond the cached prefix.
  std::int64_t invert_zeta_tail(double v) const {
    const double tail = 1.0 - v;  // want smallest k with T(k) < tail
    // Continuous guess from T(k) ~ k^(1-alpha) / ((alpha-1) zeta).
    double guess = std::pow(tail * (alpha_ - 1.0) * zeta_, 1.0 / (1.0 - alpha_));
    if (!(guess < 9.0e17)) guess = 9.0e17;  // keep the cast in int64 range
    std::int64_t hi = std::max<std::int64_t>(kZetaPrefix + 1,
                                             static_cast<std::int64_t>(guess));
    std::int64_t lo = kZetaPrefix;  // T(lo) >= tail already holds here
    while (zeta_tail(hi) >= tail) {
      lo = hi;
      if (hi > (std::int64_t{1} << 60)) break;  // u ~ 1 pathological
      hi *= 2;
    }
    while (hi - lo > 1) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      if (zeta_tail(mid) >= tail)
        lo = mid;
      else
        hi = mid;
    }
    return hi;
  }

  LawKind kind_ = LawKind::finite_table;
  std::vector<Entry> entries_;
  std::vector<double> cdf_;
  double alpha_ = 0.0;
  double w_ = 0.0;
  std::int64_t b_ = 0;
  double zeta_ = 0.0;
  std::vector<double> zeta_cdf_;
};

// First and second moments of the positive and negative parts.  Heavy-tail
// laws report e_plus, e_plus2 and var_plus as +infinity.
struct MomentSet {
  double e_plus = 0.0;
  double e_minus = 0.0;
  double e_plus2 = 0.0;
  double e_minus2 = 0.0;
  double var_plus = 0.0;
  double var_minus = 0.0;

  bool e_plus_finite() const noexcept { return std::isfinite(e_plus); }
  // Drift condition E(I-) < E(I+); laws violating it remain usable for raw
  // simulation but are rejected by every limit-theorem operation.
  bool drift_ok() const noexcept { return e_minus < e_plus; }
  // f_c = E(I-)/E(I+), which is 0 when E(I+) = infinity.
  double critical_threshold() const noexcept {
    return e_plus_finite() ? e_minus / e_plus : 0.0;
  }
};

inline MomentSet moments(const IncrementLaw& law) {
  MomentSet m;
  if (law.kind() == LawKind::heavy_tail) {
    const double inf = std::numeric_limits<double>::infinity();
    m.e_plus = m.e_plus2 = m.var_plus = inf;
    const double q = 1.0 - law.positive_weight();
    const double b = static_cast<double>(law.negative_value());
    m.e_minus = b * q;
    m.e_minus2 = b * b * q;
    m.var_minus = m.e_minus2 - m.e_minus * m.e_minus;
    return m;
  }
  for (const auto& e : law.entries()) {
    const double v = static_cast<double>(e.value);
    if (e.value > 0) {
      m.e_plus += v * e.prob;
      m.e_plus2 += v * v * e.prob;
    } else if (e.value < 0) {
      m.e_minus += -v * e.prob;
      m.e_minus2 += v * v * e.prob;
    }
  }
  m.var_plus = std::max(0.0, m.e_plus2 - m.e_plus * m.e_plus);
  m.var_minus = std::max(0.0, m.e_minus2 - m.e_minus * m.e_minus);
  return m;
}

// Scalar constants of the functional limit:
//   f_c          critical threshold E(I-)/E(I+)
//   sigma_tilde1 sqrt(f_c (1-f_c) E(I+))
//   sigma2       sd(f_c I+ - I-)
//   rho          E(I+)E(I-) / (sd(I+) sd(I-)), 0 when E(I-) = 0
// sigma_plus / sigma_minus are carried because the limit samplers combine
// the two driving motions with those weights.
struct LimitParams {
  double f_c = 0.0;
  double e_plus = 0.0;
  double e_minus = 0.0;
  double sigma_tilde1 = 0.0;
  double sigma2 = 0.0;
  double rho = 0.0;
  double sigma_plus = 0.0;
  double sigma_minus = 0.0;
};

inline LimitParams limit_params(const MomentSet& m) {
  if (!m.e_plus_finite())
    throw std::domain_error("limit_params: E(I+) must be finite");
  if (!m.drift_ok())
    throw std::domain_error("limit_params: requires E(I-) < E(I+)");
  LimitParams p;
  p.e_plus = m.e_plus;
  p.e_minus = m.e_minus;
  p.f_c = m.e_minus / m.e_plus;
  p.sigma_plus = std::sqrt(m.var_plus);
  p.sigma_minus = std::sqrt(m.var_minus);
  p.sigma_tilde1 = std::sqrt(p.f_c * (1.0 - p.f_c) * m.e_plus);
  const double s2sq = p.f_c * p.f_c * m.var_plus +
                      2.0 * p.f_c * m.e_plus * m.e_minus + m.var_minus;
  p.sigma2 = std::sqrt(std::max(0.0, s2sq));
  if (m.e_minus > 0.0) {
    const double denom = p.sigma_plus * p.sigma_minus;
    if (!(denom > 0.0))
      throw std::logic_error("limit_params: sd(I+) sd(I-) = 0 with E(I-) > 0");
    p.rho = m.e_plus * m.e_minus / denom;
    // sd(I+) sd(I-) >= E(I+) E(I-) holds for any law with I+ I- = 0; snap
    // the last-ulp excess so two-point laws give rho exactly 1.
    if (p.rho > 1.0 - 1e-12) p.rho = 1.0;
  }
  return p;
}

// Distribution function of the uniform law on [f_c, 1]: the limit of the
// empirical fitness distribution.
inline double uniform_tail_cdf(double f, double f_c) {
  const double num = std::min(f, 1.0) - f_c;
  if (num <= 0.0) return 0.0;
  return std::min(1.0, num / (1.0 - f_c));
}

// Which bracket feeds the marginal standard deviation g(f): the centered
// form uses sigma2^2 (variances), the raw form uses the plain second
// moments and exceeds it by 2 f_c^2 E(I+)^2.  The raw form is kept only so
// experiments can discriminate the two against simulation.
enum class MarginalForm { centered, raw };

inline double marginal_std(const LimitParams& p, double f,
                           MarginalForm form = MarginalForm::centered) {
  if (f < p.f_c - 1e-12 || f > 1.0 + 1e-12)
    throw std::domain_error("marginal_std: f outside [f_c, 1]");
  f = std::clamp(f, p.f_c, 1.0);
  double bracket = p.sigma2 * p.sigma2;
  if (form == MarginalForm::raw)
    bracket += 2.0 * p.f_c * p.f_c * p.e_plus * p.e_plus;
  const double rel = (p.f_c < 1.0) ? (1.0 - f) / (1.0 - p.f_c) : 0.0;
  const double g2 = f * (1.0 - f) * p.e_plus + rel * rel * bracket;
  return std::sqrt(std::max(0.0, g2)) / p.e_plus;
}

inline std::int64_t sample_increment(const IncrementLaw& law,
                                     NoiseStream& stream) {
  return law.sample(stream);
}

}  // namespace fitpop
