#pragma once

// Estimators and goodness-of-fit machinery: exact Kolmogorov-Smirnov
// distances against analytic CDFs or between two samples, normal and
// half-normal CDFs, and moment/covariance estimators with standard errors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fitpop {

// sup_x |F_hat(x) - cdf(x)| for a nondecreasing cdf: both one-sided gaps are
// checked at every sorted sample point.
template <class Cdf>
double ks_statistic(std::vector<double> samples, Cdf&& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double best = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double c = cdf(samples[i]);
    best = std::max(best, static_cast<double>(i + 1) / n - c);
    best = std::max(best, c - static_cast<double>(i) / n);
  }
  return best;
}

// Two-sample KS distance sup_x |F_a(x) - F_b(x)|.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double best = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    // advance both ECDFs past the next distinct value so ties jump together
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na -
                                   static_cast<double>(j) / nb));
  }
  return best;
}

// Phi(x / sigma), via the standard library erfc (absolute error well below
// 1e-10 over the whole line).
inline double normal_cdf(double x, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("normal_cdf: sigma <= 0");
  return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0)));
}

// CDF of |Z| for Z ~ N(0, sigma^2): erf(x / (sigma sqrt(2))) for x >= 0.
inline double half_normal_cdf(double x, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("half_normal_cdf: sigma <= 0");
  if (x < 0.0) return 0.0;
  return std::erf(x / (sigma * std::sqrt(2.0)));
}

struct McEstimate {
  double mean = 0.0;
  double var = 0.0;      // unbiased
  double se_mean = 0.0;
  double se_var = 0.0;   // fourth-moment formula
  std::size_t n = 0;
};

inline McEstimate mc_estimate(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("mc_estimate: need at least 2 samples");
  McEstimate e;
  e.n = n;
  for (double v : samples) e.mean += v;
  e.mean /= static_cast<double>(n);
  double m2 = 0.0, m4 = 0.0;
  for (double v : samples) {
    const double d = v - e.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double dn = static_cast<double>(n);
  e.var = m2 / (dn - 1.0);
  m2 /= dn;
  m4 /= dn;
  e.se_mean = std::sqrt(e.var / dn);
  // Var(s^2) = (mu4 - (n-3)/(n-1) sigma^4) / n with sample plug-ins.
  const double v4 = m4 - (dn - 3.0) / (dn - 1.0) * m2 * m2;
  e.se_var = std::sqrt(std::max(0.0, v4 / dn));
  return e;
}

struct CovEstimate {
  double cov = 0.0;      // unbiased
  double corr = 0.0;
  double se_cov = 0.0;   // sd of centered products / sqrt(n)
  double se_corr = 0.0;
  std::size_t n = 0;
};

inline CovEstimate cov_estimate(std::span<const double> x,
                                std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size())
    throw std::invalid_argument("cov_estimate: length mismatch");
  if (n < 2) throw std::invalid_argument("cov_estimate: need at least 2 pairs");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  const double dn = static_cast<double>(n);
  mx /= dn;
  my /= dn;
  double sxx = 0.0, syy = 0.0, sxy = 0.0, sp2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
    sp2 += dx * dy * dx * dy;
  }
  CovEstimate e;
  e.n = n;
  e.cov = sxy / (dn - 1.0);
  const double mean_p = sxy / dn;
  const double var_p = std::max(0.0, sp2 / dn - mean_p * mean_p);
  e.se_cov = std::sqrt(var_p / dn);
  const double denom = std::sqrt(sxx * syy);
  e.corr = denom > 0.0 ? sxy / denom : 0.0;
  e.se_corr = n > 3 ? (1.0 - e.corr * e.corr) / std::sqrt(dn - 3.0) : 1.0;
  return e;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace fitpop
