#pragma once

// Experiment runners shared by the CLI and the test suites: configuration,
// deterministic replica-parallel execution, and report/file emission.
//
// Replica r always draws from derive_stream(seed, r), workers pick replicas
// from an atomic counter, and results land in per-replica slots merged in
// index order -- output bytes are identical for any thread count.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fitpop/ecosystem.hpp"
#include "fitpop/grid_population.hpp"
#include "fitpop/increments.hpp"
#include "fitpop/io.hpp"
#include "fitpop/limitproc.hpp"
#include "fitpop/noise.hpp"
#include "fitpop/stats.hpp"
#include "fitpop/walkrep.hpp"

namespace fitpop {

using nlohmann::json;

// Configuration problems exit with code 2; threshold failures with 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double prob_from_json(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::size_t pos = 0;
    double p = 0.0;
    try {
      p = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw ConfigError("law: bad probability '" + s + "'");
    }
    if (pos != s.size()) throw ConfigError("law: bad probability '" + s + "'");
    return p;
  }
  throw ConfigError("law: probability must be a number or decimal string");
}

inline std::int64_t value_from_key(const std::string& key) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(key, &pos);
  } catch (const std::exception&) {
    throw ConfigError("law: non-integer value '" + key + "'");
  }
  if (pos != key.size())
    throw ConfigError("law: non-integer value '" + key + "'");
  return v;
}

}  // namespace detail

// Law specification: {"table": {"1": 0.6667, "-1": "0.3333"}} or
// {"heavy_tail": {"alpha": 1.5, "w": 0.8, "b": 1}}.
inline IncrementLaw law_from_json(const json& spec) {
  if (!spec.is_object() || spec.size() != 1)
    throw ConfigError("law: expected exactly one of 'table' or 'heavy_tail'");
  try {
    if (spec.contains("table")) {
      const auto& table = spec.at("table");
      if (!table.is_object() || table.empty())
        throw ConfigError("law: 'table' must be a non-empty object");
      std::vector<std::pair<std::int64_t, double>> entries;
      for (auto it = table.begin(); it != table.end(); ++it)
        entries.emplace_back(detail::value_from_key(it.key()),
                             detail::prob_from_json(it.value()));
      return IncrementLaw::finite_table(entries);
    }
    if (spec.contains("heavy_tail")) {
      const auto& ht = spec.at("heavy_tail");
      return IncrementLaw::heavy_tail(ht.at("alpha").get<double>(),
                                      ht.at("w").get<double>(),
                                      ht.at("b").get<std::int64_t>());
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("law: ") + e.what());
  }
  throw ConfigError("law: expected 'table' or 'heavy_tail'");
}

struct ExperimentConfig {
  json law_json;
  std::int64_t n = 100000;
  int replicas = 1;
  std::vector<double> f_grid = {0.5, 0.75};
  std::optional<double> f_c_override;
  std::int64_t m = 4096;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  std::string out_dir;
  std::string name = "experiment";

  // Thresholds, preset to the values the verification suite pins.
  double ks_bound = 0.05;
  double se_bound = 4.0;
  double ratio_lo = 2.2;
  double ratio_hi = 4.5;
  double heavy_sup_bound = 0.1;
  double heavy_sup_fraction = 0.9;
  double joint_ks_bound = 0.06;
  double joint_corr_bound = 0.05;
  double mean_bound = 0.05;

  IncrementLaw law() const { return law_from_json(law_json); }
};

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    if (!j.contains("law")) throw ConfigError("config: missing 'law'");
    cfg.law_json = j.at("law");
    law_from_json(cfg.law_json);  // validate now
    if (j.contains("n")) cfg.n = j.at("n").get<std::int64_t>();
    if (j.contains("replicas")) cfg.replicas = j.at("replicas").get<int>();
    if (j.contains("f_grid"))
      cfg.f_grid = j.at("f_grid").get<std::vector<double>>();
    if (j.contains("f_c_override"))
      cfg.f_c_override = j.at("f_c_override").get<double>();
    if (j.contains("m")) cfg.m = j.at("m").get<std::int64_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
    if (j.contains("ks_bound")) cfg.ks_bound = j.at("ks_bound").get<double>();
    if (j.contains("se_bound")) cfg.se_bound = j.at("se_bound").get<double>();
    if (j.contains("ratio_lo")) cfg.ratio_lo = j.at("ratio_lo").get<double>();
    if (j.contains("ratio_hi")) cfg.ratio_hi = j.at("ratio_hi").get<double>();
    if (j.contains("heavy_sup_bound"))
      cfg.heavy_sup_bound = j.at("heavy_sup_bound").get<double>();
    if (j.contains("heavy_sup_fraction"))
      cfg.heavy_sup_fraction = j.at("heavy_sup_fraction").get<double>();
    if (j.contains("joint_ks_bound"))
      cfg.joint_ks_bound = j.at("joint_ks_bound").get<double>();
    if (j.contains("joint_corr_bound"))
      cfg.joint_corr_bound = j.at("joint_corr_bound").get<double>();
    if (j.contains("mean_bound"))
      cfg.mean_bound = j.at("mean_bound").get<double>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.n < 0) throw ConfigError("config: n must be >= 0");
  if (cfg.replicas < 1) throw ConfigError("config: replicas must be >= 1");
  for (double f : cfg.f_grid)
    if (f < 0.0 || f > 1.0) throw ConfigError("config: f_grid outside [0,1]");
  if (cfg.f_c_override && (*cfg.f_c_override < 0.0 || *cfg.f_c_override >= 1.0))
    throw ConfigError("config: f_c_override outside [0,1)");
  if (cfg.m < 2 || (cfg.m & (cfg.m - 1)) != 0)
    throw ConfigError("config: m must be a power of two >= 2");
  return cfg;
}

// Run fn(replica) for replica = 0..count-1 on a small worker pool.  Replica
// work is self-contained; the first exception wins and is rethrown.
template <class Fn>
void parallel_replicas(int count, int threads, Fn&& fn) {
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int r = 0; r < count; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= count) return;
      try {
        fn(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// One verdict line of a report: pass means the statistic satisfied the
// threshold in the direction recorded by the check.
struct CheckResult {
  std::string test;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct CovRow {
  std::string pair;
  double closed_form = 0.0;
  double estimate = 0.0;
  double se = 0.0;
};

struct Report {
  std::string command;
  std::string name;
  std::vector<CheckResult> checks;
  std::vector<CovRow> covariances;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  json to_json() const {
    json tests = json::array();
    for (const auto& c : checks)
      tests.push_back({{"test", c.test},
                       {"statistic", c.statistic},
                       {"threshold", c.threshold},
                       {"pass", c.pass}});
    json j{{"command", command}, {"name", name}, {"tests", tests},
           {"pass", pass()}};
    if (!covariances.empty()) {
      json cov = json::array();
      for (const auto& c : covariances)
        cov.push_back({{"pair", c.pair},
                       {"closed_form", c.closed_form},
                       {"estimate", c.estimate},
                       {"se", c.se}});
      j["covariances"] = cov;
    }
    return j;
  }
};

inline void write_report(const ExperimentConfig& cfg, const Report& report) {
  if (cfg.out_dir.empty()) return;
  const auto path = std::filesystem::path(cfg.out_dir) /
                    (cfg.name + "_" + report.command + "_report.json");
  atomic_write_file(path, report.to_json().dump(2) + "\n");
}

inline void write_csv(const ExperimentConfig& cfg, const std::string& stem,
                      const CsvTable& table) {
  if (cfg.out_dir.empty()) return;
  const auto path =
      std::filesystem::path(cfg.out_dir) / (cfg.name + "_" + stem + ".csv");
  atomic_write_file(path, table.to_string());
}

inline void write_svg(const ExperimentConfig& cfg, const std::string& stem,
                      const std::string& svg) {
  if (cfg.out_dir.empty()) return;
  const auto path =
      std::filesystem::path(cfg.out_dir) / (cfg.name + "_" + stem + ".svg");
  atomic_write_file(path, svg);
}

// ---------------------------------------------------------------------------
// moments: print-oriented summary of a law's constants.

struct MomentsResult {
  MomentSet moments;
  bool clt_regime = false;
  std::optional<LimitParams> params;
  std::vector<std::pair<double, double>> g_values;  // (f, g(f))
};

inline MomentsResult run_moments(const IncrementLaw& law,
                                 std::span<const double> g_grid = {}) {
  MomentsResult r;
  r.moments = moments(law);
  r.clt_regime = r.moments.e_plus_finite() && r.moments.drift_ok();
  if (r.clt_regime) {
    r.params = limit_params(r.moments);
    std::vector<double> grid(g_grid.begin(), g_grid.end());
    if (grid.empty()) {
      for (int i = 0; i <= 8; ++i)
        grid.push_back(r.params->f_c + (1.0 - r.params->f_c) * i / 8.0);
    }
    for (double f : grid)
      if (f >= r.params->f_c - 1e-12 && f <= 1.0 + 1e-12)
        r.g_values.emplace_back(f, marginal_std(*r.params, f));
  }
  return r;
}

// ---------------------------------------------------------------------------
// glivenko: sup deviation per replica at checkpoints n/100, n/10, n.

struct GlivenkoResult {
  Report report;
  std::vector<std::int64_t> checkpoints;
  // sup_dev[replica][checkpoint], x[replica][checkpoint]
  std::vector<std::vector<double>> sup_dev;
  std::vector<std::vector<std::int64_t>> x;
  std::vector<double> medians;
};

inline GlivenkoResult run_glivenko(const ExperimentConfig& cfg) {
  const IncrementLaw law = cfg.law();
  const MomentSet mom = moments(law);
  const bool heavy = !mom.e_plus_finite();
  if (!mom.drift_ok())
    throw ConfigError("glivenko: law must satisfy E(I-) < E(I+)");
  const double f_c =
      cfg.f_c_override ? *cfg.f_c_override : mom.critical_threshold();

  GlivenkoResult res;
  for (std::int64_t c : {cfg.n / 100, cfg.n / 10, cfg.n}) {
    if (!res.checkpoints.empty() && res.checkpoints.back() == c) continue;
    res.checkpoints.push_back(c);
  }
  const std::size_t n_checks = res.checkpoints.size();
  res.sup_dev.assign(static_cast<std::size_t>(cfg.replicas),
                     std::vector<double>(n_checks, 0.0));
  res.x.assign(static_cast<std::size_t>(cfg.replicas),
               std::vector<std::int64_t>(n_checks, 0));

  parallel_replicas(cfg.replicas, cfg.threads, [&](int r) {
    NoiseStream stream = derive_stream(cfg.seed, static_cast<std::uint64_t>(r));
    auto& devs = res.sup_dev[static_cast<std::size_t>(r)];
    auto& xs = res.x[static_cast<std::size_t>(r)];
    if (heavy) {
      GridPopulation pop;
      std::int64_t done = 0;
      for (std::size_t c = 0; c < n_checks; ++c) {
        for (; done < res.checkpoints[c]; ++done)
          pop.step(sample_increment(law, stream), stream);
        devs[c] = pop.sup_deviation(f_c);
        xs[c] = pop.size();
      }
    } else {
      EcosystemState state;
      std::vector<double> births;
      std::int64_t done = 0;
      for (std::size_t c = 0; c < n_checks; ++c) {
        for (; done < res.checkpoints[c]; ++done) {
          const std::int64_t inc = sample_increment(law, stream);
          births.clear();
          for (std::int64_t j = 0; j < inc; ++j)
            births.push_back(stream.next_uniform());
          state.step(inc, births);
        }
        devs[c] = state.sup_deviation(f_c);
        xs[c] = state.x();
      }
    }
  });

  for (std::size_t c = 0; c < n_checks; ++c) {
    std::vector<double> col;
    col.reserve(static_cast<std::size_t>(cfg.replicas));
    for (int r = 0; r < cfg.replicas; ++r)
      col.push_back(res.sup_dev[static_cast<std::size_t>(r)][c]);
    res.medians.push_back(median(std::move(col)));
  }

  res.report.command = "glivenko";
  res.report.name = cfg.name;
  if (heavy) {
    const std::size_t last = n_checks - 1;
    int ok = 0;
    for (int r = 0; r < cfg.replicas; ++r)
      if (res.sup_dev[static_cast<std::size_t>(r)][last] <=
          cfg.heavy_sup_bound)
        ++ok;
    const double frac =
        static_cast<double>(ok) / static_cast<double>(cfg.replicas);
    res.report.checks.push_back({"sup_dev_fraction_within_bound", frac,
                                 cfg.heavy_sup_fraction,
                                 frac >= cfg.heavy_sup_fraction});
  } else if (n_checks == 3 && cfg.replicas >= 2 && res.checkpoints[0] > 0) {
    for (std::size_t c = 0; c + 1 < n_checks; ++c) {
      const double ratio = res.medians[c] / res.medians[c + 1];
      const std::string tag = "median_ratio_" + std::to_string(c);
      const bool ok = res.medians[c] > res.medians[c + 1] &&
                      ratio >= cfg.ratio_lo && ratio <= cfg.ratio_hi;
      res.report.checks.push_back({tag, ratio, cfg.ratio_hi, ok});
    }
  }

  CsvTable csv;
  csv.header = {"replica", "n", "x", "sup_dev"};
  for (int r = 0; r < cfg.replicas; ++r)
    for (std::size_t c = 0; c < n_checks; ++c)
      csv.rows.push_back({std::to_string(r),
                          std::to_string(res.checkpoints[c]),
                          std::to_string(res.x[static_cast<std::size_t>(r)][c]),
                          fmt_double(res.sup_dev[static_cast<std::size_t>(r)][c])});
  write_csv(cfg, "glivenko", csv);

  if (!cfg.out_dir.empty() && res.checkpoints.front() > 0) {
    SvgSeries med{"median sup deviation", "steelblue", {}, {}};
    for (std::size_t c = 0; c < n_checks; ++c) {
      med.x.push_back(static_cast<double>(res.checkpoints[c]));
      med.y.push_back(res.medians[c]);
    }
    write_svg(cfg, "glivenko_supdev",
              svg_line_plot("sup deviation vs n", {med}, true, true));
  }
  write_report(cfg, res.report);
  return res;
}

// ---------------------------------------------------------------------------
// identity: exact reflected-walk identity on shared noise.

struct IdentityResult {
  Report report;
  std::int64_t mismatches = 0;
};

inline IdentityResult run_identity(const ExperimentConfig& cfg) {
  const IncrementLaw law = cfg.law();
  if (!moments(law).e_plus_finite())
    throw ConfigError("identity: requires a finite-table law");
  std::vector<double> grid = cfg.f_grid;
  if (grid.empty()) throw ConfigError("identity: empty f_grid");
  std::sort(grid.begin(), grid.end());

  std::vector<std::int64_t> mismatch(static_cast<std::size_t>(cfg.replicas), 0);
  parallel_replicas(cfg.replicas, cfg.threads, [&](int r) {
    // Both representations consume the identical (increment, uniform-block)
    // sequence drawn once per step from the replica stream.
    NoiseStream stream = derive_stream(cfg.seed, static_cast<std::uint64_t>(r));
    EcosystemState state;
    const std::size_t g_count = grid.size();
    std::vector<std::int64_t> s(g_count, 0), min_s(g_count, 0),
        cell(g_count + 1, 0);
    std::vector<double> births;
    std::int64_t bad = 0;
    for (std::int64_t k = 0; k < cfg.n; ++k) {
      const std::int64_t inc = sample_increment(law, stream);
      births.clear();
      for (std::int64_t j = 0; j < inc; ++j)
        births.push_back(stream.next_uniform());
      state.step(inc, births);

      std::fill(cell.begin(), cell.end(), 0);
      for (double u : births) {
        const auto it = std::lower_bound(grid.begin(), grid.end(), u);
        ++cell[static_cast<std::size_t>(it - grid.begin())];
      }
      const std::int64_t neg = inc < 0 ? -inc : 0;
      std::int64_t births_leq = 0;
      for (std::size_t g = 0; g < g_count; ++g) {
        births_leq += cell[g];
        s[g] += births_leq - neg;
        min_s[g] = std::min(min_s[g], s[g]);
        if (state.level_count(grid[g]) != s[g] - min_s[g]) ++bad;
      }
    }
    mismatch[static_cast<std::size_t>(r)] = bad;
  });

  IdentityResult res;
  for (auto b : mismatch) res.mismatches += b;
  res.report.command = "identity";
  res.report.name = cfg.name;
  res.report.checks.push_back({"level_equals_walk_minus_minimum",
                               static_cast<double>(res.mismatches), 0.0,
                               res.mismatches == 0});
  write_report(cfg, res.report);
  return res;
}

// ---------------------------------------------------------------------------
// clt: distribution of sqrt(n) * deviation at grid levels and at f_c.

struct CltResult {
  Report report;
  double f_c = 0.0;
  std::vector<double> f_grid;
  // deviations[g][replica]; at_fc[replica]
  std::vector<std::vector<double>> deviations;
  std::vector<double> at_fc;
};

inline CltResult run_clt(const ExperimentConfig& cfg) {
  const IncrementLaw law = cfg.law();
  const MomentSet mom = moments(law);
  if (!mom.e_plus_finite() || !mom.drift_ok())
    throw ConfigError("clt: law outside the square-integrable regime");
  if (cfg.n < 1) throw ConfigError("clt: n must be >= 1");
  const LimitParams p = limit_params(mom);

  CltResult res;
  res.f_c = p.f_c;
  res.f_grid = cfg.f_grid;
  res.deviations.assign(res.f_grid.size(),
                        std::vector<double>(
                            static_cast<std::size_t>(cfg.replicas), 0.0));
  res.at_fc.assign(static_cast<std::size_t>(cfg.replicas), 0.0);

  const double sqrt_n = std::sqrt(static_cast<double>(cfg.n));
  parallel_replicas(cfg.replicas, cfg.threads, [&](int r) {
    NoiseStream stream = derive_stream(cfg.seed, static_cast<std::uint64_t>(r));
    EcosystemState state;
    std::vector<double> births;
    for (std::int64_t k = 0; k < cfg.n; ++k) {
      const std::int64_t inc = sample_increment(law, stream);
      births.clear();
      for (std::int64_t j = 0; j < inc; ++j)
        births.push_back(stream.next_uniform());
      state.step(inc, births);
    }
    for (std::size_t g = 0; g < res.f_grid.size(); ++g) {
      const double dev = state.empirical_cdf(res.f_grid[g]) -
                         uniform_tail_cdf(res.f_grid[g], p.f_c);
      res.deviations[g][static_cast<std::size_t>(r)] = sqrt_n * dev;
    }
    res.at_fc[static_cast<std::size_t>(r)] =
        sqrt_n * state.empirical_cdf(p.f_c);
  });

  res.report.command = "clt";
  res.report.name = cfg.name;
  for (std::size_t g = 0; g < res.f_grid.size(); ++g) {
    const double f = res.f_grid[g];
    if (f <= p.f_c + 1e-12 || f > 1.0) continue;
    const double sd = marginal_std(p, f);
    const double sd_raw = marginal_std(p, f, MarginalForm::raw);
    const std::string at = "@" + fmt_fixed(f, 6);
    const double ks = ks_statistic(
        res.deviations[g], [&](double x) { return normal_cdf(x, sd); });
    res.report.checks.push_back({"ks_normal" + at, ks, cfg.ks_bound,
                                 ks <= cfg.ks_bound});
    const McEstimate est = mc_estimate(res.deviations[g]);
    const double d_centered = std::abs(est.var - sd * sd) / est.se_var;
    const double d_raw = std::abs(est.var - sd_raw * sd_raw) / est.se_var;
    res.report.checks.push_back({"var_matches_centered_form" + at, d_centered,
                                 cfg.se_bound, d_centered <= cfg.se_bound});
    res.report.checks.push_back({"var_rejects_raw_form" + at, d_raw,
                                 cfg.se_bound, d_raw >= cfg.se_bound});
  }
  {
    const double g_fc = marginal_std(p, p.f_c);
    if (g_fc > 0.0) {
      const McEstimate est = mc_estimate(res.at_fc);
      const double target = g_fc * std::sqrt(2.0 / 3.14159265358979323846);
      const double mean_err = std::abs(est.mean - target);
      res.report.checks.push_back({"halfnormal_mean@fc", mean_err,
                                   cfg.mean_bound, mean_err <= cfg.mean_bound});
      const double ks = ks_statistic(
          res.at_fc, [&](double x) { return half_normal_cdf(x, g_fc); });
      res.report.checks.push_back({"ks_halfnormal@fc", ks, cfg.ks_bound,
                                   ks <= cfg.ks_bound});
    }
  }

  CsvTable csv;
  csv.header = {"replica"};
  for (double f : res.f_grid) csv.header.push_back("sqrtn_dev@" + fmt_fixed(f, 6));
  csv.header.push_back("sqrtn_fhat@fc");
  for (int r = 0; r < cfg.replicas; ++r) {
    std::vector<std::string> row{std::to_string(r)};
    for (std::size_t g = 0; g < res.f_grid.size(); ++g)
      row.push_back(fmt_double(res.deviations[g][static_cast<std::size_t>(r)]));
    row.push_back(fmt_double(res.at_fc[static_cast<std::size_t>(r)]));
    csv.rows.push_back(std::move(row));
  }
  write_csv(cfg, "clt", csv);

  if (!cfg.out_dir.empty() && !res.f_grid.empty()) {
    // ECDF of the first strictly supercritical grid level vs its normal law.
    for (std::size_t g = 0; g < res.f_grid.size(); ++g) {
      if (res.f_grid[g] <= p.f_c + 1e-12 || res.f_grid[g] > 1.0) continue;
      std::vector<double> sorted = res.deviations[g];
      std::sort(sorted.begin(), sorted.end());
      SvgSeries ecdf{"empirical", "firebrick", {}, {}};
      SvgSeries analytic{"normal", "steelblue", {}, {}};
      const double sd = marginal_std(p, res.f_grid[g]);
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        ecdf.x.push_back(sorted[i]);
        ecdf.y.push_back(static_cast<double>(i + 1) /
                         static_cast<double>(sorted.size()));
        analytic.x.push_back(sorted[i]);
        analytic.y.push_back(normal_cdf(sorted[i], sd));
      }
      write_svg(cfg, "clt_ecdf",
                svg_line_plot("rescaled deviation vs normal law",
                              {ecdf, analytic}));
      break;
    }
  }
  write_report(cfg, res.report);
  return res;
}

// ---------------------------------------------------------------------------
// limit: sample the limit objects, check covariances and marginals.

struct LimitStudy {
  LimitParams params;
  std::vector<double> f_list;  // X evaluation levels
  std::vector<double> t_list;  // Y / Wt1 evaluation times
  // per-path scalars
  std::vector<std::vector<double>> x_at;    // [f][path]
  std::vector<std::vector<double>> y_at;    // [t][path]
  std::vector<std::vector<double>> wt1_at;  // [t][path]
  std::vector<std::vector<double>> first;   // [f][path]
  std::vector<double> second;               // [path]
  std::vector<double> psi_wt1;              // [path]
};

inline LimitStudy run_limit_study(const LimitParams& p, std::int64_t m,
                                  int paths, std::uint64_t seed, int threads,
                                  std::vector<double> f_list,
                                  std::vector<double> t_list) {
  LimitStudy st;
  st.params = p;
  st.f_list = std::move(f_list);
  st.t_list = std::move(t_list);
  const auto np = static_cast<std::size_t>(paths);
  st.x_at.assign(st.f_list.size(), std::vector<double>(np, 0.0));
  st.first.assign(st.f_list.size(), std::vector<double>(np, 0.0));
  st.y_at.assign(st.t_list.size(), std::vector<double>(np, 0.0));
  st.wt1_at.assign(st.t_list.size(), std::vector<double>(np, 0.0));
  st.second.assign(np, 0.0);
  st.psi_wt1.assign(np, 0.0);

  parallel_replicas(paths, threads, [&](int path) {
    NoiseStream stream = derive_stream(seed, static_cast<std::uint64_t>(path));
    const JointLimitSample s = sample_joint_limit(p, st.f_list, m, stream);
    const auto idx = static_cast<std::size_t>(path);
    for (std::size_t i = 0; i < st.f_list.size(); ++i) {
      st.x_at[i][idx] = s.x_inf[i];
      st.first[i][idx] = s.first[i];
    }
    for (std::size_t i = 0; i < st.t_list.size(); ++i) {
      st.y_at[i][idx] = s.y.at_fraction(st.t_list[i]);
      st.wt1_at[i][idx] = s.wt1.at_fraction(st.t_list[i]);
    }
    st.second[idx] = s.second;
    st.psi_wt1[idx] = psi(std::span<const double>(s.wt1.values));
  });
  return st;
}

struct LimitResult {
  Report report;
  LimitStudy study;
};

inline LimitResult run_limit(const ExperimentConfig& cfg) {
  const IncrementLaw law = cfg.law();
  const MomentSet mom = moments(law);
  if (!mom.e_plus_finite() || !mom.drift_ok())
    throw ConfigError("limit: law outside the square-integrable regime");
  const LimitParams p = limit_params(mom);

  std::vector<double> f_list = cfg.f_grid;
  if (f_list.empty()) f_list = {0.5, 0.75};
  for (double f : {p.f_c, 1.0}) {
    bool found = false;
    for (double g : f_list) found = found || std::abs(g - f) <= 1e-12;
    if (!found) f_list.push_back(f);
  }
  std::sort(f_list.begin(), f_list.end());
  std::vector<double> t_list = {0.25, 0.5, 1.0};

  LimitResult res;
  res.study = run_limit_study(p, cfg.m, cfg.replicas, cfg.seed, cfg.threads,
                              f_list, t_list);
  const LimitStudy& st = res.study;
  res.report.command = "limit";
  res.report.name = cfg.name;

  auto check_cov = [&](const std::string& pair, double closed,
                       std::span<const double> a, std::span<const double> b) {
    const CovEstimate est = cov_estimate(a, b);
    res.report.covariances.push_back({pair, closed, est.cov, est.se_cov});
    const double d = std::abs(est.cov - closed) /
                     (est.se_cov > 0.0 ? est.se_cov : 1.0);
    res.report.checks.push_back({"cov_" + pair, d, cfg.se_bound,
                                 d <= cfg.se_bound});
  };

  for (std::size_t i = 0; i < st.f_list.size(); ++i)
    for (std::size_t j = i; j < st.f_list.size(); ++j)
      check_cov("xx(" + fmt_fixed(st.f_list[i], 6) + "," +
                    fmt_fixed(st.f_list[j], 6) + ")",
                cov_xx(p, st.f_list[i], st.f_list[j]), st.x_at[i], st.x_at[j]);
  for (std::size_t i = 0; i < st.t_list.size(); ++i)
    for (std::size_t j = i; j < st.t_list.size(); ++j)
      check_cov("yy(" + fmt_fixed(st.t_list[i], 6) + "," +
                    fmt_fixed(st.t_list[j], 6) + ")",
                cov_yy(p, st.t_list[i], st.t_list[j]), st.y_at[i], st.y_at[j]);
  for (std::size_t i = 0; i < st.f_list.size(); ++i)
    for (std::size_t j = 0; j < st.t_list.size(); ++j) {
      if (st.t_list[j] < 0.5) continue;
      check_cov("xy(" + fmt_fixed(st.f_list[i], 6) + "," +
                    fmt_fixed(st.t_list[j], 6) + ")",
                cov_xy(p, st.f_list[i], st.t_list[j]), st.x_at[i],
                st.y_at[j]);
    }

  if (p.f_c > 0.0) {
    for (std::size_t j = 0; j < st.t_list.size(); ++j) {
      const McEstimate est = mc_estimate(st.wt1_at[j]);
      const double d = std::abs(est.var - st.t_list[j]) / est.se_var;
      res.report.checks.push_back(
          {"wt1_var@" + fmt_fixed(st.t_list[j], 6), d, cfg.se_bound,
           d <= cfg.se_bound});
    }
    const double ks_wt1 = ks_statistic(
        st.psi_wt1, [](double x) { return half_normal_cdf(x, 1.0); });
    res.report.checks.push_back({"ks_psi_wt1_halfnormal", ks_wt1,
                                 cfg.ks_bound, ks_wt1 <= cfg.ks_bound});
  }
  {
    const double g_fc = marginal_std(p, p.f_c);
    if (g_fc > 0.0) {
      const double ks = ks_statistic(
          st.second, [&](double x) { return half_normal_cdf(x, g_fc); });
      res.report.checks.push_back({"ks_second_coordinate_halfnormal", ks,
                                   cfg.ks_bound, ks <= cfg.ks_bound});
    }
  }

  CsvTable csv;
  csv.header = {"path"};
  for (double f : st.f_list) csv.header.push_back("x@" + fmt_fixed(f, 6));
  for (double t : st.t_list) csv.header.push_back("y@" + fmt_fixed(t, 6));
  for (double f : st.f_list) csv.header.push_back("first@" + fmt_fixed(f, 6));
  csv.header.push_back("second");
  const int dump = std::min(cfg.replicas, 512);
  for (int r = 0; r < dump; ++r) {
    const auto idx = static_cast<std::size_t>(r);
    std::vector<std::string> row{std::to_string(r)};
    for (std::size_t i = 0; i < st.f_list.size(); ++i)
      row.push_back(fmt_double(st.x_at[i][idx]));
    for (std::size_t i = 0; i < st.t_list.size(); ++i)
      row.push_back(fmt_double(st.y_at[i][idx]));
    for (std::size_t i = 0; i < st.f_list.size(); ++i)
      row.push_back(fmt_double(st.first[i][idx]));
    row.push_back(fmt_double(st.second[idx]));
    csv.rows.push_back(std::move(row));
  }
  write_csv(cfg, "limit_scalars", csv);
  write_report(cfg, res.report);
  return res;
}

// ---------------------------------------------------------------------------
// joint: finite-n pair against the limit pair.

struct JointResult {
  Report report;
  double finite_corr = 0.0;
  double limit_corr = 0.0;
};

inline JointResult run_joint(const ExperimentConfig& cfg, int limit_paths = 0) {
  const IncrementLaw law = cfg.law();
  const MomentSet mom = moments(law);
  if (!mom.e_plus_finite() || !mom.drift_ok())
    throw ConfigError("joint: law outside the square-integrable regime");
  const LimitParams p = limit_params(mom);

  double f_pick = 0.0;
  for (double f : cfg.f_grid)
    if (f > p.f_c + 1e-12 && f <= 1.0) {
      f_pick = f;
      break;
    }
  if (f_pick == 0.0) throw ConfigError("joint: f_grid needs a level above f_c");
  if (limit_paths <= 0) limit_paths = 10000;

  ExperimentConfig finite_cfg = cfg;
  finite_cfg.f_grid = {f_pick};
  finite_cfg.out_dir.clear();
  const CltResult fin = run_clt(finite_cfg);

  const LimitStudy lim = run_limit_study(p, cfg.m, limit_paths, cfg.seed + 1,
                                         cfg.threads, {f_pick}, {1.0});

  JointResult res;
  res.report.command = "joint";
  res.report.name = cfg.name;
  res.finite_corr = cov_estimate(fin.deviations[0], fin.at_fc).corr;
  res.limit_corr = cov_estimate(lim.first[0], lim.second).corr;
  const double corr_gap = std::abs(res.finite_corr - res.limit_corr);
  res.report.checks.push_back({"corr_gap", corr_gap, cfg.joint_corr_bound,
                               corr_gap <= cfg.joint_corr_bound});
  const double ks_f = ks_two_sample(fin.deviations[0], lim.first[0]);
  res.report.checks.push_back({"ks_two_sample@" + fmt_fixed(f_pick, 6), ks_f,
                               cfg.joint_ks_bound,
                               ks_f <= cfg.joint_ks_bound});
  const double ks_c = ks_two_sample(fin.at_fc, lim.second);
  res.report.checks.push_back({"ks_two_sample@fc", ks_c, cfg.joint_ks_bound,
                               ks_c <= cfg.joint_ks_bound});
  write_report(cfg, res.report);
  return res;
}

}  // namespace fitpop
