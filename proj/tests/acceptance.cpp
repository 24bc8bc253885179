// Acceptance suite: end-to-end statistical verification of the simulator
// against the model's limit theory.  Each test case prints one PASS/FAIL
// line; run this binary directly (or ctest -V) to see them.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fitpop/experiments.hpp"

using namespace fitpop;

namespace {

constexpr double kPi = 3.14159265358979323846;

json two_thirds_json() {
  return json{{"table", {{"1", 2.0 / 3.0}, {"-1", 1.0 / 3.0}}}};
}
json two_one_json() {
  return json{{"table", {{"2", 0.5}, {"-1", 0.5}}}};
}
json four_point_json() {
  return json{{"table", {{"1", 0.3}, {"2", 0.3}, {"-1", 0.2}, {"-2", 0.2}}}};
}
json heavy_json() {
  return json{{"heavy_tail", {{"alpha", 1.5}, {"w", 0.8}, {"b", 1}}}};
}

class Criterion {
 public:
  explicit Criterion(std::string id) : id_(std::move(id)) {
    start_ = std::chrono::steady_clock::now();
  }

  void expect(bool cond, const std::string& detail) {
    if (!cond) {
      ok_ = false;
      notes_.push_back(detail);
    }
  }

  bool finish(double budget_seconds = 0.0) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_).count();
    if (budget_seconds > 0.0 && secs > budget_seconds) {
      ok_ = false;
      notes_.push_back("runtime " + fmt_fixed(secs, 4) + "s over budget " +
                       fmt_fixed(budget_seconds, 4) + "s");
    }
    std::printf("[%s] %s (%.1f s)\n", id_.c_str(), ok_ ? "PASS" : "FAIL", secs);
    for (const auto& n : notes_) std::printf("[%s]   %s\n", id_.c_str(), n.c_str());
    std::fflush(stdout);
    return ok_;
  }

 private:
  std::string id_;
  bool ok_ = true;
  std::vector<std::string> notes_;
  std::chrono::steady_clock::time_point start_;
};

// Shared expensive runs, computed once on first use.

const CltResult& shared_clt_run() {
  static const CltResult res = [] {
    json j{{"law", two_thirds_json()}, {"n", 100000}, {"replicas", 2000},
           {"seed", 301},              {"f_grid", {0.75}}};
    return run_clt(config_from_json(j));
  }();
  return res;
}

const LimitStudy& shared_limit_study() {
  static const LimitStudy res = [] {
    const LimitParams p = limit_params(moments(law_from_json(two_thirds_json())));
    return run_limit_study(p, 4096, 10000, 601, 0, {0.5, 0.75, 1.0},
                           {0.25, 0.5, 1.0});
  }();
  return res;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("AC-1 reflected-walk identity is exact") {
  Criterion c("AC-1");
  std::vector<double> grid;
  for (int i = 1; i <= 64; ++i) grid.push_back(static_cast<double>(i) / 64.0);
  const json laws[] = {two_thirds_json(), two_one_json(), four_point_json()};
  for (const auto& law : laws) {
    json j{{"law", law}, {"n", 10000}, {"replicas", 20}, {"seed", 101},
           {"f_grid", grid}};
    const IdentityResult res = run_identity(config_from_json(j));
    c.expect(res.mismatches == 0,
             "law " + law.dump() + ": " + std::to_string(res.mismatches) +
                 " mismatches");
  }
  REQUIRE(c.finish(30.0));
}

TEST_CASE("AC-2 sup deviation vanishes at the root-n rate") {
  Criterion c("AC-2");
  {
    json j{{"law", two_thirds_json()}, {"n", 100000}, {"replicas", 200},
           {"seed", 201}};
    const GlivenkoResult res = run_glivenko(config_from_json(j));
    c.expect(res.checkpoints ==
                 std::vector<std::int64_t>{1000, 10000, 100000},
             "unexpected checkpoints");
    for (std::size_t i = 0; i + 1 < res.medians.size(); ++i) {
      c.expect(res.medians[i] > res.medians[i + 1],
               "medians not strictly decreasing");
      const double ratio = res.medians[i] / res.medians[i + 1];
      c.expect(ratio >= 2.2 && ratio <= 4.5,
               "ratio " + fmt_fixed(ratio, 6) + " outside [2.2, 4.5]");
    }
  }
  {
    json j{{"law", heavy_json()}, {"n", 100000}, {"replicas", 50},
           {"seed", 202}};
    const GlivenkoResult res = run_glivenko(config_from_json(j));
    int ok = 0;
    const std::size_t last = res.checkpoints.size() - 1;
    for (const auto& devs : res.sup_dev)
      if (devs[last] <= 0.1) ++ok;
    c.expect(ok >= 45, "only " + std::to_string(ok) +
                           "/50 heavy-tail replicas within 0.1");
  }
  REQUIRE(c.finish(180.0));
}

TEST_CASE("AC-3 Gaussian marginal above the threshold") {
  Criterion c("AC-3");
  const CltResult& res = shared_clt_run();
  const std::vector<double>& dev = res.deviations[0];  // f = 0.75

  const double ks =
      ks_statistic(dev, [](double x) { return normal_cdf(x, 0.75); });
  c.expect(ks <= 0.05, "KS vs N(0, 0.75^2) = " + fmt_fixed(ks, 6));

  const McEstimate est = mc_estimate(dev);
  const double d_centered = std::abs(est.var - 0.5625) / est.se_var;
  const double d_raw = std::abs(est.var - 0.6875) / est.se_var;
  c.expect(d_centered <= 4.0,
           "var " + fmt_fixed(est.var, 6) + " is " + fmt_fixed(d_centered, 4) +
               " SE from 0.5625");
  c.expect(d_raw >= 4.0, "var " + fmt_fixed(est.var, 6) + " is only " +
                             fmt_fixed(d_raw, 4) + " SE from 0.6875");
  REQUIRE(c.finish(480.0));
}

TEST_CASE("AC-4 half-normal marginal at the threshold") {
  Criterion c("AC-4");
  const CltResult& res = shared_clt_run();
  const double g_fc = std::sqrt(1.5);
  const double target = g_fc * std::sqrt(2.0 / kPi);  // 0.97720

  const McEstimate est = mc_estimate(res.at_fc);
  c.expect(std::abs(est.mean - target) <= 0.05,
           "mean " + fmt_fixed(est.mean, 6) + " vs " + fmt_fixed(target, 6));
  const double ks = ks_statistic(
      res.at_fc, [&](double x) { return half_normal_cdf(x, g_fc); });
  c.expect(ks <= 0.05, "KS vs half-normal = " + fmt_fixed(ks, 6));
  REQUIRE(c.finish());
}

TEST_CASE("AC-5 law-of-large-numbers rates") {
  Criterion c("AC-5");
  const auto law = law_from_json(two_thirds_json());
  const std::int64_t n = 100000;
  const int seeds = 20;
  double l_high = 0.0, l_low = 0.0, m_low = 0.0;
  for (int r = 0; r < seeds; ++r) {
    NoiseStream stream = derive_stream(501, static_cast<std::uint64_t>(r));
    const WalkTrace t = walk_trace(law, n, {0.25, 0.75}, stream);
    const auto nn = static_cast<std::size_t>(n);
    l_low += static_cast<double>(t.s[0][nn] - t.min_s[0][nn]) / n;
    m_low += static_cast<double>(t.min_s[0][nn]) / n;
    l_high += static_cast<double>(t.s[1][nn] - t.min_s[1][nn]) / n;
  }
  l_high /= seeds;
  l_low /= seeds;
  m_low /= seeds;
  c.expect(std::abs(l_high - 1.0 / 6.0) <= 0.01,
           "L_n(0.75)/n = " + fmt_fixed(l_high, 6));
  c.expect(std::abs(m_low + 1.0 / 6.0) <= 0.01,
           "M_n(0.25)/n = " + fmt_fixed(m_low, 6));
  c.expect(std::abs(l_low) <= 0.01, "L_n(0.25)/n = " + fmt_fixed(l_low, 6));
  REQUIRE(c.finish());
}

TEST_CASE("AC-6 limit-process covariances") {
  Criterion c("AC-6");
  const LimitStudy& st = shared_limit_study();
  const LimitParams& p = st.params;

  c.expect(std::abs(cov_xx(p, 1.0, 1.0) - 8.0 / 9.0) <= 1e-12,
           "cov_xx(1,1) closed form");
  c.expect(std::abs(cov_xx(p, 0.5, 0.5) - 2.0 / 3.0) <= 1e-12,
           "cov_xx(0.5,0.5) closed form");

  auto within = [&](const std::string& tag, double closed,
                    std::span<const double> a, std::span<const double> b) {
    const CovEstimate est = cov_estimate(a, b);
    const double d = std::abs(est.cov - closed) / est.se_cov;
    c.expect(d <= 4.0, tag + ": " + fmt_fixed(est.cov, 6) + " vs " +
                           fmt_fixed(closed, 6) + " (" + fmt_fixed(d, 3) +
                           " SE)");
  };
  for (std::size_t i = 0; i < st.f_list.size(); ++i)
    for (std::size_t j = i; j < st.f_list.size(); ++j)
      within("xx(" + fmt_fixed(st.f_list[i], 4) + "," +
                 fmt_fixed(st.f_list[j], 4) + ")",
             cov_xx(p, st.f_list[i], st.f_list[j]), st.x_at[i], st.x_at[j]);
  for (std::size_t i = 0; i < st.t_list.size(); ++i)
    for (std::size_t j = i; j < st.t_list.size(); ++j)
      within("yy(" + fmt_fixed(st.t_list[i], 4) + "," +
                 fmt_fixed(st.t_list[j], 4) + ")",
             cov_yy(p, st.t_list[i], st.t_list[j]), st.y_at[i], st.y_at[j]);
  for (double t : {0.5, 1.0}) {
    const std::size_t ti = t == 0.5 ? 1 : 2;
    within("xy(0.75," + fmt_fixed(t, 4) + ")", cov_xy(p, 0.75, t),
           st.x_at[1], st.y_at[ti]);
  }
  REQUIRE(c.finish());
}

TEST_CASE("AC-7 rebuilt motion is standard Brownian") {
  Criterion c("AC-7");
  const LimitStudy& st = shared_limit_study();
  for (std::size_t i = 0; i < st.t_list.size(); ++i) {
    const McEstimate est = mc_estimate(st.wt1_at[i]);
    const double d = std::abs(est.var - st.t_list[i]) / est.se_var;
    c.expect(d <= 4.0, "var at t=" + fmt_fixed(st.t_list[i], 4) + ": " +
                           fmt_fixed(est.var, 6) + " (" + fmt_fixed(d, 3) +
                           " SE)");
  }
  const double ks = ks_statistic(
      st.psi_wt1, [](double x) { return half_normal_cdf(x, 1.0); });
  c.expect(ks <= 0.05, "KS of the range functional vs |N(0,1)| = " +
                           fmt_fixed(ks, 6));
  REQUIRE(c.finish());
}

TEST_CASE("AC-8 finite-n joint sample matches the limit sampler") {
  Criterion c("AC-8");
  const CltResult& fin = shared_clt_run();
  const LimitStudy& lim = shared_limit_study();

  const double corr_fin = cov_estimate(fin.deviations[0], fin.at_fc).corr;
  const double corr_lim = cov_estimate(lim.first[1], lim.second).corr;
  c.expect(std::abs(corr_fin - corr_lim) <= 0.05,
           "corr " + fmt_fixed(corr_fin, 4) + " vs " + fmt_fixed(corr_lim, 4));

  const double ks_f = ks_two_sample(fin.deviations[0], lim.first[1]);
  c.expect(ks_f <= 0.06, "two-sample KS at f=0.75: " + fmt_fixed(ks_f, 6));
  const double ks_c = ks_two_sample(fin.at_fc, lim.second);
  c.expect(ks_c <= 0.06, "two-sample KS at f_c: " + fmt_fixed(ks_c, 6));
  REQUIRE(c.finish());
}

TEST_CASE("AC-9 byte-identical outputs across thread counts") {
  Criterion c("AC-9");
  const auto base =
      std::filesystem::temp_directory_path() / "fitpop_acceptance_det";
  std::filesystem::remove_all(base);

  auto run_all = [&](int threads, const std::string& sub) {
    const std::string out = (base / sub).string();
    json common{{"law", two_thirds_json()}, {"n", 10000}, {"replicas", 16},
                {"seed", 901},              {"threads", threads},
                {"f_grid", {0.5, 0.75}},    {"out", out},
                {"name", "det"}};
    run_glivenko(config_from_json(common));
    run_identity(config_from_json(common));
    run_clt(config_from_json(common));
    json lim = common;
    lim["replicas"] = 256;
    lim["m"] = 1024;
    run_limit(config_from_json(lim));
    json joint = common;
    joint["replicas"] = 64;
    joint["m"] = 1024;
    run_joint(config_from_json(joint), 256);
    return base / sub;
  };

  const auto d1 = run_all(1, "t1");
  const auto d8 = run_all(8, "t8");
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(d1)) {
    const auto other = d8 / entry.path().filename();
    const bool exists = std::filesystem::exists(other);
    c.expect(exists, entry.path().filename().string() + " missing at t8");
    if (exists)
      c.expect(slurp(entry.path()) == slurp(other),
               entry.path().filename().string() + " differs");
    ++files;
  }
  for (const auto& entry : std::filesystem::directory_iterator(d8))
    c.expect(std::filesystem::exists(d1 / entry.path().filename()),
             entry.path().filename().string() + " missing at t1");
  c.expect(files >= 8, "expected at least 8 output files, saw " +
                           std::to_string(files));
  std::filesystem::remove_all(base);
  REQUIRE(c.finish());
}
