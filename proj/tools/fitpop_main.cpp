// fitpop command-line runner.
//
// Subcommands: moments, glivenko, identity, clt, limit, joint.  Every
// experiment is configured by an optional JSON file plus flag overrides and
// emits CSV data, a JSON report, and (where it makes sense) an SVG plot into
// the output directory.  Exit codes: 0 all thresholds pass, 1 a threshold
// failed, 2 configuration error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fitpop/experiments.hpp"

namespace {

using fitpop::json;

struct Overrides {
  std::string config_path;
  std::string law;   // inline JSON or path to a JSON file
  std::optional<std::int64_t> n;
  std::optional<int> replicas;
  std::optional<std::uint64_t> seed;
  std::string fgrid;
  std::string out;
  std::optional<int> threads;
  std::optional<std::int64_t> m;
  std::string name;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--law", o.law, "law JSON (inline or a file path)");
  cmd->add_option("--n", o.n, "steps per replica");
  cmd->add_option("--replicas", o.replicas, "replica count");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--fgrid", o.fgrid, "comma-separated fitness levels");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)");
  cmd->add_option("--m", o.m, "path grid cells (power of two)");
  cmd->add_option("--name", o.name, "experiment name used in file names");
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fitpop::ConfigError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw fitpop::ConfigError(std::string("bad JSON in ") + path + ": " +
                              e.what());
  }
  return j;
}

json law_json_from_flag(const std::string& flag) {
  std::string text = flag;
  if (!flag.empty() && flag.front() != '{') return load_json_file(flag);
  try {
    return json::parse(text);
  } catch (const std::exception& e) {
    throw fitpop::ConfigError(std::string("bad law JSON: ") + e.what());
  }
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      grid.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw fitpop::ConfigError("bad f_grid entry '" + item + "'");
    }
  }
  if (grid.empty()) throw fitpop::ConfigError("empty f_grid");
  return grid;
}

fitpop::ExperimentConfig build_config(const Overrides& o) {
  json j = o.config_path.empty() ? json::object()
                                 : load_json_file(o.config_path);
  if (!o.law.empty()) j["law"] = law_json_from_flag(o.law);
  if (o.n) j["n"] = *o.n;
  if (o.replicas) j["replicas"] = *o.replicas;
  if (o.seed) j["seed"] = *o.seed;
  if (!o.fgrid.empty()) j["f_grid"] = parse_grid(o.fgrid);
  if (!o.out.empty()) j["out"] = o.out;
  if (o.threads) j["threads"] = *o.threads;
  if (o.m) j["m"] = *o.m;
  if (!o.name.empty()) j["name"] = o.name;
  return fitpop::config_from_json(j);
}

void print_report(const fitpop::Report& report) {
  for (const auto& c : report.checks)
    std::printf("  %-40s  statistic=%-12.6g threshold=%-10.6g %s\n",
                c.test.c_str(), c.statistic, c.threshold,
                c.pass ? "pass" : "FAIL");
  std::printf("%s: %s\n", report.command.c_str(),
              report.pass() ? "pass" : "FAIL");
}

int run_moments_cmd(const Overrides& o) {
  if (o.law.empty() && o.config_path.empty())
    throw fitpop::ConfigError("moments: provide --law or --config");
  json law_json;
  if (!o.law.empty()) {
    law_json = law_json_from_flag(o.law);
  } else {
    json cfg = load_json_file(o.config_path);
    if (!cfg.contains("law")) throw fitpop::ConfigError("config: missing law");
    law_json = cfg["law"];
  }
  const fitpop::IncrementLaw law = fitpop::law_from_json(law_json);
  const fitpop::MomentsResult r = fitpop::run_moments(law);

  auto num = [](double v) {
    return std::isinf(v) ? std::string("infinite") : fitpop::fmt_fixed(v, 12);
  };
  std::printf("E(I+)      = %s\n", num(r.moments.e_plus).c_str());
  std::printf("E(I-)      = %s\n", num(r.moments.e_minus).c_str());
  std::printf("E(I+^2)    = %s\n", num(r.moments.e_plus2).c_str());
  std::printf("E(I-^2)    = %s\n", num(r.moments.e_minus2).c_str());
  std::printf("var(I+)    = %s\n", num(r.moments.var_plus).c_str());
  std::printf("var(I-)    = %s\n", num(r.moments.var_minus).c_str());
  std::printf("drift ok   = %s\n", r.moments.drift_ok() ? "yes" : "no");
  std::printf("f_c        = %s\n", num(r.moments.critical_threshold()).c_str());
  if (r.params) {
    std::printf("sigma~1    = %s\n", num(r.params->sigma_tilde1).c_str());
    std::printf("sigma2     = %s\n", num(r.params->sigma2).c_str());
    std::printf("rho        = %s\n", num(r.params->rho).c_str());
    std::printf("g(f) on [f_c,1]:\n");
    for (const auto& [f, g] : r.g_values)
      std::printf("  g(%s) = %s\n", fitpop::fmt_fixed(f, 6).c_str(),
                  num(g).c_str());
  } else {
    std::printf("limit constants unavailable (outside the CLT regime)\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "fitpop: simulation and statistical verification of fitness-ranked "
      "population processes and their scaling limits"};
  app.require_subcommand(1);

  Overrides o;
  auto* cmd_moments = app.add_subcommand(
      "moments", "print moments, limit constants and the marginal sd");
  add_common_options(cmd_moments, o);
  auto* cmd_glivenko = app.add_subcommand(
      "glivenko", "sup deviation of the empirical fitness law per replica");
  add_common_options(cmd_glivenko, o);
  auto* cmd_identity = app.add_subcommand(
      "identity", "exact level-process vs reflected-walk identity");
  add_common_options(cmd_identity, o);
  auto* cmd_clt = app.add_subcommand(
      "clt", "rescaled deviations against the Gaussian/half-normal marginals");
  add_common_options(cmd_clt, o);
  auto* cmd_limit = app.add_subcommand(
      "limit", "limit-process sampler against closed-form covariances");
  add_common_options(cmd_limit, o);
  auto* cmd_joint = app.add_subcommand(
      "joint", "finite-n joint sample against the limit sampler");
  add_common_options(cmd_joint, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_moments->parsed()) return run_moments_cmd(o);
    const fitpop::ExperimentConfig cfg = build_config(o);
    fitpop::Report report;
    if (cmd_glivenko->parsed())
      report = fitpop::run_glivenko(cfg).report;
    else if (cmd_identity->parsed())
      report = fitpop::run_identity(cfg).report;
    else if (cmd_clt->parsed())
      report = fitpop::run_clt(cfg).report;
    else if (cmd_limit->parsed())
      report = fitpop::run_limit(cfg).report;
    else if (cmd_joint->parsed())
      report = fitpop::run_joint(cfg).report;
    print_report(report);
    return report.pass() ? 0 : 1;
  } catch (const fitpop::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
