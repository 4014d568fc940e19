// orpa: command-line harness for robust preference alignment experiments.

#include <omp.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "orpa/constants.hpp"
#include "orpa/envelope.hpp"
#include "orpa/errors.hpp"
#include "orpa/experiment.hpp"
#include "orpa/objective.hpp"
#include "orpa/verification.hpp"

namespace {

using nlohmann::json;
using namespace orpa;

enum Exit : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeError = 3 };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int threads = 0;
  bool quiet = false;
};

ExperimentConfig load(const Globals& g) {
  ExperimentConfig c = g.config_path.empty() ? parse_config(default_config_json())
                                             : load_config(g.config_path);
  if (g.seed) {
    json j = c.canonical;
    j["seeds"] = {*g.seed};
    c = parse_config(j);
  }
  return c;
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << j.dump(2) << "\n";
}

void say(const Globals& g, const std::string& line) {
  if (!g.quiet) std::cout << line << "\n";
}

json bundle_json(const ConstantsBundle& b) {
  return {{"b_psi", b.b_psi},
          {"radius_d", b.radius_d},
          {"beta", b.beta},
          {"lambda", b.lambda},
          {"batch_b", b.batch_b},
          {"eps_smooth", b.eps_smooth},
          {"g_score", b.g_score},
          {"m_score", b.m_score},
          {"kappa_r", b.kappa_r},
          {"l_sail_smooth", b.l_sail_smooth},
          {"l_sail_estimated", b.l_sail_estimated},
          {"kappa", b.kappa},
          {"kappa_smoothed", b.kappa_smoothed(b.eps_smooth)},
          {"lambda_env", b.lambda_env},
          {"l_env", b.l_env},
          {"g_grad_sail", b.g_grad_sail},
          {"g_sub_r", b.g_sub_r},
          {"sigma2_sail", b.sigma2_sail},
          {"sigma2_r", b.sigma2_r},
          {"sigma2_estimated", b.sigma2_estimated},
          {"g_tot2", b.g_tot2},
          {"f_inf", b.f_inf}};
}

int cmd_decompose(const Globals& g, std::size_t instances, const std::string& out) {
  const ExperimentConfig c = load(g);
  const std::uint64_t seed = g.seed.value_or(0);
  CheckReport r = check_decomposition(seed, instances);
  const double closed = robust_objective_closed_form(c.problem, c.theta0);
  const double adversarial = adversarial_oracle_loss(c.problem, c.theta0);
  const double worst = robust_objective_worstcase(c.problem, c.theta0);
  json j = {{"random_instances", r},
            {"config_instance",
             {{"config_digest", c.digest},
              {"closed_form", closed},
              {"adversarial_oracle", adversarial},
              {"pointwise_sup", worst},
              {"sail", sail_loss_exact(c.problem, c.theta0)},
              {"penalty", robust_penalty_exact(c.problem, c.theta0)}}}};
  const double gap = std::max(std::abs(closed - adversarial), std::abs(closed - worst));
  const bool ok = r.passed && gap <= kIdentityTol;
  if (!out.empty()) write_json(out, j);
  say(g, std::string(ok ? "PASS" : "FAIL") + " decomposition: max diff " + format_double(r.measured) +
             " over " + std::to_string(instances) + " instances, config instance diff " +
             format_double(gap));
  return ok ? kOk : kCheckFailed;
}

int cmd_constants(const Globals& g, const std::string& out) {
  const ExperimentConfig c = load(g);
  json j = artifact_header(c);
  j["constants"] = bundle_json(config_constants(c));
  j["delta"] = c.problem.oracle.delta();
  const std::filesystem::path path = out.empty() ? std::filesystem::path(g.out_dir) / "constants.json"
                                                 : std::filesystem::path(out);
  write_json(path, j);
  say(g, j.dump(2));
  return kOk;
}

int cmd_run(const Globals& g, bool with_envelope, bool wall_time) {
  const ExperimentConfig c = load(g);
  const ExperimentResult r = run_experiment(c, {with_envelope, wall_time});
  const auto paths = write_artifacts(g.out_dir, c, r);
  for (const auto& p : paths) say(g, "wrote " + p.string());
  if (with_envelope) {
    say(g, "mean squared envelope gradient " + format_double(r.summary["measured_mean_sq_env_grad"]) +
               " vs rate bound " + format_double(r.summary["rate_bound"]));
  }
  return kOk;
}

Vector parse_theta(const std::string& text, Eigen::Index dim) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigInvalid("--theta: cannot parse '" + item + "'");
    }
  }
  if (static_cast<Eigen::Index>(v.size()) != dim) {
    throw ConfigInvalid("--theta: expected " + std::to_string(dim) + " comma-separated values");
  }
  return Eigen::Map<const Vector>(v.data(), dim);
}

int cmd_envelope(const Globals& g, const std::string& theta_text, double eps_prox) {
  const ExperimentConfig c = load(g);
  const Vector theta = theta_text.empty() ? c.theta0 : parse_theta(theta_text, c.theta0.size());
  const ConstantsBundle b = config_constants(c);
  ProxOptions options;
  options.eps_prox = eps_prox > 0.0 ? eps_prox : c.eps_prox;
  const ProxResult r = prox_solve(c.problem, b, theta, options);
  const double kappa = b.kappa_smoothed(c.problem.hyper.eps_smooth);
  const Certificate cert = stationarity_certificate(r, b.lambda_env, kappa, options.eps_prox);
  const auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json j = artifact_header(c);
  j["theta"] = vec(theta);
  j["prox_point"] = vec(r.prox_point);
  j["env_value"] = r.env_value;
  j["env_grad"] = vec(r.env_grad);
  j["env_grad_norm"] = r.env_grad.norm();
  j["residual"] = r.residual;
  j["inner_iters"] = r.inner_iters;
  j["lambda_env"] = b.lambda_env;
  j["certificate"] = {{"env_grad_norm", cert.env_grad_norm},
                      {"eps_prox", cert.eps_prox},
                      {"geom_gap", cert.geom_gap},
                      {"bound", cert.bound}};
  j["subgradient_distance_at_prox"] =
      subgradient_distance(c.problem, r.prox_point, c.problem.hyper.eps_smooth);
  write_json(std::filesystem::path(g.out_dir) / "envelope.json", j);
  say(g, j.dump(2));
  return kOk;
}

int cmd_verify(const Globals& g, const std::vector<std::string>& names, bool all, bool list,
               const std::string& out) {
  if (list) {
    for (const CheckEntry& e : check_registry()) {
      std::string claims;
      for (const auto& id : e.claims) claims += (claims.empty() ? "" : ", ") + id;
      std::cout << e.name << (e.slow ? " (slow)" : "") << ": " << claims << "\n";
    }
    return kOk;
  }
  const std::uint64_t seed = g.seed.value_or(0);
  std::vector<CheckReport> reports;
  if (all || names.empty()) reports = run_checks("", seed);
  for (const std::string& name : names) {
    for (CheckReport& r : run_checks(name, seed)) reports.push_back(std::move(r));
  }
  bool ok = true;
  for (const CheckReport& r : reports) {
    ok = ok && r.passed;
    say(g, std::string(r.passed ? "PASS " : "FAIL ") + r.name + "  measured " +
               format_double(r.measured) + "  bound " + format_double(r.bound));
  }
  const CoverageGap gap = coverage_gaps();
  json j = {{"reports", reports},
            {"passed", ok},
            {"claims_manifest_version", kClaimsManifestVersion},
            {"unclaimed", gap.unclaimed}};
  const std::filesystem::path path =
      out.empty() ? std::filesystem::path(g.out_dir) / "verify.json" : std::filesystem::path(out);
  write_json(path, j);
  return ok ? kOk : kCheckFailed;
}

int cmd_sweep(const Globals& g, std::vector<double> rhos) {
  const ExperimentConfig c = load(g);
  if (rhos.empty()) rhos = c.rho_list;
  if (rhos.empty()) {
    const double delta = c.problem.oracle.delta();
    rhos = {0.0, 0.25 * delta, 0.5 * delta, 0.75 * delta};
  }
  const SweepResult s = sweep_rho(c, rhos);
  write_sweep(g.out_dir, c, s);
  say(g, std::string(s.passed ? "PASS" : "FAIL") + " sweep-rho: affine residual " +
             format_double(s.max_affine_residual) + ", slope error " + format_double(s.max_slope_error) +
             ", rho=0 gap " + format_double(s.max_rho0_gap));
  return s.passed ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oracle-robust online preference alignment: exact objectives, R-SCGD, envelope certificates"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "override the config seeds with one seed");
  app.add_option("--out-dir", g.out_dir, "directory for artifacts")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0 keeps the runtime default)");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  std::size_t instances = 100;
  std::string decompose_out;
  auto* decompose = app.add_subcommand("decompose-check", "check the robust decomposition identity");
  decompose->add_option("--instances", instances)->capture_default_str();
  decompose->add_option("--out", decompose_out, "report JSON path");

  std::string constants_out;
  auto* constants = app.add_subcommand("constants", "compute the constants bundle at theta0");
  constants->add_option("--out", constants_out, "output JSON path");

  bool wall_time = false;
  auto* train = app.add_subcommand("train", "run R-SCGD for every seed and write traces");
  train->add_flag("--wall-time", wall_time, "record per-iterate wall time (breaks byte determinism)");

  std::string theta_text;
  double eps_prox = 0.0;
  auto* envelope = app.add_subcommand("envelope", "prox point, envelope gradient, and certificate");
  envelope->add_option("--theta", theta_text, "comma-separated point (default theta0)");
  envelope->add_option("--eps-prox", eps_prox, "inner tolerance (default from config)");

  std::vector<std::string> checks;
  bool all = false, list = false;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "run the executable claim checks");
  verify->add_option("--check", checks, "check name (repeatable)");
  verify->add_flag("--all", all, "run every non-slow check");
  verify->add_flag("--list", list, "list checks and the claims they cover");
  verify->add_option("--out", verify_out, "report JSON path");

  std::vector<double> rhos;
  auto* sweep = app.add_subcommand("sweep-rho", "evaluate the objective family across radii");
  sweep->add_option("--rho", rhos, "radii (default: config rho_list or 0, delta/4, delta/2, 3delta/4)")
      ->delimiter(',');

  auto* run = app.add_subcommand("run", "train, envelope, and summary");
  run->add_flag("--wall-time", wall_time, "record per-iterate wall time (breaks byte determinism)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (*decompose) return cmd_decompose(g, instances, decompose_out);
    if (*constants) return cmd_constants(g, constants_out);
    if (*train) return cmd_run(g, false, wall_time);
    if (*envelope) return cmd_envelope(g, theta_text, eps_prox);
    if (*verify) return cmd_verify(g, checks, all, list, verify_out);
    if (*sweep) return cmd_sweep(g, rhos);
    if (*run) return cmd_run(g, true, wall_time);
  } catch (const ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InadmissibleRadius& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
