#include "orpa/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include "orpa/errors.hpp"
#include "orpa/objective.hpp"

namespace orpa {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw ConfigInvalid(field + ": " + why);
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  for (const auto& item : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
      bad(where.empty() ? item.key() : where + "." + item.key(), "unknown field");
    }
  }
}

double get_number(const json& j, const char* key, const std::string& field, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) bad(field, "expected a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) bad(field, "must be finite");
  return v;
}

std::size_t get_count(const json& j, const char* key, const std::string& field, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer() || j[key].get<std::int64_t>() <= 0) {
    bad(field, "expected a positive integer");
  }
  return j[key].get<std::size_t>();
}

std::uint64_t get_seed(const json& j, const char* key, const std::string& field, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer() || j[key].get<std::int64_t>() < 0) {
    bad(field, "expected a nonnegative integer");
  }
  return j[key].get<std::uint64_t>();
}

std::vector<double> get_reals(const json& j, const std::string& field) {
  if (!j.is_array()) bad(field, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) bad(field, "expected finite numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json from_vector(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json environment_json(const Environment& env) {
  json rows = json::array();
  for (std::size_t x = 0; x < env.num_prompts(); ++x)
    for (std::size_t y = 0; y < env.num_responses(); ++y) rows.push_back(from_vector(env.feature(x, y)));
  return {{"prompts", env.prompts()}, {"responses", env.responses()}, {"mu", env.mu()},
          {"features", rows}};
}

Environment parse_environment(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) bad("environment", "expected an object");
  if (j.contains("file")) {
    reject_unknown(j, "environment", {"file"});
    if (!j["file"].is_string()) bad("environment.file", "expected a path");
    std::filesystem::path path = j["file"].get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    std::ifstream in(path);
    if (!in) bad("environment.file", "cannot open " + path.string());
    json inner;
    try {
      inner = json::parse(in);
    } catch (const json::exception& e) {
      bad("environment.file", e.what());
    }
    if (inner.contains("file")) bad("environment.file", "nested file references are not allowed");
    return parse_environment(inner, path.parent_path());
  }
  if (j.contains("random")) {
    reject_unknown(j, "environment", {"random"});
    const json& r = j["random"];
    const std::string f = "environment.random";
    reject_unknown(r, f, {"n_prompts", "n_responses", "feature_dim", "feature_bound", "target_b_psi",
                          "uniform_mu", "seed"});
    RandomEnvironmentSpec spec;
    spec.n_prompts = get_count(r, "n_prompts", f + ".n_prompts", 2);
    spec.n_responses = get_count(r, "n_responses", f + ".n_responses", 3);
    spec.feature_dim = get_count(r, "feature_dim", f + ".feature_dim", 2);
    spec.feature_bound = get_number(r, "feature_bound", f + ".feature_bound", 1.0);
    if (r.contains("target_b_psi")) spec.target_b_psi = get_number(r, "target_b_psi", f + ".target_b_psi", 1.0);
    if (r.contains("uniform_mu")) {
      if (!r["uniform_mu"].is_boolean()) bad(f + ".uniform_mu", "expected a boolean");
      spec.uniform_mu = r["uniform_mu"].get<bool>();
    }
    try {
      if (spec.n_prompts * spec.n_responses * spec.n_responses > kDefaultEnumerationCap) {
        bad(f, "|X| |Y|^2 exceeds the enumeration cap");
      }
      return make_random_environment(spec, get_seed(r, "seed", f + ".seed", 0));
    } catch (const InvalidInput& e) {
      bad(f, e.what());
    }
  }
  reject_unknown(j, "environment", {"prompts", "responses", "mu", "features", "b_psi"});
  if (!j.contains("features") || !j["features"].is_array() || j["features"].empty()) {
    bad("environment.features", "expected a nonempty array of feature rows");
  }
  const std::vector<double> mu = j.contains("mu") ? get_reals(j["mu"], "environment.mu") : std::vector<double>{};
  if (mu.empty()) bad("environment.mu", "required");
  const std::size_t n_rows = j["features"].size();
  if (n_rows % mu.size() != 0) bad("environment.features", "row count must be |X| |Y|");
  const std::size_t ny = n_rows / mu.size();
  std::size_t dim = 0;
  std::vector<double> table;
  for (std::size_t i = 0; i < n_rows; ++i) {
    const std::vector<double> row =
        get_reals(j["features"][i], "environment.features[" + std::to_string(i) + "]");
    if (i == 0) dim = row.size();
    if (row.size() != dim || dim == 0) bad("environment.features", "rows must share a positive length");
    table.insert(table.end(), row.begin(), row.end());
  }
  const auto names = [&](const char* key, std::size_t n, const char* prefix) {
    std::vector<std::string> out;
    if (!j.contains(key)) {
      for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
      return out;
    }
    if (!j[key].is_array()) bad(std::string("environment.") + key, "expected an array of strings");
    for (const auto& s : j[key]) {
      if (!s.is_string()) bad(std::string("environment.") + key, "expected strings");
      out.push_back(s.get<std::string>());
    }
    return out;
  };
  std::optional<double> b_psi;
  if (j.contains("b_psi")) b_psi = get_number(j, "b_psi", "environment.b_psi", 0.0);
  try {
    return Environment(names("prompts", mu.size(), "x"), names("responses", ny, "y"), mu, dim,
                       std::move(table), b_psi);
  } catch (const InvalidInput& e) {
    bad("environment", e.what());
  }
}

TrueOracle parse_oracle(const json& j, const Environment& env) {
  if (!j.is_object()) bad("oracle", "expected an object");
  try {
    if (j.contains("random")) {
      reject_unknown(j, "oracle", {"random"});
      const json& r = j["random"];
      reject_unknown(r, "oracle.random", {"scale", "seed"});
      return make_random_oracle(env, get_number(r, "scale", "oracle.random.scale", 1.0),
                                get_seed(r, "seed", "oracle.random.seed", 0));
    }
    reject_unknown(j, "oracle", {"reward"});
    if (!j.contains("reward") || !j["reward"].is_array() || j["reward"].size() != env.num_prompts()) {
      bad("oracle.reward", "expected one row per prompt");
    }
    std::vector<double> table;
    for (std::size_t x = 0; x < env.num_prompts(); ++x) {
      const std::vector<double> row = get_reals(j["reward"][x], "oracle.reward[" + std::to_string(x) + "]");
      if (row.size() != env.num_responses()) {
        bad("oracle.reward[" + std::to_string(x) + "]", "expected one entry per response");
      }
      table.insert(table.end(), row.begin(), row.end());
    }
    return TrueOracle(env.num_prompts(), env.num_responses(), std::move(table));
  } catch (const InvalidInput& e) {
    bad("oracle", e.what());
  }
}

json reward_json(const TrueOracle& oracle, const Environment& env) {
  json rows = json::array();
  for (std::size_t x = 0; x < env.num_prompts(); ++x) {
    json row = json::array();
    for (std::size_t y = 0; y < env.num_responses(); ++y) row.push_back(oracle.reward(x, y));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

json default_config_json() {
  return {{"version", kConfigVersion},
          {"environment",
           {{"random", {{"n_prompts", 2}, {"n_responses", 4}, {"feature_dim", 3}, {"seed", 0}}}}},
          {"oracle", {{"random", {{"scale", 1.0}, {"seed", 0}}}}},
          {"radius_d", 1.0},
          {"hyper",
           {{"beta", 1.0}, {"rho", 0.05}, {"eta", "auto"}, {"lambda_env", "auto"}, {"horizon_t", 200},
            {"batch_b", 8}, {"eps_smooth", 1e-8}}},
          {"seeds", {0}}};
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) bad("config", "expected a JSON object");
  reject_unknown(j, "", {"version", "environment", "oracle", "theta_ref", "radius_d", "theta0",
                         "theta0_seed", "hyper", "seeds", "oracle_mode", "eps_prox", "rho_list",
                         "sweep_probes", "constants"});
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kConfigVersion) {
    bad("version", "expected " + std::to_string(kConfigVersion));
  }
  if (!j.contains("environment")) bad("environment", "required");
  if (!j.contains("oracle")) bad("oracle", "required");

  ExperimentConfig c{{}, {}, Problem{parse_environment(j["environment"], base_dir), TrueOracle(1, 1, {0.0}),
                                     Vector{}, 1.0, Hyperparams{}},
                     {}, true, {0}, OracleMode::true_oracle, 1e-7, {}, 8, {}};
  Problem& p = c.problem;
  p.oracle = parse_oracle(j["oracle"], p.env);
  const auto d = static_cast<Eigen::Index>(p.env.feature_dim());

  p.theta_ref = Vector::Zero(d);
  if (j.contains("theta_ref")) {
    const auto v = get_reals(j["theta_ref"], "theta_ref");
    if (static_cast<Eigen::Index>(v.size()) != d) bad("theta_ref", "length must equal feature_dim");
    p.theta_ref = to_vector(v);
  }
  p.radius_d = get_number(j, "radius_d", "radius_d", 1.0);
  if (!(p.radius_d > 0.0)) bad("radius_d", "must be positive");

  const json hyper = j.value("hyper", json::object());
  if (!hyper.is_object()) bad("hyper", "expected an object");
  reject_unknown(hyper, "hyper", {"beta", "rho", "eps_smooth", "eta", "horizon_t", "batch_b", "lambda_env"});
  Hyperparams& h = p.hyper;
  h.beta = get_number(hyper, "beta", "hyper.beta", 1.0);
  h.rho = get_number(hyper, "rho", "hyper.rho", 0.0);
  h.eps_smooth = get_number(hyper, "eps_smooth", "hyper.eps_smooth", 1e-8);
  h.horizon_t = get_count(hyper, "horizon_t", "hyper.horizon_t", 200);
  h.batch_b = get_count(hyper, "batch_b", "hyper.batch_b", 8);
  c.auto_eta = !hyper.contains("eta") || hyper["eta"] == "auto";
  if (!c.auto_eta) {
    h.eta = get_number(hyper, "eta", "hyper.eta", 0.0);
    if (!(h.eta > 0.0)) bad("hyper.eta", "must be positive or \"auto\"");
  }
  const bool auto_lambda = !hyper.contains("lambda_env") || hyper["lambda_env"] == "auto";
  if (!auto_lambda) {
    h.lambda_env = get_number(hyper, "lambda_env", "hyper.lambda_env", 0.0);
    if (!(h.lambda_env > 0.0)) bad("hyper.lambda_env", "must be positive or \"auto\"");
  }
  if (!(h.beta > 0.0)) bad("hyper.beta", "must be positive");
  if (h.rho < 0.0) bad("hyper.rho", "must be nonnegative");
  if (!(h.eps_smooth > 0.0)) bad("hyper.eps_smooth", "must be positive");
  if (h.rho > 0.0 && h.rho >= p.oracle.delta()) {
    bad("hyper.rho", "inadmissible radius " + format_double(h.rho) +
                         ": the uncertainty radius must be below the oracle margin delta = " +
                         format_double(p.oracle.delta()));
  }

  if (j.contains("theta0")) {
    const auto v = get_reals(j["theta0"], "theta0");
    if (static_cast<Eigen::Index>(v.size()) != d) bad("theta0", "length must equal feature_dim");
    c.theta0 = to_vector(v);
    if (!is_feasible(p.at(c.theta0))) bad("theta0", "outside the feasible ball");
  } else {
    Rng rng = make_stream(get_seed(j, "theta0_seed", "theta0_seed", 0), "benchmark/theta0");
    c.theta0 = p.theta_ref + 0.5 * p.radius_d * random_unit_vector(p.env.feature_dim(), rng);
  }

  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty()) bad("seeds", "expected a nonempty array");
    c.seeds.clear();
    for (const auto& s : j["seeds"]) {
      if (!s.is_number_integer() || s.get<std::int64_t>() < 0) bad("seeds", "expected nonnegative integers");
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (j.contains("oracle_mode")) {
    if (!j["oracle_mode"].is_string()) bad("oracle_mode", "expected \"true\" or \"adversarial\"");
    try {
      c.mode = parse_oracle_mode(j["oracle_mode"].get<std::string>());
    } catch (const InvalidInput& e) {
      bad("oracle_mode", e.what());
    }
  }
  c.eps_prox = get_number(j, "eps_prox", "eps_prox", 1e-7);
  if (!(c.eps_prox > 0.0)) bad("eps_prox", "must be positive");
  if (j.contains("rho_list")) {
    c.rho_list = get_reals(j["rho_list"], "rho_list");
    for (double r : c.rho_list) {
      if (r < 0.0 || (r > 0.0 && r >= p.oracle.delta())) {
        bad("rho_list", "every radius must lie in [0, delta) with delta = " + format_double(p.oracle.delta()));
      }
    }
  }
  c.sweep_probes = get_count(j, "sweep_probes", "sweep_probes", 8);

  if (j.contains("constants")) {
    const json& k = j["constants"];
    reject_unknown(k, "constants", {"l_sail_smooth", "sigma2_sail", "sigma2_r", "n_probes",
                                    "smoothness_safety", "variance_safety", "seed"});
    if (k.contains("l_sail_smooth")) c.constants.l_sail_smooth = get_number(k, "l_sail_smooth", "constants.l_sail_smooth", 0.0);
    if (k.contains("sigma2_sail")) c.constants.sigma2_sail = get_number(k, "sigma2_sail", "constants.sigma2_sail", 0.0);
    if (k.contains("sigma2_r")) c.constants.sigma2_r = get_number(k, "sigma2_r", "constants.sigma2_r", 0.0);
    c.constants.n_probes = get_count(k, "n_probes", "constants.n_probes", 64);
    c.constants.smoothness_safety = get_number(k, "smoothness_safety", "constants.smoothness_safety", 1.5);
    c.constants.variance_safety = get_number(k, "variance_safety", "constants.variance_safety", 2.0);
    c.constants.seed = get_seed(k, "seed", "constants.seed", 0);
  }

  try {
    validate_problem(p);
  } catch (const Error& e) {
    bad("config", e.what());
  }

  json hyper_out = {{"beta", h.beta},           {"rho", h.rho},         {"eps_smooth", h.eps_smooth},
                    {"horizon_t", h.horizon_t}, {"batch_b", h.batch_b}};
  hyper_out["eta"] = c.auto_eta ? json("auto") : json(h.eta);
  hyper_out["lambda_env"] = auto_lambda ? json("auto") : json(h.lambda_env);
  json constants_out = {{"n_probes", c.constants.n_probes},
                        {"smoothness_safety", c.constants.smoothness_safety},
                        {"variance_safety", c.constants.variance_safety},
                        {"seed", c.constants.seed}};
  if (c.constants.l_sail_smooth) constants_out["l_sail_smooth"] = *c.constants.l_sail_smooth;
  if (c.constants.sigma2_sail) constants_out["sigma2_sail"] = *c.constants.sigma2_sail;
  if (c.constants.sigma2_r) constants_out["sigma2_r"] = *c.constants.sigma2_r;
  c.canonical = {{"version", kConfigVersion},
                 {"environment", environment_json(p.env)},
                 {"oracle", {{"reward", reward_json(p.oracle, p.env)}}},
                 {"theta_ref", from_vector(p.theta_ref)},
                 {"radius_d", p.radius_d},
                 {"theta0", from_vector(c.theta0)},
                 {"hyper", hyper_out},
                 {"seeds", c.seeds},
                 {"oracle_mode", to_string(c.mode)},
                 {"eps_prox", c.eps_prox},
                 {"rho_list", c.rho_list},
                 {"sweep_probes", c.sweep_probes},
                 {"constants", constants_out}};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(c.canonical.dump())));
  c.digest = buf;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigInvalid(std::string("config: ") + e.what());
  }
  return parse_config(j, path.parent_path());
}

ExperimentConfig reparse(const ExperimentConfig& config) { return parse_config(config.canonical); }

ConstantsBundle config_constants(const ExperimentConfig& config) {
  return constants_bundle(config.problem, config.theta0, config.constants);
}

json artifact_header(const ExperimentConfig& config) {
  return {{"config_digest", config.digest},
          {"artifact_version", kArtifactVersion},
          {"trace_schema_version", kTraceSchemaVersion},
          {"claims_manifest_version", kClaimsManifestVersion}};
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunSettings& settings) {
  ExperimentResult out;
  out.bundle = config_constants(config);
  Problem problem = config.problem;
  ProxOptions options;
  options.eps_prox = config.eps_prox;
  out.f_env0 = prox_solve(problem, out.bundle, config.theta0, options).env_value;
  if (config.auto_eta) {
    const StepsizeChoice step = corollary_stepsize(out.bundle, problem.hyper.horizon_t, out.f_env0);
    if (step.degenerate) {
      throw ConfigInvalid("hyper.eta: the automatic stepsize is undefined because the envelope at "
                          "theta0 already equals F_inf; set eta explicitly");
    }
    problem.hyper.eta = step.eta;
  }
  out.eta = problem.hyper.eta;

  const std::size_t n = config.seeds.size();
  out.seeds.resize(n);
  std::vector<std::exception_ptr> errors(n);
  RunOptions run_options;
  run_options.mode = config.mode;
  run_options.log_exact_loss = true;
  run_options.record_wall_time = settings.record_wall_time;
  const double kappa_eps = out.bundle.kappa_smoothed(problem.hyper.eps_smooth);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      SeedResult& r = out.seeds[i];
      r.seed = config.seeds[i];
      r.trace = rscgd_run(problem, config.theta0, r.seed, run_options);
      if (settings.with_envelope) {
        r.envelope = envelope_grad_along_trace(problem, out.bundle, r.trace, options);
        const ProxResult at_out =
            prox_solve(problem, out.bundle, r.trace.iterates[r.trace.output_index], options);
        r.certificate = stationarity_certificate(at_out, out.bundle.lambda_env, kappa_eps, options.eps_prox);
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const ConstantsBundle& b = out.bundle;
  json summary = artifact_header(config);
  summary["constants"] = {{"b_psi", b.b_psi},         {"radius_d", b.radius_d},
                          {"beta", b.beta},           {"lambda", b.lambda},
                          {"kappa_r", b.kappa_r},     {"l_sail_smooth", b.l_sail_smooth},
                          {"kappa", b.kappa},         {"lambda_env", b.lambda_env},
                          {"l_env", b.l_env},         {"g_grad_sail", b.g_grad_sail},
                          {"g_sub_r", b.g_sub_r},     {"sigma2_sail", b.sigma2_sail},
                          {"sigma2_r", b.sigma2_r},   {"g_tot2", b.g_tot2},
                          {"f_inf", b.f_inf},         {"l_sail_estimated", b.l_sail_estimated},
                          {"sigma2_estimated", b.sigma2_estimated}};
  summary["eta"] = out.eta;
  summary["eta_auto"] = config.auto_eta;
  summary["horizon_t"] = problem.hyper.horizon_t;
  summary["f_env0"] = out.f_env0;
  json per_seed = json::array();
  KahanSum mean_sq;
  for (const SeedResult& r : out.seeds) {
    json s = {{"seed", r.seed},
              {"output_index", r.trace.output_index},
              {"final_loss", r.trace.losses.back()}};
    if (settings.with_envelope) {
      s["mean_sq_env_grad"] = r.envelope.mean_sq_grad;
      s["env_grad_norm_output"] = r.trace.grad_norms_env[r.trace.output_index];
      s["certificate"] = {{"env_grad_norm", r.certificate.env_grad_norm},
                          {"eps_prox", r.certificate.eps_prox},
                          {"geom_gap", r.certificate.geom_gap},
                          {"bound", r.certificate.bound}};
      mean_sq.add(r.envelope.mean_sq_grad);
    }
    per_seed.push_back(s);
  }
  summary["seeds"] = per_seed;
  if (settings.with_envelope) {
    const double measured = mean_sq.value() / static_cast<double>(n);
    const double rate = rate_bound_rhs(b, out.eta, problem.hyper.horizon_t, out.f_env0);
    const double tuned = tuned_rate_bound(b, problem.hyper.horizon_t, out.f_env0);
    summary["measured_mean_sq_env_grad"] = measured;
    summary["rate_bound"] = rate;
    summary["rate_bound_holds"] = measured <= rate;
    summary["tuned_bound"] = tuned;
    if (config.auto_eta) summary["tuned_bound_holds"] = measured <= tuned;
    summary["smoothing_bias"] = b.lambda * problem.hyper.eps_smooth;
  }
  out.summary = std::move(summary);
  return out;
}

namespace {

void write_header(std::ostream& os, const ExperimentConfig& config, const std::string& kind,
                  const std::vector<std::pair<std::string, std::string>>& extra) {
  os << "# orpa " << kind << "\n";
  os << "# trace_schema_version: " << kTraceSchemaVersion << "\n";
  os << "# artifact_version: " << kArtifactVersion << "\n";
  os << "# claims_manifest_version: " << kClaimsManifestVersion << "\n";
  os << "# config_digest: " << config.digest << "\n";
  for (const auto& [k, v] : extra) os << "# " << k << ": " << v << "\n";
}

}  // namespace

void write_trace_csv(std::ostream& os, const ExperimentConfig& config, const SeedResult& seed, double eta) {
  const RunTrace& t = seed.trace;
  write_header(os, config, "trace",
               {{"seed", std::to_string(seed.seed)},
                {"oracle_mode", to_string(t.mode)},
                {"eta", format_double(eta)},
                {"output_index", std::to_string(t.output_index)}});
  const Eigen::Index d = t.iterates.front().size();
  os << "t,loss,env_grad_norm,prox_residual,inner_iters,wall_ns";
  for (Eigen::Index k = 0; k < d; ++k) os << ",theta_" << k;
  os << "\n";
  const bool env = !t.grad_norms_env.empty();
  for (std::size_t i = 0; i < t.iterates.size(); ++i) {
    os << i << "," << format_double(t.losses.empty() ? NAN : t.losses[i]) << ","
       << format_double(env ? t.grad_norms_env[i] : NAN) << ","
       << format_double(env ? seed.envelope.residuals[i] : NAN) << ","
       << (env ? seed.envelope.inner_iters[i] : 0) << "," << t.wall_ns[i];
    for (Eigen::Index k = 0; k < d; ++k) os << "," << format_double(t.iterates[i][k]);
    os << "\n";
  }
}

void write_plot_csv(std::ostream& os, const ExperimentConfig& config, const ExperimentResult& result) {
  write_header(os, config, "plot", {{"seeds", std::to_string(result.seeds.size())}});
  os << "t,mean_sq_env_grad,running_mean_sq_env_grad\n";
  const std::size_t len = result.seeds.front().trace.grad_norms_env.size();
  KahanSum running;
  for (std::size_t t = 0; t < len; ++t) {
    KahanSum acc;
    for (const SeedResult& s : result.seeds) {
      const double g = s.trace.grad_norms_env[t];
      acc.add(g * g);
    }
    const double mean = acc.value() / static_cast<double>(result.seeds.size());
    running.add(mean);
    os << t << "," << format_double(mean) << ","
       << format_double(running.value() / static_cast<double>(t + 1)) << "\n";
  }
}

std::vector<std::filesystem::path> write_artifacts(const std::filesystem::path& dir,
                                                   const ExperimentConfig& config,
                                                   const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  const auto open = [&](const std::string& name) {
    paths.push_back(dir / name);
    std::ofstream os(paths.back());
    if (!os) throw Error("cannot write " + paths.back().string());
    return os;
  };
  for (const SeedResult& s : result.seeds) {
    std::ofstream os = open("trace_seed" + std::to_string(s.seed) + ".csv");
    write_trace_csv(os, config, s, result.eta);
  }
  {
    std::ofstream os = open("summary.json");
    os << result.summary.dump(2) << "\n";
  }
  if (!result.seeds.front().trace.grad_norms_env.empty()) {
    std::ofstream os = open("plot.csv");
    write_plot_csv(os, config, result);
  }
  return paths;
}

SweepResult sweep_rho(const ExperimentConfig& config, std::vector<double> rho_list) {
  if (rho_list.empty()) throw ConfigInvalid("rho_list: at least one radius is required");
  std::sort(rho_list.begin(), rho_list.end());
  const double delta = config.problem.oracle.delta();
  for (double r : rho_list) {
    if (r < 0.0 || (r > 0.0 && r >= delta)) {
      throw ConfigInvalid("rho_list: radius " + format_double(r) + " outside [0, delta) with delta = " +
                          format_double(delta));
    }
  }
  std::vector<Vector> probes{config.theta0};
  Rng rng = make_stream(config.seeds.front(), "sweep/probes");
  const PolicyParams geom = config.problem.at(config.problem.theta_ref);
  for (std::size_t i = 0; i < config.sweep_probes; ++i) probes.push_back(random_feasible(geom, rng));

  SweepResult out;
  Problem p = config.problem;
  const double beta = p.hyper.beta;
  const double n = static_cast<double>(rho_list.size());
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const Vector& theta = probes[k];
    const double sail = sail_loss_exact(p, theta);
    const double penalty = robust_penalty_exact(p, theta);
    std::vector<double> values;
    for (double rho : rho_list) {
      p.hyper.rho = rho;
      SweepRow row{k, rho, sail, penalty, robust_objective_closed_form(p, theta),
                   robust_objective_worstcase(p, theta)};
      out.max_path_gap = std::max(out.max_path_gap, std::abs(row.robust - row.robust_worstcase));
      if (rho == 0.0) out.max_rho0_gap = std::max(out.max_rho0_gap, std::abs(row.robust - sail));
      if (!values.empty()) out.max_decrease = std::max(out.max_decrease, values.back() - row.robust);
      values.push_back(row.robust);
      out.rows.push_back(row);
    }
    if (rho_list.size() >= 2 && rho_list.front() < rho_list.back()) {
      double mx = 0.0, my = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        mx += rho_list[i];
        my += values[i];
      }
      mx /= n;
      my /= n;
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        sxy += (rho_list[i] - mx) * (values[i] - my);
        sxx += (rho_list[i] - mx) * (rho_list[i] - mx);
      }
      const double slope = sxy / sxx;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double fit = my + slope * (rho_list[i] - mx);
        out.max_affine_residual = std::max(out.max_affine_residual, std::abs(values[i] - fit));
      }
      out.max_slope_error = std::max(out.max_slope_error, std::abs(slope - beta * penalty));
    }
  }
  out.passed = out.max_affine_residual <= 1e-10 && out.max_slope_error <= 1e-8 &&
               out.max_rho0_gap <= 1e-12 && out.max_decrease <= 1e-12 && out.max_path_gap <= 1e-10;
  return out;
}

void write_sweep(const std::filesystem::path& dir, const ExperimentConfig& config, const SweepResult& sweep) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "sweep_rho.csv");
    if (!os) throw Error("cannot write " + (dir / "sweep_rho.csv").string());
    write_header(os, config, "sweep_rho", {});
    os << "probe,rho,l_sail,penalty,robust,robust_worstcase\n";
    for (const SweepRow& r : sweep.rows) {
      os << r.probe << "," << format_double(r.rho) << "," << format_double(r.sail) << ","
         << format_double(r.penalty) << "," << format_double(r.robust) << ","
         << format_double(r.robust_worstcase) << "\n";
    }
  }
  json j = artifact_header(config);
  j["max_affine_residual"] = sweep.max_affine_residual;
  j["max_slope_error"] = sweep.max_slope_error;
  j["max_rho0_gap"] = sweep.max_rho0_gap;
  j["max_decrease"] = sweep.max_decrease;
  j["max_path_gap"] = sweep.max_path_gap;
  j["passed"] = sweep.passed;
  std::ofstream os(dir / "sweep_rho.json");
  if (!os) throw Error("cannot write " + (dir / "sweep_rho.json").string());
  os << j.dump(2) << "\n";
}

}  // namespace orpa
