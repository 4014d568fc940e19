#include "orpa/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Eigenvalues>

#include "orpa/constants.hpp"
#include "orpa/envelope.hpp"
#include "orpa/errors.hpp"
#include "orpa/objective.hpp"
#include "orpa/optimizer.hpp"

namespace orpa {

using nlohmann::json;

void to_json(json& j, const CheckReport& r) {
  j = json{{"name", r.name},
           {"claim", r.claim},
           {"passed", r.passed},
           {"measured", r.measured},
           {"bound", r.bound},
           {"slack", r.slack},
           {"tolerance", r.tolerance},
           {"config_digest", r.config_digest},
           {"seed", r.seed},
           {"detail", r.detail}};
}

std::string config_digest(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

namespace {

CheckReport make_report(std::string name, std::string claim, double measured, double bound,
                        double tolerance, const json& config, std::uint64_t seed,
                        json detail = json::object()) {
  CheckReport r;
  r.name = std::move(name);
  r.claim = std::move(claim);
  r.measured = measured;
  r.bound = bound;
  r.slack = bound - measured;
  r.tolerance = tolerance;
  r.passed = std::isfinite(r.slack) && r.slack >= -tolerance;
  r.config_digest = config_digest(config);
  r.seed = seed;
  r.detail = std::move(detail);
  return r;
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& g, const Vector& x, double h) {
  Matrix j(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    j.col(i) = (g(xp) - g(xm)) / (2.0 * h);
  }
  return 0.5 * (j + j.transpose());
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform_index(rng, hi - lo + 1));
}

json spec_json(const InstanceSpec& s) {
  return {{"nx", s.n_prompts},       {"ny", s.n_responses}, {"d", s.feature_dim},
          {"rho_fraction", s.rho_fraction}, {"beta", s.beta}, {"radius", s.radius_d},
          {"eps", s.eps_smooth}};
}

/// Smallest |s| over triples that actually move with theta.
double min_active_logit(const Problem& problem, const Vector& theta) {
  double best = std::numeric_limits<double>::infinity();
  const PolicyParams params = problem.at(theta);
  for (const auto& z : enumerate_triples(problem.env)) {
    if (delta_psi(problem.env, z).norm() == 0.0) continue;
    best = std::min(best, std::abs(pairwise_logit(problem.env, params, z)));
  }
  return best;
}

}  // namespace

Problem make_instance(const InstanceSpec& spec, std::uint64_t seed) {
  RandomEnvironmentSpec env_spec;
  env_spec.n_prompts = spec.n_prompts;
  env_spec.n_responses = spec.n_responses;
  env_spec.feature_dim = spec.feature_dim;
  Environment env = make_random_environment(env_spec, seed);
  TrueOracle oracle = make_random_oracle(env, spec.reward_scale, seed);
  Rng rng = make_stream(seed, "instance/theta_ref");
  Vector theta_ref(static_cast<Eigen::Index>(spec.feature_dim));
  for (Eigen::Index i = 0; i < theta_ref.size(); ++i) theta_ref[i] = uniform(rng, -0.5, 0.5);
  Hyperparams hyper;
  hyper.beta = spec.beta;
  hyper.rho = spec.rho_fraction * oracle.delta();
  hyper.eps_smooth = spec.eps_smooth;
  Problem problem{std::move(env), std::move(oracle), theta_ref, spec.radius_d, hyper};
  validate_problem(problem);
  return problem;
}

Problem benchmark_problem(std::uint64_t seed, bool nominal) {
  InstanceSpec spec;
  spec.n_prompts = 2;
  spec.n_responses = 4;
  spec.feature_dim = 3;
  spec.rho_fraction = 0.0;
  Problem problem = make_instance(spec, seed);
  problem.hyper.rho = nominal ? 0.0 : std::min(0.1, 0.5 * problem.oracle.delta());
  problem.hyper.batch_b = 8;
  return problem;
}

Vector benchmark_start(const Problem& problem, std::uint64_t seed) {
  Rng rng = make_stream(seed, "benchmark/theta0");
  return problem.theta_ref + 0.5 * problem.radius_d * random_unit_vector(problem.dim(), rng);
}

CheckReport check_decomposition(std::uint64_t seed, std::size_t n_instances) {
  const json config = {{"check", "decomposition"}, {"seed", seed}, {"n_instances", n_instances}};
  Rng rng = make_stream(seed, "verify/decomposition");
  double worst = 0.0, worst_sup = 0.0, worst_rho0 = 0.0, worst_ref = 0.0;
  for (std::size_t i = 0; i < n_instances; ++i) {
    InstanceSpec spec;
    spec.n_prompts = pick(rng, 1, 3);
    spec.n_responses = pick(rng, 1, 5);
    spec.feature_dim = pick(rng, 1, 4);
    spec.beta = uniform(rng, 0.1, 3.0);
    spec.radius_d = uniform(rng, 0.5, 3.0);
    spec.reward_scale = uniform(rng, 0.2, 2.0);
    spec.rho_fraction = i % 10 == 0 ? 0.0 : uniform(rng, 0.0, 0.99);
    const Problem problem = make_instance(spec, rng());
    const bool at_ref = i % 7 == 0;
    const Vector theta = at_ref ? problem.theta_ref : random_feasible(problem.at(problem.theta_ref), rng);
    const double closed = robust_objective_closed_form(problem, theta);
    const double adv = std::abs(adversarial_oracle_loss(problem, theta) - closed);
    const double sup = std::abs(robust_objective_worstcase(problem, theta) - closed);
    worst = std::max({worst, adv, sup});
    worst_sup = std::max(worst_sup, sup);
    if (spec.rho_fraction == 0.0) worst_rho0 = std::max(worst_rho0, adv);
    if (at_ref) worst_ref = std::max(worst_ref, std::abs(closed - std::log(2.0)));
  }
  json detail = {{"max_diff_pointwise_sup_path", worst_sup},
                 {"max_diff_rho0", worst_rho0},
                 {"max_abs_minus_log2_at_ref", worst_ref}};
  return make_report("decomposition", "robust-decomposition", worst, kIdentityTol, 0.0, config,
                     seed, detail);
}

CheckReport check_counterexample() {
  const json config = {{"check", "counterexample"}};
  Problem problem{make_two_response_example(), TrueOracle(1, 2, {0.0, 0.0}),
                  Vector::Zero(1), 3.0, Hyperparams{}};
  const auto r = [&](double t) { return robust_penalty_exact(problem, Vector::Constant(1, t)); };
  double err = std::abs(r(0.0));
  for (double t : {0.5, 1.0, 2.0, -1.0}) {
    const double closed = 2.0 * std::abs(t) * std::exp(t) / std::pow(1.0 + std::exp(t), 2);
    err = std::max(err, std::abs(r(t) - closed));
  }
  const double e = std::exp(1.0);
  const double expected = 2.0 * e * (e - 1.0) * (std::pow(e, 3) - 1.0) /
                          (std::pow(1.0 + e, 2) * std::pow(1.0 + e * e, 2));
  const double gap = r(1.0) - 0.5 * r(2.0);
  err = std::max(err, std::abs(gap - expected));
  CheckReport rep = make_report("counterexample", "penalty-nonconvexity", err, 1e-12, 0.0, config, 0,
                                {{"gap", gap}, {"expected_gap", expected}});
  rep.passed = rep.passed && gap > 0.0;
  return rep;
}

CheckReport check_pointwise_sup(std::uint64_t seed, std::size_t n_samples, std::size_t grid_points) {
  const json config = {{"check", "pointwise_sup"}, {"seed", seed}, {"n_samples", n_samples},
                       {"grid_points", grid_points}};
  Rng rng = make_stream(seed, "verify/pointwise_sup");
  double worst = 0.0, below = 0.0;
  const double n1 = static_cast<double>(grid_points - 1);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double p = uniform(rng, 0.01, 0.99);
    const double rho = uniform(rng, 0.0, 0.99) * std::min(p, 1.0 - p);
    const double a = uniform(rng, 0.0, 5.0), b = uniform(rng, 0.0, 5.0);
    const double closed = pointwise_sup_value(p, rho, a, b);
    double grid = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < grid_points; ++j) {
      const double q = (p - rho) + 2.0 * rho * static_cast<double>(j) / n1;
      grid = std::max(grid, q * a + (1.0 - q) * b);
    }
    const double scale = std::max(std::abs(a - b), std::numeric_limits<double>::min());
    worst = std::max(worst, std::abs(closed - grid) / scale);
    below = std::max(below, grid - closed);
  }
  CheckReport rep = make_report("pointwise_sup", "pointwise-worst-case", worst, 2e-5, 0.0, config,
                                seed, {{"max_grid_minus_closed", below}});
  rep.passed = rep.passed && below <= 1e-12;
  return rep;
}

std::vector<CheckReport> check_gradient_exactness(std::uint64_t seed, std::size_t n_theta) {
  const double eps = 1e-6;
  const std::vector<InstanceSpec> classes = {{2, 3, 2, 0.5, 1.0, 1.0, 1.0, eps},
                                             {3, 5, 4, 0.5, 2.0, 1.5, 1.0, eps},
                                             {1, 4, 3, 0.5, 0.5, 2.0, 1.0, eps}};
  std::vector<CheckReport> out;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const json config = {{"check", "gradient_exactness"}, {"seed", seed}, {"n_theta", n_theta},
                         {"instance", spec_json(classes[c])}};
    const Problem problem = make_instance(classes[c], stream_seed(seed, "class" + std::to_string(c)));
    Rng rng = make_stream(seed, "verify/gradient_exactness/" + std::to_string(c));
    double worst_sail = 0.0, worst_pen = 0.0;
    for (std::size_t i = 0; i < n_theta; ++i) {
      const Vector theta = random_feasible(problem.at(problem.theta_ref), rng);
      const double h = 1e-5 * std::max(1.0, theta.norm());
      const Vector gs = sail_grad_exact(problem, theta);
      const Vector fs =
          fd_gradient([&](const Vector& u) { return sail_loss_exact(problem, u); }, theta, h);
      worst_sail = std::max(worst_sail, (fs - gs).norm() / std::max(gs.norm(), 1e-12));
      const Vector gp = smoothed_penalty_grad(problem, theta, eps);
      const Vector fp = fd_gradient(
          [&](const Vector& u) { return robust_penalty_smoothed(problem, u, eps); }, theta, h);
      worst_pen = std::max(worst_pen, (fp - gp).norm() / std::max(gp.norm(), 1e-12));
    }
    const std::string tag = "/class" + std::to_string(c);
    out.push_back(make_report("gradient_exactness/sail" + tag, "gradient-formulas", worst_sail,
                              1e-5, 0.0, config, seed));
    out.push_back(make_report("gradient_exactness/penalty" + tag, "gradient-formulas", worst_pen,
                              1e-5, 0.0, config, seed));
  }
  return out;
}

std::vector<CheckReport> check_unbiasedness(std::uint64_t seed, std::size_t n_samples) {
  const std::vector<InstanceSpec> classes = {{2, 3, 2, 0.5, 1.0, 1.0, 1.0, 1e-8},
                                             {2, 4, 3, 0.5, 1.5, 1.5, 1.0, 1e-8}};
  const json config = {{"check", "unbiasedness"}, {"seed", seed}, {"n_samples", n_samples}};
  std::size_t coords = 0, fail_s = 0, fail_r = 0;
  double max_z_s = 0.0, max_z_r = 0.0;
  const double n = static_cast<double>(n_samples);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const std::string tag = "verify/unbiasedness/" + std::to_string(c);
    const Problem problem = make_instance(classes[c], stream_seed(seed, tag));
    Rng probe = make_stream(seed, tag + "/theta");
    const Vector theta = random_on_shell(problem.at(problem.theta_ref), 0.5, probe);
    Rng triples = make_stream(seed, tag + "/triples"), labels = make_stream(seed, tag + "/labels");
    const Eigen::Index d = theta.size();
    Vector sum_s = Vector::Zero(d), sq_s = Vector::Zero(d), sum_r = Vector::Zero(d),
           sq_r = Vector::Zero(d);
    for (std::size_t i = 0; i < n_samples; ++i) {
      const MiniBatch batch = form_batch(problem, theta, 1, OracleMode::true_oracle, triples, labels);
      const Vector gs = stoch_grad_sail(problem, theta, batch);
      const Vector gr = stoch_subgrad_penalty(problem, theta, batch);
      sum_s += gs;
      sq_s += gs.cwiseProduct(gs);
      sum_r += gr;
      sq_r += gr.cwiseProduct(gr);
    }
    const Vector exact_s = sail_grad_exact(problem, theta);
    const Vector exact_r = penalty_subgrad_exact(problem, theta);
    const auto zscore = [n](double sum, double sq, double exact) {
      const double mean = sum / n;
      const double se = std::sqrt(std::max(sq / n - mean * mean, 0.0) / n);
      return se > 0.0 ? std::abs(mean - exact) / se : (mean == exact ? 0.0 : INFINITY);
    };
    for (Eigen::Index k = 0; k < d; ++k) {
      const double zs = zscore(sum_s[k], sq_s[k], exact_s[k]);
      const double zr = zscore(sum_r[k], sq_r[k], exact_r[k]);
      max_z_s = std::max(max_z_s, zs);
      max_z_r = std::max(max_z_r, zr);
      fail_s += zs > 4.0;
      fail_r += zr > 4.0;
      ++coords;
    }
  }
  const double tail = std::erfc(4.0 / std::sqrt(2.0));
  const double allowed = std::ceil(static_cast<double>(coords) * tail);
  return {make_report("unbiasedness/sail", "oracle-unbiasedness", static_cast<double>(fail_s),
                      allowed, 0.0, config, seed, {{"coordinates", coords}, {"max_z", max_z_s}}),
          make_report("unbiasedness/penalty", "oracle-unbiasedness", static_cast<double>(fail_r),
                      allowed, 0.0, config, seed, {{"coordinates", coords}, {"max_z", max_z_r}})};
}

std::vector<CheckReport> check_constant_bounds(std::uint64_t seed, std::size_t n_probes) {
  const InstanceSpec spec{3, 4, 3, 0.5, 1.5, 2.0, 1.0, 1e-8};
  const json config = {{"check", "constant_bounds"}, {"seed", seed}, {"n_probes", n_probes},
                       {"instance", spec_json(spec)}};
  Problem problem = make_instance(spec, stream_seed(seed, "verify/constant_bounds"));
  problem.hyper.batch_b = 4;
  const ConstantsBundle bundle = constants_bundle(problem, problem.theta_ref);
  const double b = problem.env.b_psi();
  Rng rng = make_stream(seed, "verify/constant_bounds/probes");
  Rng triples = make_stream(seed, "verify/constant_bounds/triples");
  Rng labels = make_stream(seed, "verify/constant_bounds/labels");
  const PolicyParams geom = problem.at(problem.theta_ref);

  double pol = 0.0, tri = 0.0, fisher = 0.0, grad = 0.0, lip = 0.0, moment = 0.0;
  const std::size_t n_batches = 20;
  for (std::size_t i = 0; i < n_probes; ++i) {
    Vector theta = i == 0 ? problem.theta_ref
                          : (i % 2 == 0 ? random_on_shell(geom, 1.0, rng) : random_feasible(geom, rng));
    const PolicyParams params = problem.at(theta);
    for (std::size_t x = 0; x < problem.env.num_prompts(); ++x)
      for (std::size_t y = 0; y < problem.env.num_responses(); ++y)
        pol = std::max(pol, policy_score(problem.env, params, x, y).norm());
    for (const auto& z : enumerate_triples(problem.env))
      tri = std::max(tri, triple_score(problem.env, params, z).norm());
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(fisher_information(problem.env, params));
    fisher = std::max(fisher, eig.eigenvalues().cwiseAbs().maxCoeff());
    grad = std::max(grad, sail_grad_exact(problem, theta).norm());

    const double step = (i % 3 == 0 ? 1.0 : 1e-3) * problem.radius_d;
    const Vector other = project_feasible(params, theta + step * random_unit_vector(theta.size(), rng));
    const double dist = (other - theta).norm();
    if (dist > 0.0) {
      lip = std::max(lip, std::abs(robust_penalty_exact(problem, other) -
                                   robust_penalty_exact(problem, theta)) / dist);
    }

    double acc = 0.0;
    for (std::size_t k = 0; k < n_batches; ++k) {
      const MiniBatch batch = form_batch(problem, theta, problem.hyper.batch_b,
                                         OracleMode::true_oracle, triples, labels);
      acc += composite_direction(problem, theta, batch).squaredNorm();
    }
    moment = std::max(moment, acc / static_cast<double>(n_batches));
  }
  return {
      make_report("constant_bounds/policy_score", "policy-regularity", pol, 2.0 * b, kOneSidedTol,
                  config, seed),
      make_report("constant_bounds/triple_score", "policy-regularity", tri, 4.0 * b, kOneSidedTol,
                  config, seed),
      make_report("constant_bounds/fisher", "fisher-bound", fisher, 4.0 * b * b, kOneSidedTol,
                  config, seed),
      make_report("constant_bounds/sail_grad", "gradient-bounds", grad, bundle.g_grad_sail,
                  kOneSidedTol, config, seed),
      make_report("constant_bounds/penalty_lipschitz", "gradient-bounds", lip, bundle.g_sub_r,
                  kOneSidedTol, config, seed),
      make_report("constant_bounds/second_moment", "second-moment-bound", moment, bundle.g_tot2,
                  kOneSidedTol, config, seed, {{"batches_per_probe", n_batches}})};
}

std::vector<CheckReport> check_weak_convexity(std::uint64_t seed, std::size_t n_pairs,
                                              std::vector<double> eps_list) {
  const InstanceSpec spec{2, 3, 3, 0.5, 1.0, 1.5, 1.0, 1e-8};
  const json config = {{"check", "weak_convexity"}, {"seed", seed}, {"n_pairs", n_pairs},
                       {"eps_list", eps_list}, {"instance", spec_json(spec)}};
  const Problem problem = make_instance(spec, stream_seed(seed, "verify/weak_convexity"));
  const ConstantsBundle bundle = constants_bundle(problem, problem.theta_ref);
  const PolicyParams geom = problem.at(problem.theta_ref);
  Rng rng = make_stream(seed, "verify/weak_convexity/pairs");

  // Curvature a secant needs: (f(mid) - chord) / (t (1 - t) |a - b|^2 / 2).
  const auto secant_need = [&](const std::function<double(const Vector&)>& f, const Vector& a,
                               const Vector& c, double t) {
    const Vector mid = t * a + (1.0 - t) * c;
    const double excess = f(mid) - t * f(a) - (1.0 - t) * f(c);
    return excess / (0.5 * t * (1.0 - t) * (a - c).squaredNorm());
  };

  double need_r = -INFINITY, need_f = -INFINITY;
  const auto r = [&](const Vector& u) { return robust_penalty_exact(problem, u); };
  const auto f = [&](const Vector& u) { return robust_objective_closed_form(problem, u); };
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const Vector a = random_feasible(geom, rng), c = random_feasible(geom, rng);
    const double t = uniform(rng, 0.01, 0.99);
    need_r = std::max(need_r, secant_need(r, a, c, t));
    need_f = std::max(need_f, secant_need(f, a, c, t));
  }

  Problem example{make_two_response_example(), TrueOracle(1, 2, {0.0, 0.0}), Vector::Zero(1), 3.0,
                  Hyperparams{}};
  const auto r1 = [&](const Vector& u) { return robust_penalty_exact(example, u); };
  double need_ex = -INFINITY;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const Vector a = Vector::Constant(1, uniform(rng, 1.0, 2.0));
    const Vector c = Vector::Constant(1, uniform(rng, 1.0, 2.0));
    if (a[0] == c[0]) continue;
    need_ex = std::max(need_ex, secant_need(r1, a, c, uniform(rng, 0.01, 0.99)));
  }

  std::vector<CheckReport> out = {
      make_report("weak_convexity/penalty_secant", "penalty-weak-convexity", need_r, bundle.kappa_r,
                  kOneSidedTol, config, seed),
      make_report("weak_convexity/composite_secant", "composite-weak-convexity", need_f,
                  bundle.kappa, kOneSidedTol, config, seed,
                  {{"l_sail_smooth", bundle.l_sail_smooth}}),
      make_report("weak_convexity/example_secant", "penalty-weak-convexity", need_ex,
                  kappa_r_bound(example.env.b_psi(), example.radius_d), kOneSidedTol, config, seed,
                  {{"nonconvexity_seen", need_ex > 0.0}})};

  const std::size_t n_hess = std::max<std::size_t>(1, n_pairs / 10);
  for (double eps : eps_list) {
    double worst = INFINITY;
    for (std::size_t i = 0; i < n_hess; ++i) {
      const Vector theta = random_feasible(geom, rng);
      const Matrix h = fd_jacobian(
          [&](const Vector& u) { return smoothed_penalty_grad(problem, u, eps); }, theta, 1e-7);
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
      worst = std::min(worst, eig.eigenvalues().minCoeff());
    }
    char tag[32];
    std::snprintf(tag, sizeof tag, "%g", eps);
    out.push_back(make_report(std::string("weak_convexity/smoothed_hessian/eps=") + tag,
                              "smoothed-hessian-bound", -worst,
                              kappa_eps_bound(problem.env.b_psi(), problem.radius_d, eps),
                              kOneSidedTol, config, seed, {{"min_eigenvalue", worst}}));
  }
  return out;
}

std::vector<CheckReport> check_convergence(std::uint64_t seed, std::size_t seed_count,
                                           std::vector<std::size_t> t_list) {
  std::vector<CheckReport> out;
  ProxOptions tight;
  tight.eps_prox = 1e-10;
  ProxOptions along;
  along.eps_prox = 1e-7;
  for (bool nominal : {false, true}) {
    const std::string variant = nominal ? "nominal" : "robust";
    const json config = {{"check", "convergence"}, {"seed", seed}, {"seed_count", seed_count},
                         {"t_list", t_list}, {"variant", variant}};
    Problem problem = benchmark_problem(seed, nominal);
    const Vector theta0 = benchmark_start(problem, seed);
    const ConstantsBundle bundle = constants_bundle(problem, theta0);
    const double f_env0 = prox_solve(problem, bundle, theta0, tight).env_value;

    std::vector<double> measured;
    for (std::size_t horizon : t_list) {
      const StepsizeChoice step = corollary_stepsize(bundle, horizon, f_env0);
      if (step.degenerate) throw InvalidInput("convergence: envelope at theta0 equals F_inf");
      problem.hyper.eta = step.eta;
      problem.hyper.horizon_t = horizon;
      KahanSum acc;
      double rate_rhs = 0.0;
      for (std::size_t s = 0; s < seed_count; ++s) {
        RunTrace trace = rscgd_run(problem, theta0, stream_seed(seed, "run" + std::to_string(s)));
        const TraceEnvelope env = envelope_grad_along_trace(problem, bundle, trace, along);
        acc.add(env.mean_sq_grad);
        rate_rhs = env.rate_rhs;
      }
      const double mean = acc.value() / static_cast<double>(seed_count);
      measured.push_back(mean);
      out.push_back(make_report("convergence/" + variant + "/T=" + std::to_string(horizon),
                                nominal ? "sample-complexity" : "convergence-rate", mean,
                                step.rate_bound, kOneSidedTol, config, seed,
                                {{"eta", step.eta},
                                 {"rate_rhs", rate_rhs},
                                 {"f_env0", f_env0},
                                 {"g_tot2", bundle.g_tot2},
                                 {"kappa", bundle.kappa},
                                 {"lambda_env", bundle.lambda_env}}));
    }
    double rise = -INFINITY;
    for (std::size_t k = 1; k < measured.size(); ++k) rise = std::max(rise, measured[k] - measured[k - 1]);
    if (measured.size() < 2) rise = 0.0;
    out.push_back(make_report("convergence/" + variant + "/nonincreasing", "sample-complexity",
                              rise, 0.0, 0.0, config, seed, {{"measured", measured}}));
  }
  return out;
}

namespace {

SmoothObjective smoothed_abs_1d(double eps) {
  SmoothObjective f;
  f.weak_convexity = 0.0;
  f.evaluate = [eps](const Vector& u, bool with_hessian) {
    const double phi = std::hypot(u[0], eps);
    SmoothEvaluation e{phi, Vector::Constant(1, u[0] / phi), {}};
    if (with_hessian) e.hessian = Matrix::Constant(1, 1, eps * eps / (phi * phi * phi));
    return e;
  };
  return f;
}

}  // namespace

std::vector<CheckReport> check_prox_lemmas(std::uint64_t seed, std::size_t n_probes) {
  const InstanceSpec spec{2, 4, 3, 0.5, 1.0, 1.5, 1.0, 1e-8};
  const json config = {{"check", "prox_lemmas"}, {"seed", seed}, {"n_probes", n_probes},
                       {"instance", spec_json(spec)}};
  const Problem problem = make_instance(spec, stream_seed(seed, "verify/prox_lemmas"));
  const double eps = problem.hyper.eps_smooth;
  const ConstantsBundle bundle = constants_bundle(problem, problem.theta_ref);
  const double lambda = bundle.lambda_env;
  const double kappa = bundle.kappa_smoothed(eps);
  const double contraction = 1.0 - kappa * lambda;
  const double l_env = envelope_smoothness(kappa, lambda);
  const SmoothObjective f = problem_objective(problem, bundle, eps);
  const Ball ball = feasible_ball(problem);
  const PolicyParams geom = problem.at(problem.theta_ref);
  Rng rng = make_stream(seed, "verify/prox_lemmas/probes");

  ProxOptions tight;
  tight.eps_prox = 1e-11;
  tight.throw_on_cap = false;
  const auto solve = [&](const Vector& anchor, const ProxOptions& o, const Vector* start = nullptr) {
    return prox_solve(f, ball, lambda, anchor, o, start);
  };
  const auto dist_subdiff = [&](const Vector& theta) { return subgradient_distance(problem, theta, eps); };

  double identity = 0.0, lipschitz = 0.0, approx_stat = -INFINITY, mono = -INFINITY,
         lower = -INFINITY, max_tight_res = 0.0, fd_err = 0.0;
  std::size_t judged = 0, skipped = 0;
  std::vector<Vector> anchors;
  for (std::size_t i = 0; i < n_probes; ++i) {
    const bool boundary = i % 4 == 3;
    const Vector theta = boundary ? random_on_shell(geom, 1.0, rng) : random_feasible(geom, rng);
    anchors.push_back(theta);
    const ProxResult r = solve(theta, tight);
    max_tight_res = std::max(max_tight_res, r.residual);
    const double xi = r.env_grad.norm();
    identity = std::max(identity, ((theta - r.prox_point) / lambda - r.env_grad).norm() / (1.0 + xi));
    approx_stat = std::max(approx_stat, dist_subdiff(r.prox_point) - xi);
    lower = std::max(lower, contraction * xi - dist_subdiff(theta));
    if (!boundary) {
      if (min_active_logit(problem, theta) > 10.0 * eps) {
        const Vector v = smoothed_objective(problem, theta, eps, Derivatives::gradient).gradient;
        mono = std::max(mono, contraction * xi * xi - r.env_grad.dot(v));
        ++judged;
      } else {
        ++skipped;
      }
    }

    const double step = uniform(rng, 1e-2, 1.0) * problem.radius_d;
    const Vector other = theta + step * random_unit_vector(theta.size(), rng);
    const ProxResult r2 = solve(other, tight, &r.prox_point);
    lipschitz = std::max(lipschitz, (r2.env_grad - r.env_grad).norm() / (other - theta).norm());

    if (i < 5) {
      const Vector fd = fd_gradient(
          [&](const Vector& u) { return solve(u, tight, &r.prox_point).env_value; }, theta, 1e-4);
      fd_err = std::max(fd_err, (fd - r.env_grad).norm() / std::max(r.env_grad.norm(), 1e-12));
    }
  }
  if (judged == 0) mono = 0.0;

  std::vector<CheckReport> out = {
      make_report("prox_lemmas/residual_identity", "envelope-properties", identity, kIdentityTol, 0.0,
                  config, seed, {{"max_tight_residual", max_tight_res}}),
      make_report("prox_lemmas/envelope_fd", "envelope-properties", fd_err, 1e-3, 0.0, config, seed),
      make_report("prox_lemmas/lipschitz", "envelope-properties", lipschitz, l_env, kOneSidedTol,
                  config, seed, {{"kappa_smoothed", kappa}, {"l_env_unsmoothed", bundle.l_env}}),
      make_report("prox_lemmas/approx_stationarity", "envelope-properties", approx_stat, 0.0,
                  kOneSidedTol, config, seed),
      make_report("prox_lemmas/monotonicity", "monotonicity-inequality", mono, 0.0, kOneSidedTol,
                  config, seed, {{"judged", judged}, {"skipped", skipped}}),
      make_report("prox_lemmas/iterate_lower_bound", "prox-gap-lower-bound", lower, 0.0,
                  kOneSidedTol, config, seed)};

  for (double eps_prox : {1e-5, 1e-8}) {
    ProxOptions loose;
    loose.eps_prox = eps_prox;
    loose.throw_on_cap = false;
    double lemma = -INFINITY, cert = -INFINITY;
    std::size_t unconverged = 0;
    for (const Vector& theta : anchors) {
      const ProxResult rough = solve(theta, loose);
      if (!rough.converged) ++unconverged;
      const ProxResult ref = solve(theta, tight, &rough.prox_point);
      const double lhs = dist_subdiff(rough.prox_point);
      lemma = std::max(lemma, lhs - (ref.env_grad.norm() + eps_prox +
                                     (rough.prox_point - ref.prox_point).norm() / lambda));
      cert = std::max(cert, lhs - stationarity_certificate(rough, lambda, kappa, eps_prox).bound);
    }
    char tag[32];
    std::snprintf(tag, sizeof tag, "%g", eps_prox);
    CheckReport rep = make_report(std::string("prox_lemmas/certificate/eps_prox=") + tag,
                                  "inexact-prox-certificate", lemma, 0.0, kOneSidedTol, config, seed,
                                  {{"computable_certificate_excess", cert}, {"unconverged", unconverged}});
    rep.passed = rep.passed && cert <= kOneSidedTol && unconverged == 0;
    out.push_back(std::move(rep));
  }

  const Ball line{Vector::Zero(1), 10.0};
  double abs_err = 0.0, prev_ratio = 0.0;
  bool diverging = true;
  json ratios = json::array();
  for (double theta : {0.8, 0.4, 0.1, 0.01}) {
    const ProxResult r = prox_solve(smoothed_abs_1d(1e-10), line, 1.0, Vector::Constant(1, theta), {});
    abs_err = std::max({abs_err, std::abs(r.prox_point[0]), std::abs(r.env_grad[0] - theta)});
    const double ratio = 1.0 / r.env_grad[0];
    diverging = diverging && ratio > prev_ratio;
    prev_ratio = ratio;
    ratios.push_back(ratio);
  }
  CheckReport rep = make_report("prox_lemmas/abs_1d", "no-universal-constant", abs_err, 1e-8, 0.0,
                                {{"check", "prox_lemmas/abs_1d"}}, seed, {{"ratios", ratios}});
  rep.passed = rep.passed && diverging && prev_ratio >= 99.0;
  out.push_back(std::move(rep));
  return out;
}

std::vector<CheckReport> check_one_step(std::uint64_t seed, std::size_t n_batches) {
  const json config = {{"check", "one_step"}, {"seed", seed}, {"n_batches", n_batches}};
  Problem problem = benchmark_problem(seed, false);
  const Vector theta = benchmark_start(problem, seed);
  const ConstantsBundle bundle = constants_bundle(problem, theta);
  const double eps = problem.hyper.eps_smooth;
  const double kappa = bundle.kappa_smoothed(eps);
  const double lambda = bundle.lambda_env;
  ProxOptions tight;
  tight.eps_prox = 1e-10;
  const ProxResult here = prox_solve(problem, bundle, theta, tight);
  // A large step so the decrease term is visible next to the noise.
  const double eta = 0.1 * lambda;
  problem.hyper.eta = eta;

  Rng triples = make_stream(seed, "verify/one_step/triples");
  Rng labels = make_stream(seed, "verify/one_step/labels");
  const PolicyParams params = problem.at(theta);
  KahanSum sum_env, sum_sq_env, sum_g2;
  for (std::size_t k = 0; k < n_batches; ++k) {
    const MiniBatch batch =
        form_batch(problem, theta, problem.hyper.batch_b, OracleMode::true_oracle, triples, labels);
    const Vector g = composite_direction(problem, theta, batch);
    const Vector next = project_feasible(params, theta - eta * g);
    const double v = prox_solve(problem, bundle, next, tight, &here.prox_point).env_value;
    sum_env.add(v);
    sum_sq_env.add(v * v);
    sum_g2.add(g.squaredNorm());
  }
  const double n = static_cast<double>(n_batches);
  const double mean_env = sum_env.value() / n;
  const double se = std::sqrt(std::max(sum_sq_env.value() / n - mean_env * mean_env, 0.0) / n);
  const double xi2 = here.env_grad.squaredNorm();
  const double rhs = here.env_value - eta * (1.0 - kappa * lambda) * xi2 +
                     0.5 * envelope_smoothness(kappa, lambda) * eta * eta * sum_g2.value() / n;
  return {make_report("one_step", "one-step-inequality", mean_env, rhs, 4.0 * se + kOneSidedTol,
                      config, seed, {{"standard_error", se}, {"env_before", here.env_value}})};
}

const std::vector<Claim>& claims() {
  static const std::vector<Claim> list = {
      {"robust-decomposition", "worst-case robust loss equals SAIL loss plus rho beta R"},
      {"pointwise-worst-case", "closed-form supremum of a Bernoulli mixture over the rho interval"},
      {"penalty-nonconvexity", "two-response example where R(1) - R(2)/2 > 0"},
      {"gradient-formulas", "score-function gradients of L_SAIL and R_eps"},
      {"oracle-unbiasedness", "single-sample oracles are unbiased for the exact (sub)gradients"},
      {"policy-regularity", "||g|| <= 2B and ||S|| <= 4B"},
      {"fisher-bound", "Fisher information operator norm at most 4B^2"},
      {"gradient-bounds", "||grad L_SAIL|| <= G_gradSAIL and R is G_subR-Lipschitz"},
      {"second-moment-bound", "E||G||^2 <= G_tot^2"},
      {"penalty-weak-convexity", "R is kappa_R weakly convex"},
      {"smoothed-hessian-bound", "Hessian of R_eps bounded below by -kappa_eps"},
      {"composite-weak-convexity", "L_SAIL + lambda R is kappa weakly convex"},
      {"envelope-properties", "envelope gradient identity, Lipschitz constant, and prox stationarity"},
      {"monotonicity-inequality", "<xi, v> >= (1 - kappa lambda_env) ||xi||^2"},
      {"one-step-inequality", "expected one-step decrease of the envelope"},
      {"convergence-rate", "average squared envelope gradient below the rate bound"},
      {"sample-complexity", "stepsize choice and resulting sample complexity, including rho = 0"},
      {"prox-gap-lower-bound", "dist(0, dF(theta)) >= (1 - kappa lambda_env) ||xi||"},
      {"no-universal-constant", "|theta| example: ratio of subgradient to envelope gradient diverges"},
      {"inexact-prox-certificate", "stationarity of an inexact proximal point"}};
  return list;
}

const std::vector<CheckEntry>& check_registry() {
  using V = std::vector<CheckReport>;
  static const std::vector<CheckEntry> list = {
      {"decomposition", {"robust-decomposition"}, false,
       [](std::uint64_t s) { return V{check_decomposition(s)}; }},
      {"counterexample", {"penalty-nonconvexity"}, false,
       [](std::uint64_t) { return V{check_counterexample()}; }},
      {"pointwise_sup", {"pointwise-worst-case"}, false,
       [](std::uint64_t s) { return V{check_pointwise_sup(s)}; }},
      {"gradient_exactness", {"gradient-formulas"}, false,
       [](std::uint64_t s) { return check_gradient_exactness(s); }},
      {"unbiasedness", {"oracle-unbiasedness"}, false,
       [](std::uint64_t s) { return check_unbiasedness(s); }},
      {"constant_bounds", {"policy-regularity", "fisher-bound", "gradient-bounds", "second-moment-bound"},
       false, [](std::uint64_t s) { return check_constant_bounds(s); }},
      {"weak_convexity", {"penalty-weak-convexity", "smoothed-hessian-bound", "composite-weak-convexity"},
       false, [](std::uint64_t s) { return check_weak_convexity(s); }},
      {"convergence", {"convergence-rate", "sample-complexity", "one-step-inequality"}, false,
       [](std::uint64_t s) { return check_convergence(s); }},
      {"prox_lemmas",
       {"envelope-properties", "monotonicity-inequality", "prox-gap-lower-bound",
        "no-universal-constant", "inexact-prox-certificate"},
       false, [](std::uint64_t s) { return check_prox_lemmas(s); }},
      {"one_step", {"one-step-inequality"}, true, [](std::uint64_t s) { return check_one_step(s); }}};
  return list;
}

CoverageGap coverage_gaps() {
  CoverageGap gap;
  const auto& registry = check_registry();
  for (const Claim& c : claims()) {
    const bool covered = std::any_of(registry.begin(), registry.end(), [&](const CheckEntry& e) {
      return std::find(e.claims.begin(), e.claims.end(), c.id) != e.claims.end();
    });
    if (!covered) gap.unclaimed.push_back(c.id);
  }
  for (const CheckEntry& e : registry) {
    for (const std::string& id : e.claims) {
      const bool known = std::any_of(claims().begin(), claims().end(),
                                     [&](const Claim& c) { return c.id == id; });
      if (!known) gap.unknown.push_back(id);
    }
  }
  return gap;
}

std::vector<CheckReport> run_checks(const std::string& name, std::uint64_t seed) {
  std::vector<CheckReport> out;
  bool found = false;
  for (const CheckEntry& e : check_registry()) {
    if (name.empty() ? e.slow : e.name != name) continue;
    found = true;
    for (CheckReport& r : e.run(seed)) out.push_back(std::move(r));
  }
  if (!found) throw InvalidInput("verify: unknown check '" + name + "'");
  return out;
}

}  // namespace orpa
