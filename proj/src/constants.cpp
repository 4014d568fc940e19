#include "orpa/constants.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "orpa/errors.hpp"
#include "orpa/kernels.hpp"
#include "orpa/objective.hpp"

namespace orpa {

double ConstantsBundle::kappa_smoothed(double eps) const {
  return l_sail_smooth + lambda * (kappa_r + 2.0 * m_score * eps);
}

double kappa_r_bound(double b_psi, double radius_d) {
  return 16.0 * b_psi * b_psi + 4.0 * radius_d * b_psi * b_psi * b_psi;
}

double kappa_eps_bound(double b_psi, double radius_d, double eps) {
  const double g = 2.0 * b_psi;
  const double m = b_psi * b_psi;
  return 8.0 * g * b_psi + 4.0 * m * radius_d * b_psi + 2.0 * m * eps;
}

double grad_sail_bound(double beta, double b_psi, double radius_d) {
  return 2.0 * beta * b_psi + 4.0 * b_psi * (std::log(2.0) + 2.0 * beta * radius_d * b_psi);
}

double subgrad_r_bound(double b_psi, double radius_d) {
  return 2.0 * b_psi + 8.0 * radius_d * b_psi * b_psi;
}

double second_moment_bound(double g_grad_sail, double g_sub_r, double lambda, double sigma2_sail,
                           double sigma2_r, std::size_t batch_b) {
  const double b = static_cast<double>(batch_b);
  return 4.0 * (g_grad_sail * g_grad_sail + lambda * lambda * g_sub_r * g_sub_r +
                (sigma2_sail + lambda * lambda * sigma2_r) / b);
}

void check_envelope_param(double kappa, double lambda_env) {
  if (!(lambda_env > 0.0) || !(kappa * lambda_env < 1.0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "lambda_env = " << lambda_env << " is outside (0, 1/kappa) with kappa = " << kappa;
    throw InvalidEnvelopeParam(msg.str());
  }
}

double envelope_smoothness(double kappa, double lambda_env) {
  check_envelope_param(kappa, lambda_env);
  return 1.0 / (lambda_env * (1.0 - kappa * lambda_env));
}

OracleVariances exact_oracle_variances(const Problem& problem, const Vector& theta) {
  const PolicyParams params = problem.at(theta);
  const PolicyTable table = tabulate_policy(problem.env, theta, false);
  const double beta = problem.hyper.beta;
  const auto term = [&](const TripleContext& c, Vector& out) {
    const double p = true_prob(problem.oracle, c.z);
    const Vector g1 = sail_sample_grad(beta, c.s, 1, c.delta_psi, c.score);
    const Vector g0 = sail_sample_grad(beta, c.s, 0, c.delta_psi, c.score);
    out[0] = p * g1.squaredNorm() + (1.0 - p) * g0.squaredNorm();
    out[1] = penalty_sample_subgrad(c.s, c.delta_psi, c.score).squaredNorm();
  };
  const Vector second = expect_triples(problem.env, params, table, 2, term);
  const double mean_sail = sail_grad_exact(problem, theta).squaredNorm();
  const double mean_r = penalty_subgrad_exact(problem, theta).squaredNorm();
  return {std::max(0.0, second[0] - mean_sail), std::max(0.0, second[1] - mean_r)};
}

namespace {

std::vector<Vector> smoothness_probes(const Problem& problem, std::size_t n_probes,
                                      std::uint64_t seed) {
  Rng rng = make_stream(seed, "constants/probes");
  const PolicyParams geometry = problem.at(problem.theta_ref);
  std::vector<Vector> probes{problem.theta_ref};
  for (std::size_t i = 0; i < n_probes; ++i) probes.push_back(random_feasible(geometry, rng));
  return probes;
}

double spectral_norm(const Matrix& symmetric) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

double estimate_l_sail(const Problem& problem, std::size_t n_probes, double safety,
                       std::uint64_t seed) {
  double best = 0.0;
  for (const Vector& theta : smoothness_probes(problem, n_probes, seed)) {
    best = std::max(best, spectral_norm(sail_hessian_exact(problem, theta)));
  }
  return safety * best;
}

ConstantsBundle constants_bundle(const Problem& problem, const Vector& theta0,
                                 const ConstantsOptions& options) {
  validate_problem(problem);
  const Hyperparams& hyper = problem.hyper;
  const double b = problem.env.b_psi();
  const double d = problem.radius_d;

  ConstantsBundle c;
  c.b_psi = b;
  c.radius_d = d;
  c.beta = hyper.beta;
  c.lambda = hyper.lambda();
  c.batch_b = hyper.batch_b;
  c.eps_smooth = hyper.eps_smooth;
  c.g_score = 2.0 * b;
  c.m_score = b * b;
  c.kappa_r = kappa_r_bound(b, d);
  c.g_grad_sail = grad_sail_bound(hyper.beta, b, d);
  c.g_sub_r = subgrad_r_bound(b, d);

  const std::vector<Vector> probes = smoothness_probes(problem, options.n_probes, options.seed);
  if (options.l_sail_smooth) {
    c.l_sail_smooth = *options.l_sail_smooth;
    c.l_sail_estimated = false;
  } else {
    c.l_sail_smooth =
        estimate_l_sail(problem, options.n_probes, options.smoothness_safety, options.seed);
  }
  c.kappa = c.l_sail_smooth + c.lambda * c.kappa_r;

  if (hyper.lambda_env > 0.0) {
    c.lambda_env = hyper.lambda_env;
  } else {
    c.lambda_env = c.kappa > 0.0 ? 0.5 / c.kappa : 1.0;
  }
  c.l_env = envelope_smoothness(c.kappa, c.lambda_env);

  if (options.sigma2_sail && options.sigma2_r) {
    c.sigma2_sail = *options.sigma2_sail;
    c.sigma2_r = *options.sigma2_r;
    c.sigma2_estimated = false;
  } else {
    OracleVariances worst = exact_oracle_variances(problem, theta0);
    for (const Vector& theta : probes) {
      const OracleVariances v = exact_oracle_variances(problem, theta);
      worst.sigma2_sail = std::max(worst.sigma2_sail, v.sigma2_sail);
      worst.sigma2_r = std::max(worst.sigma2_r, v.sigma2_r);
    }
    c.sigma2_sail = options.sigma2_sail.value_or(options.variance_safety * worst.sigma2_sail);
    c.sigma2_r = options.sigma2_r.value_or(options.variance_safety * worst.sigma2_r);
  }
  c.g_tot2 = second_moment_bound(c.g_grad_sail, c.g_sub_r, c.lambda, c.sigma2_sail, c.sigma2_r,
                                 c.batch_b);
  c.f_inf = 0.0;
  return c;
}

}  // namespace orpa
