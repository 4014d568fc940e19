#include "orpa/objective.hpp"

#include <cmath>

namespace orpa {

namespace {

double resolve_eps(const Problem& problem, double eps) {
  return eps > 0.0 ? eps : problem.hyper.eps_smooth;
}

auto sail_integrand(const Problem& problem) {
  return [&oracle = problem.oracle, beta = problem.hyper.beta](const ComparisonTriple& z, double s,
                                                               double* r) {
    const LossDerivatives l = expected_loss_in_logit(beta, true_prob(oracle, z), s);
    r[0] = l.value;
    r[1] = l.d1;
    r[2] = l.d2;
  };
}

void abs_terms(double s, double* r) {
  r[0] = std::abs(s);
  r[1] = sign0(s);
  r[2] = 0.0;
}

void smoothed_abs_terms(double s, double eps, double* r) {
  const double phi = smoothed_abs(s, eps);
  r[0] = phi;
  r[1] = s / phi;
  r[2] = (eps / phi) * (eps / phi) / phi;
}

}  // namespace

PerSampleLosses per_sample_losses(double beta, double h) {
  return {softplus(-beta * h), softplus(beta * h)};
}

PerSampleLosses per_sample_losses(const Environment& env, const PolicyParams& params,
                                  const Hyperparams& hyper, const ComparisonTriple& z) {
  return per_sample_losses(hyper.beta, pairwise_logit(env, params, z));
}

LossDerivatives expected_loss_in_logit(double beta, double p, double h) {
  const PerSampleLosses l = per_sample_losses(beta, h);
  const double up = sigmoid(beta * h);
  const double down = sigmoid(-beta * h);
  return {p * l.ell1 + (1.0 - p) * l.ell0, beta * ((1.0 - p) * up - p * down),
          beta * beta * up * down};
}

Vector sail_sample_grad(double beta, double s, int label, const Vector& dpsi, const Vector& score) {
  const PerSampleLosses l = per_sample_losses(beta, s);
  if (label == 1) return -beta * sigmoid(-beta * s) * dpsi + l.ell1 * score;
  return beta * sigmoid(beta * s) * dpsi + l.ell0 * score;
}

Vector penalty_sample_subgrad(double s, const Vector& dpsi, const Vector& score) {
  return sign0(s) * dpsi + std::abs(s) * score;
}

double sail_loss_exact(const Problem& problem, const Vector& theta) {
  return expect_pathwise(problem.env, problem.at(theta), sail_integrand(problem), Derivatives::none)
      .value;
}

Vector sail_grad_exact(const Problem& problem, const Vector& theta) {
  return expect_pathwise(problem.env, problem.at(theta), sail_integrand(problem),
                         Derivatives::gradient)
      .gradient;
}

Matrix sail_hessian_exact(const Problem& problem, const Vector& theta) {
  return expect_pathwise(problem.env, problem.at(theta), sail_integrand(problem),
                         Derivatives::hessian)
      .hessian;
}

double robust_penalty_exact(const Problem& problem, const Vector& theta) {
  const auto f = [](const ComparisonTriple&, double s, double* r) { abs_terms(s, r); };
  return expect_pathwise(problem.env, problem.at(theta), f, Derivatives::none).value;
}

Vector penalty_subgrad_exact(const Problem& problem, const Vector& theta) {
  const auto f = [](const ComparisonTriple&, double s, double* r) { abs_terms(s, r); };
  return expect_pathwise(problem.env, problem.at(theta), f, Derivatives::gradient).gradient;
}

double robust_penalty_smoothed(const Problem& problem, const Vector& theta, double eps) {
  eps = resolve_eps(problem, eps);
  const auto f = [eps](const ComparisonTriple&, double s, double* r) {
    smoothed_abs_terms(s, eps, r);
  };
  return expect_pathwise(problem.env, problem.at(theta), f, Derivatives::none).value;
}

Vector smoothed_penalty_grad(const Problem& problem, const Vector& theta, double eps) {
  eps = resolve_eps(problem, eps);
  const auto f = [eps](const ComparisonTriple&, double s, double* r) {
    smoothed_abs_terms(s, eps, r);
  };
  return expect_pathwise(problem.env, problem.at(theta), f, Derivatives::gradient).gradient;
}

Matrix smoothed_penalty_hessian(const Problem& problem, const Vector& theta, double eps) {
  eps = resolve_eps(problem, eps);
  const auto f = [eps](const ComparisonTriple&, double s, double* r) {
    smoothed_abs_terms(s, eps, r);
  };
  return expect_pathwise(problem.env, problem.at(theta), f, Derivatives::hessian).hessian;
}

double robust_objective_closed_form(const Problem& problem, const Vector& theta) {
  check_admissible(problem.oracle, problem.hyper.rho);
  return sail_loss_exact(problem, theta) +
         problem.hyper.lambda() * robust_penalty_exact(problem, theta);
}

double robust_objective_worstcase(const Problem& problem, const Vector& theta) {
  check_admissible(problem.oracle, problem.hyper.rho);
  const auto f = [&oracle = problem.oracle, beta = problem.hyper.beta, rho = problem.hyper.rho](
                     const ComparisonTriple& z, double s, double* r) {
    const PerSampleLosses l = per_sample_losses(beta, s);
    r[0] = pointwise_sup_value(true_prob(oracle, z), rho, l.ell1, l.ell0);
  };
  return expect_pathwise(problem.env, problem.at(theta), f, Derivatives::none).value;
}

double adversarial_oracle_loss(const Problem& problem, const Vector& theta) {
  check_admissible(problem.oracle, problem.hyper.rho);
  const auto f = [&oracle = problem.oracle, beta = problem.hyper.beta, rho = problem.hyper.rho](
                     const ComparisonTriple& z, double s, double* r) {
    const PerSampleLosses l = per_sample_losses(beta, s);
    const double q = worst_case_prob(oracle, rho, z, s);
    r[0] = q * l.ell1 + (1.0 - q) * l.ell0;
  };
  return expect_pathwise(problem.env, problem.at(theta), f, Derivatives::none).value;
}

ScoreExpectation smoothed_objective(const Problem& problem, const Vector& theta, double eps,
                                    Derivatives what, Reduction mode) {
  eps = resolve_eps(problem, eps);
  const double lambda = problem.hyper.lambda();
  const auto sail = sail_integrand(problem);
  const auto f = [&sail, eps, lambda](const ComparisonTriple& z, double s, double* r) {
    double pen[3];
    sail(z, s, r);
    smoothed_abs_terms(s, eps, pen);
    for (int k = 0; k < 3; ++k) r[k] += lambda * pen[k];
  };
  return expect_pathwise(problem.env, problem.at(theta), f, what, mode);
}

Vector robust_objective_subgrad(const Problem& problem, const Vector& theta) {
  const double lambda = problem.hyper.lambda();
  const auto sail = sail_integrand(problem);
  const auto f = [&sail, lambda](const ComparisonTriple& z, double s, double* r) {
    double pen[3];
    sail(z, s, r);
    abs_terms(s, pen);
    for (int k = 0; k < 3; ++k) r[k] += lambda * pen[k];
  };
  return expect_pathwise(problem.env, problem.at(theta), f, Derivatives::gradient).gradient;
}

}  // namespace orpa
