#pragma once

#include "orpa/kernels.hpp"
#include "orpa/problem.hpp"

namespace orpa {

struct PerSampleLosses {
  double ell1;  ///< loss when y1 is preferred, softplus(-beta h)
  double ell0;  ///< loss when y2 is preferred, softplus(beta h)
};

PerSampleLosses per_sample_losses(double beta, double h);
PerSampleLosses per_sample_losses(const Environment& env, const PolicyParams& params,
                                  const Hyperparams& hyper, const ComparisonTriple& z);

/// Derivatives in h of the expected per-sample loss p ell1 + (1 - p) ell0.
struct LossDerivatives {
  double value;
  double d1;
  double d2;
};
LossDerivatives expected_loss_in_logit(double beta, double p, double h);

/// Single-sample SAIL gradient for a labelled triple:
/// grad ell(z, y) + ell(z, y) S, with grad ell1 = -beta sigmoid(-beta s) dpsi
/// and grad ell0 = beta sigmoid(beta s) dpsi.
Vector sail_sample_grad(double beta, double s, int label, const Vector& dpsi, const Vector& score);

/// Single-sample penalty subgradient sign(s) dpsi + |s| S.
Vector penalty_sample_subgrad(double s, const Vector& dpsi, const Vector& score);

/// Exact L_SAIL(theta) = E_{d_theta}[p* ell1 + (1 - p*) ell0].
double sail_loss_exact(const Problem& problem, const Vector& theta);
Vector sail_grad_exact(const Problem& problem, const Vector& theta);
Matrix sail_hessian_exact(const Problem& problem, const Vector& theta);

/// Exact R(theta) = E_{d_theta}|s_theta(z)|.
double robust_penalty_exact(const Problem& problem, const Vector& theta);

/// E[sign(s) dpsi + |s| S] with sign(0) = 0, an element of the subdifferential of R.
Vector penalty_subgrad_exact(const Problem& problem, const Vector& theta);

/// R_eps(theta) = E sqrt(s^2 + eps^2). `eps` defaults to hyper.eps_smooth.
double robust_penalty_smoothed(const Problem& problem, const Vector& theta, double eps = 0.0);
Vector smoothed_penalty_grad(const Problem& problem, const Vector& theta, double eps = 0.0);
Matrix smoothed_penalty_hessian(const Problem& problem, const Vector& theta, double eps = 0.0);

/// L_SAIL + rho beta R. Throws InadmissibleRadius when rho >= delta.
double robust_objective_closed_form(const Problem& problem, const Vector& theta);

/// E_{d_theta} of the pointwise worst-case expected loss, evaluated through
/// pointwise_sup_value. Independent of the closed form above.
double robust_objective_worstcase(const Problem& problem, const Vector& theta);

/// E_{d_theta} of the expected loss under the explicit adversarial oracle,
/// i.e. labels drawn with worst_case_prob.
double adversarial_oracle_loss(const Problem& problem, const Vector& theta);

/// The smoothed composite L_SAIL + lambda R_eps with optional derivatives.
/// Used by the envelope solver.
ScoreExpectation smoothed_objective(const Problem& problem, const Vector& theta, double eps,
                                    Derivatives what, Reduction mode = Reduction::blocked);

/// Subgradient of the unsmoothed composite L_SAIL + lambda R.
Vector robust_objective_subgrad(const Problem& problem, const Vector& theta);

}  // namespace orpa
