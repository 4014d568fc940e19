#pragma once

#include <cstdint>
#include <optional>

#include "orpa/problem.hpp"

namespace orpa {

/// Every constant that enters the weak-convexity, envelope, and rate bounds,
/// together with the inputs they were computed from.
struct ConstantsBundle {
  // inputs
  double b_psi = 0.0;
  double radius_d = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
  std::size_t batch_b = 1;
  double eps_smooth = 0.0;

  double g_score = 0.0;        ///< 2 B
  double m_score = 0.0;        ///< B^2
  double kappa_r = 0.0;        ///< 16 B^2 + 4 D B^3
  double l_sail_smooth = 0.0;  ///< smoothness of L_SAIL on the ball
  double kappa = 0.0;          ///< l_sail_smooth + lambda kappa_r
  double lambda_env = 0.0;
  double l_env = 0.0;          ///< 1 / (lambda_env (1 - kappa lambda_env))
  double g_grad_sail = 0.0;    ///< 2 beta B + 4 B (log 2 + 2 beta D B)
  double g_sub_r = 0.0;        ///< 2 B + 8 D B^2
  double sigma2_sail = 0.0;
  double sigma2_r = 0.0;
  double g_tot2 = 0.0;
  double f_inf = 0.0;

  bool l_sail_estimated = true;
  bool sigma2_estimated = true;

  /// Weak-convexity modulus of the eps-smoothed composite,
  /// l_sail_smooth + lambda (kappa_r + 2 B^2 eps).
  double kappa_smoothed(double eps) const;
};

double kappa_r_bound(double b_psi, double radius_d);
/// 8 G B + 4 M D B + 2 M eps = 16 B^2 + 4 D B^3 + 2 B^2 eps.
double kappa_eps_bound(double b_psi, double radius_d, double eps);
double grad_sail_bound(double beta, double b_psi, double radius_d);
double subgrad_r_bound(double b_psi, double radius_d);
double second_moment_bound(double g_grad_sail, double g_sub_r, double lambda, double sigma2_sail,
                           double sigma2_r, std::size_t batch_b);

/// Throws InvalidEnvelopeParam unless 0 < lambda_env < 1 / kappa.
void check_envelope_param(double kappa, double lambda_env);
double envelope_smoothness(double kappa, double lambda_env);

/// Single-sample oracle variances at theta, computed exactly by enumeration:
/// E||G_SAIL - grad L_SAIL||^2 (labels from the true oracle) and
/// E||G_R - v||^2 with v the exact subgradient.
struct OracleVariances {
  double sigma2_sail;
  double sigma2_r;
};
OracleVariances exact_oracle_variances(const Problem& problem, const Vector& theta);

struct ConstantsOptions {
  std::optional<double> l_sail_smooth;
  std::optional<double> sigma2_sail;
  std::optional<double> sigma2_r;
  std::size_t n_probes = 64;
  double smoothness_safety = 1.5;
  double variance_safety = 2.0;
  std::uint64_t seed = 0;
};

/// Largest spectral norm of the exact SAIL Hessian over theta_ref and
/// `n_probes` uniform points of the ball, times `safety`.
double estimate_l_sail(const Problem& problem, std::size_t n_probes, double safety,
                       std::uint64_t seed);

/// Fills the bundle. lambda_env comes from problem.hyper.lambda_env when
/// positive and defaults to 0.5 / kappa otherwise; either way it is checked.
/// Variances are the largest exact single-sample variances over theta0 and the
/// smoothness probes, times the safety factor.
ConstantsBundle constants_bundle(const Problem& problem, const Vector& theta0,
                                 const ConstantsOptions& options = {});

}  // namespace orpa
