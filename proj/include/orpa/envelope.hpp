#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "orpa/constants.hpp"
#include "orpa/errors.hpp"
#include "orpa/optimizer.hpp"
#include "orpa/problem.hpp"

namespace orpa {

struct SmoothEvaluation {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;  ///< empty unless requested
};

/// A twice differentiable objective on R^d together with its weak-convexity
/// modulus (f + kappa/2 ||.||^2 is convex).
struct SmoothObjective {
  std::function<SmoothEvaluation(const Vector& u, bool with_hessian)> evaluate;
  double weak_convexity = 0.0;
};

struct Ball {
  Vector center;
  double radius = 0.0;

  Vector project(const Vector& u) const;
  bool on_boundary(const Vector& u, double rel_tol = 1e-12) const;
};

/// dist(0, grad + N_ball(u)) for u in the ball, where N_ball is the normal cone.
double stationarity_residual(const Vector& grad, const Vector& u, const Ball& ball);

struct ProxOptions {
  double eps_prox = 1e-8;
  std::size_t max_iters = 500;
  bool throw_on_cap = true;
};

struct ProxResult {
  Vector prox_point;      ///< theta-hat
  double env_value = 0.0;  ///< envelope value at the anchor
  Vector env_grad;        ///< (anchor - prox_point) / lambda_env
  double residual = 0.0;  ///< dist(0, subdifferential of the prox objective) at prox_point
  std::size_t inner_iters = 0;
  bool converged = false;
};

/// Raised when the inner solve stops before reaching eps_prox. The partial
/// result, with its achieved residual, travels with the exception.
class MaxInnerItersExceeded : public Error {
 public:
  MaxInnerItersExceeded(const std::string& what, ProxResult partial)
      : Error(what), result(std::move(partial)) {}
  ProxResult result;
};

/// Minimizes Psi(u) = f(u) + ||u - anchor||^2 / (2 lambda_env) over the ball
/// by projected Newton: each step minimizes the local quadratic model over the
/// ball exactly (eigendecomposition plus a secular-equation bisection), then
/// backtracks. Stops once dist(0, grad Psi + N_ball) <= eps_prox.
///
/// `start` defaults to the projection of the anchor.
ProxResult prox_solve(const SmoothObjective& f, const Ball& ball, double lambda_env,
                      const Vector& anchor, const ProxOptions& options,
                      const Vector* start = nullptr);

/// L_SAIL + lambda R_eps for `problem`, with modulus bundle.kappa_smoothed(eps).
SmoothObjective problem_objective(const Problem& problem, const ConstantsBundle& bundle,
                                  double eps);

Ball feasible_ball(const Problem& problem);

/// Prox of the eps-smoothed robust objective restricted to the feasible ball,
/// eps = hyper.eps_smooth.
ProxResult prox_solve(const Problem& problem, const ConstantsBundle& bundle, const Vector& anchor,
                      const ProxOptions& options, const Vector* start = nullptr);

/// Stationarity certificate for an inexact proximal point theta-bar:
/// dist(0, dF(theta-bar)) <= ||xi|| + eps_prox + ||theta-bar - theta-hat|| / lambda_env,
/// where xi is the exact envelope gradient. Neither xi nor theta-hat is known,
/// so both are bounded through ||theta-bar - theta-hat|| <= residual / mu with
/// mu = 1/lambda_env - kappa.
struct Certificate {
  double env_grad_norm = 0.0;  ///< ||(theta - theta-bar) / lambda_env||
  double eps_prox = 0.0;
  double geom_gap = 0.0;       ///< upper bound on ||theta-bar - theta-hat||
  double bound = 0.0;          ///< env_grad_norm + eps_prox + 2 geom_gap / lambda_env
};

Certificate stationarity_certificate(const ProxResult& prox, double lambda_env, double kappa,
                                     double eps_prox);

/// dist(0, grad F_eps(theta) + N_ball(theta)) for the smoothed robust objective.
double subgradient_distance(const Problem& problem, const Vector& theta, double eps);

struct TraceEnvelope {
  std::vector<double> residuals;
  std::vector<std::size_t> inner_iters;
  double mean_sq_grad = 0.0;  ///< mean of ||grad F_env(theta_t)||^2 over t = 0..T-1
  double f_env0 = 0.0;
  double rate_rhs = 0.0;
  double tuned_bound = 0.0;
  double smoothing_bias = 0.0;  ///< lambda * eps, the envelope-value offset from smoothing
};

/// Fills trace.grad_norms_env with one prox solve per iterate, warm-starting
/// each solve at the previous proximal point.
TraceEnvelope envelope_grad_along_trace(const Problem& problem, const ConstantsBundle& bundle,
                                        RunTrace& trace, const ProxOptions& options);

}  // namespace orpa
