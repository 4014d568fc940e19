#include "orpa/envelope.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "orpa/objective.hpp"

namespace orpa {

Vector Ball::project(const Vector& u) const {
  const Vector offset = u - center;
  const double dist = offset.norm();
  if (dist <= radius) return u;
  return center + (radius / dist) * offset;
}

bool Ball::on_boundary(const Vector& u, double rel_tol) const {
  return (u - center).norm() >= radius * (1.0 - rel_tol);
}

double stationarity_residual(const Vector& grad, const Vector& u, const Ball& ball) {
  if (!ball.on_boundary(u)) return grad.norm();
  const Vector normal = (u - ball.center).normalized();
  const double push = std::max(0.0, -grad.dot(normal));
  return (grad + push * normal).norm();
}

namespace {

/// Minimizer over the ball of g^T (w - u) + 1/2 (w - u)^T H (w - u).
Vector constrained_newton_target(const Matrix& hessian, const Vector& grad, const Vector& u,
                                 const Ball& ball, double curvature_floor) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian);
  const Matrix& q = eig.eigenvectors();
  const Eigen::ArrayXd lam = eig.eigenvalues().array().max(curvature_floor);
  const Eigen::ArrayXd v = (q.transpose() * (u - ball.center)).array();
  const Eigen::ArrayXd b = lam * v - (q.transpose() * grad).array();

  const auto step_norm = [&](double nu) { return (b / (lam + nu)).matrix().norm(); };
  if (step_norm(0.0) <= ball.radius) return ball.center + q * (b / lam).matrix();

  double lo = 0.0;
  double hi = b.matrix().norm() / ball.radius;
  for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (step_norm(mid) > ball.radius ? lo : hi) = mid;
  }
  return ball.project(ball.center + q * (b / (lam + hi)).matrix());
}

}  // namespace

ProxResult prox_solve(const SmoothObjective& f, const Ball& ball, double lambda_env,
                      const Vector& anchor, const ProxOptions& options, const Vector* start) {
  check_envelope_param(f.weak_convexity, lambda_env);
  if (!(options.eps_prox > 0.0)) throw InvalidInput("prox: eps_prox must be positive");
  if (!anchor.allFinite()) throw InvalidInput("prox: anchor is not finite");

  const double inv = 1.0 / lambda_env;
  const double strong = inv - f.weak_convexity;
  const auto psi = [&](const Vector& u, bool with_hessian) {
    SmoothEvaluation e = f.evaluate(u, with_hessian);
    e.value += 0.5 * inv * (u - anchor).squaredNorm();
    e.gradient += inv * (u - anchor);
    if (with_hessian) e.hessian.diagonal().array() += inv;
    return e;
  };

  Vector u = ball.project(start ? *start : anchor);
  SmoothEvaluation cur = psi(u, true);
  double res = stationarity_residual(cur.gradient, u, ball);
  std::size_t iters = 0;
  int stalled = 0;

  while (res > options.eps_prox && iters < options.max_iters && stalled < 20) {
    ++iters;
    const Vector target =
        constrained_newton_target(cur.hessian, cur.gradient, u, ball, 0.5 * strong);
    const Vector step = target - u;
    const double slope = cur.gradient.dot(step);

    Vector next = target;
    SmoothEvaluation trial = psi(next, false);
    const double tiny = 1e-14 * (1.0 + std::abs(cur.value));
    bool accepted = trial.value <= cur.value + 1e-4 * slope;
    // Near the solution the value decrease drowns in rounding; trust the residual.
    if (!accepted && trial.value <= cur.value + tiny &&
        stationarity_residual(trial.gradient, next, ball) < 0.5 * res) {
      accepted = true;
    }
    if (!accepted && slope < 0.0) {
      // Psi is strongly convex on the segment, so bisect on the directional derivative.
      double lo = 0.0, hi = 1.0;
      for (int k = 0; k < 80 && hi - lo > 1e-17; ++k) {
        const double mid = 0.5 * (lo + hi);
        const SmoothEvaluation e = psi(u + mid * step, false);
        (e.gradient.dot(step) < 0.0 ? lo : hi) = mid;
      }
      if (lo > 0.0) {
        next = u + lo * step;
        trial = psi(next, false);
        accepted = trial.value <= cur.value + tiny;
      }
    }
    if (!accepted) {
      // Projected gradient with a backtracked step as a last resort.
      double alpha = 1.0 / std::max(cur.hessian.norm(), inv);
      for (int k = 0; k < 60 && !accepted; ++k, alpha *= 0.5) {
        next = ball.project(u - alpha * cur.gradient);
        trial = psi(next, false);
        accepted = trial.value < cur.value;
      }
    }
    if (!accepted) break;

    u = next;
    cur = psi(u, true);
    const double next_res = stationarity_residual(cur.gradient, u, ball);
    stalled = next_res < 0.999 * res ? 0 : stalled + 1;
    res = next_res;
  }

  ProxResult result;
  result.prox_point = u;
  result.env_value = cur.value;
  result.env_grad = (anchor - u) / lambda_env;
  result.residual = res;
  result.inner_iters = iters;
  result.converged = res <= options.eps_prox;
  if (!result.converged && options.throw_on_cap) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "prox solve stopped after " << iters << " iterations with residual " << res
        << " above eps_prox = " << options.eps_prox;
    throw MaxInnerItersExceeded(msg.str(), std::move(result));
  }
  return result;
}

SmoothObjective problem_objective(const Problem& problem, const ConstantsBundle& bundle,
                                  double eps) {
  SmoothObjective f;
  f.weak_convexity = bundle.kappa_smoothed(eps);
  f.evaluate = [&problem, eps](const Vector& u, bool with_hessian) {
    ScoreExpectation e = smoothed_objective(
        problem, u, eps, with_hessian ? Derivatives::hessian : Derivatives::gradient);
    return SmoothEvaluation{e.value, std::move(e.gradient), std::move(e.hessian)};
  };
  return f;
}

Ball feasible_ball(const Problem& problem) { return {problem.theta_ref, problem.radius_d}; }

ProxResult prox_solve(const Problem& problem, const ConstantsBundle& bundle, const Vector& anchor,
                      const ProxOptions& options, const Vector* start) {
  const SmoothObjective f = problem_objective(problem, bundle, problem.hyper.eps_smooth);
  return prox_solve(f, feasible_ball(problem), bundle.lambda_env, anchor, options, start);
}

Certificate stationarity_certificate(const ProxResult& prox, double lambda_env, double kappa,
                                     double eps_prox) {
  check_envelope_param(kappa, lambda_env);
  Certificate c;
  c.env_grad_norm = prox.env_grad.norm();
  c.eps_prox = eps_prox;
  c.geom_gap = prox.residual / (1.0 / lambda_env - kappa);
  c.bound = c.env_grad_norm + eps_prox + 2.0 * c.geom_gap / lambda_env;
  return c;
}

double subgradient_distance(const Problem& problem, const Vector& theta, double eps) {
  const Vector g = smoothed_objective(problem, theta, eps, Derivatives::gradient).gradient;
  return stationarity_residual(g, theta, feasible_ball(problem));
}

TraceEnvelope envelope_grad_along_trace(const Problem& problem, const ConstantsBundle& bundle,
                                        RunTrace& trace, const ProxOptions& options) {
  if (trace.iterates.size() < 2) throw InvalidInput("envelope: trace needs at least two iterates");
  const SmoothObjective f = problem_objective(problem, bundle, problem.hyper.eps_smooth);
  const Ball ball = feasible_ball(problem);
  const std::size_t horizon = trace.iterates.size() - 1;

  TraceEnvelope out;
  trace.grad_norms_env.assign(trace.iterates.size(), 0.0);
  out.residuals.resize(trace.iterates.size());
  out.inner_iters.resize(trace.iterates.size());

  Vector warm;
  KahanSum sum_sq;
  for (std::size_t t = 0; t < trace.iterates.size(); ++t) {
    const ProxResult r = prox_solve(f, ball, bundle.lambda_env, trace.iterates[t], options,
                                    t == 0 ? nullptr : &warm);
    warm = r.prox_point;
    const double norm = r.env_grad.norm();
    trace.grad_norms_env[t] = norm;
    out.residuals[t] = r.residual;
    out.inner_iters[t] = r.inner_iters;
    if (t == 0) out.f_env0 = r.env_value;
    if (t < horizon) sum_sq.add(norm * norm);
  }
  out.mean_sq_grad = sum_sq.value() / static_cast<double>(horizon);
  out.rate_rhs = rate_bound_rhs(bundle, trace.eta, horizon, out.f_env0);
  out.tuned_bound = tuned_rate_bound(bundle, horizon, out.f_env0);
  out.smoothing_bias = bundle.lambda * problem.hyper.eps_smooth;
  return out;
}

}  // namespace orpa
