#pragma once

// Test-side reference computations. Nothing here calls the library's
// enumeration kernel or its closed-form derivatives, so agreement with the
// library is evidence rather than tautology.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <orpa/environment.hpp>
#include <orpa/numeric.hpp>
#include <orpa/oracle.hpp>
#include <orpa/policy.hpp>
#include <orpa/problem.hpp>

namespace orpa::testing {

/// pi_theta(. | x) by direct exponentiation and normalization (no shift).
inline std::vector<double> naive_policy_row(const Environment& env, const Vector& theta,
                                            std::size_t x) {
  std::vector<double> p(env.num_responses());
  double total = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    double dot = 0.0;
    for (std::size_t k = 0; k < env.feature_dim(); ++k) dot += theta[k] * env.feature_data(x, y)[k];
    p[y] = std::exp(dot);
    total += p[y];
  }
  for (double& v : p) v /= total;
  return p;
}

/// sum_z d_theta(z) f(z, s) by a plain triple loop.
inline double naive_expectation(const Problem& problem, const Vector& theta,
                                const std::function<double(const ComparisonTriple&, double)>& f) {
  const Environment& env = problem.env;
  long double acc = 0.0L;
  for (std::size_t x = 0; x < env.num_prompts(); ++x) {
    const std::vector<double> p = naive_policy_row(env, theta, x);
    for (std::size_t y1 = 0; y1 < env.num_responses(); ++y1) {
      for (std::size_t y2 = 0; y2 < env.num_responses(); ++y2) {
        double s = 0.0;
        for (std::size_t k = 0; k < env.feature_dim(); ++k) {
          s += (theta[k] - problem.theta_ref[k]) *
               (env.feature_data(x, y1)[k] - env.feature_data(x, y2)[k]);
        }
        acc += static_cast<long double>(env.mu()[x] * p[y1] * p[y2]) * f({x, y1, y2}, s);
      }
    }
  }
  return static_cast<double>(acc);
}

inline double naive_softplus(double u) { return std::log1p(std::exp(u)); }

inline double naive_sail_loss(const Problem& problem, const Vector& theta) {
  const double beta = problem.hyper.beta;
  return naive_expectation(problem, theta, [&](const ComparisonTriple& z, double s) {
    const double r1 = problem.oracle.reward(z.x, z.y1);
    const double r2 = problem.oracle.reward(z.x, z.y2);
    const double p = 1.0 / (1.0 + std::exp(-(r1 - r2)));
    return p * naive_softplus(-beta * s) + (1.0 - p) * naive_softplus(beta * s);
  });
}

inline double naive_penalty(const Problem& problem, const Vector& theta) {
  return naive_expectation(problem, theta,
                           [](const ComparisonTriple&, double s) { return std::abs(s); });
}

/// Central-difference gradient with step h * max(1, ||x||).
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h = 1e-5) {
  const double step = h * std::max(1.0, x.norm());
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a[i] += step;
    b[i] -= step;
    g[i] = (f(a) - f(b)) / (2.0 * step);
  }
  return g;
}

/// Symmetrized central-difference Jacobian of a gradient map.
inline Matrix fd_hessian(const std::function<Vector(const Vector&)>& grad, const Vector& x,
                         double h = 1e-5) {
  const double step = h * std::max(1.0, x.norm());
  const Eigen::Index d = x.size();
  Matrix hess(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    Vector a = x, b = x;
    a[i] += step;
    b[i] -= step;
    hess.col(i) = (grad(a) - grad(b)) / (2.0 * step);
  }
  return 0.5 * (hess + hess.transpose());
}

inline double relative_error(const Vector& approx, const Vector& exact) {
  const double scale = exact.norm();
  return scale > 0.0 ? (approx - exact).norm() / scale : approx.norm();
}

/// max over an n-point uniform grid of [lo, hi] of p a + (1 - p) b.
inline double grid_max_linear(double lo, double hi, double a, double b, std::size_t n) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double p = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    best = std::max(best, p * a + (1.0 - p) * b);
  }
  return best;
}

/// Random small problem for property tests.
Problem random_problem(std::uint64_t seed, std::size_t nx = 2, std::size_t ny = 3,
                       std::size_t d = 2, double rho_fraction = 0.5, double beta = 1.0,
                       double radius = 1.5);

}  // namespace orpa::testing
