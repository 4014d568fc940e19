#pragma once

#include <cstddef>
#include <vector>

#include "orpa/environment.hpp"
#include "orpa/numeric.hpp"
#include "orpa/rng.hpp"

namespace orpa {

/// Log-linear policy parameters. The feasible set is the closed Euclidean
/// ball of radius `radius_d` around `theta_ref`; `theta_ref` also defines the
/// reference policy pi_ref = pi_{theta_ref}.
struct PolicyParams {
  Vector theta;
  Vector theta_ref;
  double radius_d = 1.0;

  /// Same geometry, different point.
  PolicyParams at(const Vector& point) const { return {point, theta_ref, radius_d}; }
};

/// Checks dimensions against `env` and radius > 0. Feasibility of theta is not
/// required here; see is_feasible.
void validate_params(const Environment& env, const PolicyParams& params);

bool is_feasible(const PolicyParams& params, double tol = 1e-12);

/// log pi_theta(. | x) for every response, via max-shifted log-sum-exp.
Vector log_policy_row(const Environment& env, const Vector& theta, std::size_t x);

double log_policy(const Environment& env, const PolicyParams& params, std::size_t x,
                  std::size_t y);

/// s_theta(z) = (theta - theta_ref)^T (psi(x, y1) - psi(x, y2)).
double pairwise_logit(const Environment& env, const PolicyParams& params,
                      const ComparisonTriple& z);

/// h_theta(z) assembled from the four log-policy values. Equal to
/// pairwise_logit up to rounding because the partition terms cancel.
double log_ratio_logit(const Environment& env, const PolicyParams& params,
                       const ComparisonTriple& z);

/// d_theta(z) = mu(x) pi(y1|x) pi(y2|x), in enumerate_triples order.
std::vector<double> sampling_distribution(const Environment& env, const PolicyParams& params,
                                          std::size_t cap = kDefaultEnumerationCap);

/// Cumulative tables for inverse-CDF sampling from d_theta.
class TripleSampler {
 public:
  TripleSampler(const Environment& env, const Vector& theta);
  ComparisonTriple draw(Rng& rng) const;

 private:
  std::size_t n_responses_;
  std::vector<double> prompt_cdf_;
  std::vector<double> response_cdf_;  // one row of |Y| per prompt
};

/// `count` i.i.d. draws from d_theta: x by inverse CDF on mu, then y1 and y2
/// independently from pi_theta(. | x).
std::vector<ComparisonTriple> sample_triples(const Environment& env, const PolicyParams& params,
                                             Rng& rng, std::size_t count);

/// E_{y ~ pi_theta(.|x)} psi(x, y).
Vector feature_mean(const Environment& env, const Vector& theta, std::size_t x);

/// Cov_{y ~ pi_theta(.|x)} psi(x, y), the Jacobian of feature_mean in theta.
Matrix feature_covariance(const Environment& env, const Vector& theta, std::size_t x);

/// g_theta(x, y) = grad_theta log pi_theta(y|x) = psi(x, y) - feature_mean(x).
Vector policy_score(const Environment& env, const PolicyParams& params, std::size_t x,
                    std::size_t y);

/// S_theta(z) = grad_theta log d_theta(z) = g(x, y1) + g(x, y2).
Vector triple_score(const Environment& env, const PolicyParams& params,
                    const ComparisonTriple& z);

/// E_{x ~ mu, y ~ pi_theta} g g^T.
Matrix fisher_information(const Environment& env, const PolicyParams& params);

/// Euclidean projection onto {u : ||u - theta_ref|| <= radius_d}.
Vector project_feasible(const PolicyParams& params, const Vector& candidate);

/// Uniformly distributed direction on the unit sphere in R^dim.
Vector random_unit_vector(std::size_t dim, Rng& rng);

/// Uniform draw from the feasible ball of `geometry` (theta is ignored).
Vector random_feasible(const PolicyParams& geometry, Rng& rng);

/// Uniform draw from the sphere of radius `fraction * radius_d` around theta_ref.
Vector random_on_shell(const PolicyParams& geometry, double fraction, Rng& rng);

}  // namespace orpa
