#pragma once

#include <cstddef>

#include "orpa/environment.hpp"
#include "orpa/oracle.hpp"
#include "orpa/policy.hpp"

namespace orpa {

struct Hyperparams {
  double beta = 1.0;
  double rho = 0.0;
  double eps_smooth = 1e-8;
  double eta = 1e-2;
  std::size_t horizon_t = 100;
  std::size_t batch_b = 8;
  /// Envelope parameter. Zero means "not chosen yet"; constants_bundle then
  /// picks 0.5 / kappa.
  double lambda_env = 0.0;

  /// Weight of the robust penalty, rho * beta.
  double lambda() const { return rho * beta; }
};

/// Throws InvalidInput on nonpositive beta, eps_smooth, eta, horizon or batch,
/// or negative rho / lambda_env.
void validate_hyper(const Hyperparams& hyper);

/// Everything the exact evaluators need: the comparison universe, the true
/// oracle, the feasible ball, and the hyperparameters.
struct Problem {
  Environment env;
  TrueOracle oracle;
  Vector theta_ref;
  double radius_d = 1.0;
  Hyperparams hyper;

  PolicyParams at(const Vector& theta) const { return {theta, theta_ref, radius_d}; }
  std::size_t dim() const { return env.feature_dim(); }
};

/// Checks sizes, hyperparameters, and rho against the oracle margin.
void validate_problem(const Problem& problem);

}  // namespace orpa
