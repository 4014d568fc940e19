#pragma once

#include <cstdint>
#include <vector>

#include "orpa/constants.hpp"
#include "orpa/problem.hpp"

namespace orpa {

/// B triples drawn i.i.d. from d_theta at one iterate, with their labels
/// (1 means y1 is preferred).
struct MiniBatch {
  std::vector<ComparisonTriple> triples;
  std::vector<int> labels;
};

/// Draws the triples from `triple_rng` and then one label per triple from
/// `label_rng`.
MiniBatch form_batch(const Problem& problem, const Vector& theta, std::size_t size,
                     OracleMode mode, Rng& triple_rng, Rng& label_rng);

/// Batch mean of grad ell(z_i, y_i) + ell(z_i, y_i) S(z_i).
Vector stoch_grad_sail(const Problem& problem, const Vector& theta, const MiniBatch& batch);

/// Batch mean of sign(s_i) dpsi_i + |s_i| S(z_i). Labels are not used.
Vector stoch_subgrad_penalty(const Problem& problem, const Vector& theta, const MiniBatch& batch);

/// G_SAIL + lambda G_R.
Vector composite_direction(const Problem& problem, const Vector& theta, const MiniBatch& batch);

struct RunOptions {
  OracleMode mode = OracleMode::true_oracle;
  bool log_exact_loss = false;
  bool record_wall_time = false;
};

struct RunTrace {
  std::vector<Vector> iterates;        ///< theta_0 .. theta_T
  std::vector<double> losses;          ///< exact robust objective per iterate, if logged
  std::vector<double> grad_norms_env;  ///< filled by the envelope module
  std::vector<std::int64_t> wall_ns;   ///< elapsed time per iterate, zeros unless recorded
  std::size_t output_index = 0;        ///< uniform on {0, ..., T-1}
  std::uint64_t rng_seed = 0;
  OracleMode mode = OracleMode::true_oracle;
  double eta = 0.0;
};

/// Projected stochastic composite gradient descent:
///   theta_{t+1} = P(theta_t - eta G(theta_t; Z_t)),
/// with a fresh batch from d_{theta_t} at every step. Streams "triples",
/// "labels", and "output" are split from `seed`, so the output index does not
/// depend on the batch size. Throws NonFiniteIterate on a NaN or infinity.
RunTrace rscgd_run(const Problem& problem, const Vector& theta0, std::uint64_t seed,
                   const RunOptions& options = {});

struct StepsizeChoice {
  double eta = 0.0;
  double rate_bound = 0.0;  ///< the matching sample-complexity bound
  bool degenerate = false;  ///< envelope at theta0 already equals F_inf
};

/// eta = sqrt(2 lambda_env (1 - kappa lambda_env) (F_env(theta0) - F_inf) / (G_tot^2 T)).
StepsizeChoice corollary_stepsize(const ConstantsBundle& bundle, std::size_t horizon_t,
                                  double f_env0);

/// (F_env(theta0) - F_inf) / (eta (1 - kappa lambda_env) T)
///   + L_env eta G_tot^2 / (2 (1 - kappa lambda_env)).
double rate_bound_rhs(const ConstantsBundle& bundle, double eta, std::size_t horizon_t,
                        double f_env0);

/// sqrt(2 G_tot^2 (F_env(theta0) - F_inf) / (lambda_env (1 - kappa lambda_env)^3 T)).
double tuned_rate_bound(const ConstantsBundle& bundle, std::size_t horizon_t, double f_env0);

}  // namespace orpa
