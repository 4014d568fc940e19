#include "orpa/problem.hpp"

#include <cmath>

#include "orpa/errors.hpp"

namespace orpa {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidInput(std::string("hyperparams: ") + what);
}

}  // namespace

void validate_hyper(const Hyperparams& hyper) {
  require(hyper.beta > 0.0 && std::isfinite(hyper.beta), "beta must be positive and finite");
  require(hyper.rho >= 0.0 && std::isfinite(hyper.rho), "rho must be nonnegative and finite");
  require(hyper.eps_smooth > 0.0 && std::isfinite(hyper.eps_smooth),
          "eps_smooth must be positive and finite");
  require(hyper.eta > 0.0 && std::isfinite(hyper.eta), "eta must be positive and finite");
  require(hyper.horizon_t >= 1, "horizon_t must be at least 1");
  require(hyper.batch_b >= 1, "batch_b must be at least 1");
  require(hyper.lambda_env >= 0.0 && std::isfinite(hyper.lambda_env),
          "lambda_env must be nonnegative and finite");
}

void validate_problem(const Problem& problem) {
  check_compatible(problem.oracle, problem.env);
  validate_params(problem.env, problem.at(problem.theta_ref));
  validate_hyper(problem.hyper);
  check_admissible(problem.oracle, problem.hyper.rho);
}

}  // namespace orpa
