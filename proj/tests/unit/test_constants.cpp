#include <doctest.h>

#include <cmath>

#include <orpa/constants.hpp>
#include <orpa/errors.hpp>
#include <orpa/objective.hpp>

#include "oracles.hpp"

using namespace orpa;

TEST_SUITE("constants") {
  TEST_CASE("closed-form constants") {
    CHECK(kappa_r_bound(1.0, 2.0) == 24.0);
    CHECK(grad_sail_bound(1.0, 1.0, 1.0) == doctest::Approx(2.0 + 4.0 * (std::log(2.0) + 2.0)));
    CHECK(grad_sail_bound(1.0, 1.0, 1.0) == doctest::Approx(12.7726).epsilon(1e-5));
    CHECK(subgrad_r_bound(1.0, 1.0) == 10.0);
    CHECK(kappa_eps_bound(1.5, 2.0, 0.1) ==
          doctest::Approx(kappa_r_bound(1.5, 2.0) + 2.0 * 1.5 * 1.5 * 0.1).epsilon(1e-15));
    CHECK(second_moment_bound(2.0, 3.0, 0.5, 4.0, 8.0, 2) ==
          doctest::Approx(4.0 * (4.0 + 0.25 * 9.0 + (4.0 + 0.25 * 8.0) / 2.0)));
    CHECK(envelope_smoothness(2.0, 0.25) == doctest::Approx(8.0));
    CHECK_THROWS_AS(check_envelope_param(2.0, 0.5), InvalidEnvelopeParam);
    CHECK_THROWS_AS(check_envelope_param(2.0, 0.0), InvalidEnvelopeParam);
  }

  TEST_CASE("bundle invariants") {
    Problem problem = orpa::testing::random_problem(1, 2, 3, 3, 0.5, 1.2, 2.0);
    problem.hyper.batch_b = 4;
    const ConstantsBundle c = constants_bundle(problem, problem.theta_ref);
    const double b = problem.env.b_psi();
    const double d = problem.radius_d;
    CHECK(c.g_score == 2.0 * b);
    CHECK(c.m_score == b * b);
    CHECK(c.kappa_r == 16.0 * b * b + 4.0 * d * b * b * b);
    CHECK(c.kappa == c.l_sail_smooth + problem.hyper.lambda() * c.kappa_r);
    CHECK(c.lambda_env == doctest::Approx(0.5 / c.kappa).epsilon(1e-15));
    CHECK(c.kappa * c.lambda_env < 1.0);
    CHECK(c.l_env == doctest::Approx(1.0 / (c.lambda_env * (1.0 - c.kappa * c.lambda_env))));
    CHECK(c.g_grad_sail == 2.0 * 1.2 * b + 4.0 * b * (std::log(2.0) + 2.0 * 1.2 * d * b));
    CHECK(c.g_sub_r == 2.0 * b + 8.0 * d * b * b);
    CHECK(c.g_tot2 == doctest::Approx(4.0 * (c.g_grad_sail * c.g_grad_sail +
                                             c.lambda * c.lambda * c.g_sub_r * c.g_sub_r +
                                             (c.sigma2_sail + c.lambda * c.lambda * c.sigma2_r) / 4.0)));
    CHECK(c.f_inf == 0.0);
    CHECK(c.sigma2_sail > 0.0);
    CHECK(c.sigma2_r > 0.0);
  }

  TEST_CASE("overrides and explicit lambda_env") {
    Problem problem = orpa::testing::random_problem(2, 2, 3, 2);
    ConstantsOptions options;
    options.l_sail_smooth = 3.0;
    options.sigma2_sail = 1.0;
    options.sigma2_r = 2.0;
    problem.hyper.lambda_env = 0.01;
    const ConstantsBundle c = constants_bundle(problem, problem.theta_ref, options);
    CHECK(c.l_sail_smooth == 3.0);
    CHECK_FALSE(c.l_sail_estimated);
    CHECK_FALSE(c.sigma2_estimated);
    CHECK(c.sigma2_sail == 1.0);
    CHECK(c.lambda_env == 0.01);

    problem.hyper.lambda_env = 10.0;
    CHECK_THROWS_AS(constants_bundle(problem, problem.theta_ref, options), InvalidEnvelopeParam);
  }

  TEST_CASE("smoothness estimate dominates the probed Hessians") {
    const Problem problem = orpa::testing::random_problem(3, 2, 4, 3);
    const double l = estimate_l_sail(problem, 64, 1.0, 0);
    Rng rng = make_stream(3, "t");
    for (int i = 0; i < 20; ++i) {
      const Vector theta = random_feasible(problem.at(problem.theta_ref), rng);
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(sail_hessian_exact(problem, theta));
      CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() <= 1.5 * l);
    }
  }

  TEST_CASE("exact variances match Monte Carlo") {
    const Problem problem = orpa::testing::random_problem(4, 2, 3, 2);
    const Vector theta = problem.theta_ref + Vector::Constant(2, 0.4);
    const PolicyParams params = problem.at(theta);
    const OracleVariances v = exact_oracle_variances(problem, theta);
    const Vector gs = sail_grad_exact(problem, theta);
    const Vector gr = penalty_subgrad_exact(problem, theta);
    Rng rng = make_stream(4, "t");
    const int n = 200000;
    double acc_s = 0.0, acc_r = 0.0;
    for (const auto& z : sample_triples(problem.env, params, rng, n)) {
      const int y = bernoulli(true_prob(problem.oracle, z), rng);
      const Vector dpsi = delta_psi(problem.env, z);
      const Vector score = triple_score(problem.env, params, z);
      const double s = pairwise_logit(problem.env, params, z);
      acc_s += (sail_sample_grad(1.0, s, y, dpsi, score) - gs).squaredNorm();
      acc_r += (penalty_sample_subgrad(s, dpsi, score) - gr).squaredNorm();
    }
    CHECK(acc_s / n == doctest::Approx(v.sigma2_sail).epsilon(0.03));
    CHECK(acc_r / n == doctest::Approx(v.sigma2_r).epsilon(0.03));
  }
}
