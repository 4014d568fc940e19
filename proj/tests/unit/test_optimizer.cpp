#include <doctest.h>

#include <cmath>

#include <orpa/errors.hpp>
#include <orpa/objective.hpp>
#include <orpa/optimizer.hpp>

#include "oracles.hpp"

using namespace orpa;

TEST_SUITE("optimizer") {
  TEST_CASE("single-sample estimators are unbiased") {
    const Problem problem = orpa::testing::random_problem(1, 2, 3, 2);
    const Vector theta = problem.theta_ref + Vector::Constant(2, 0.5);
    Rng triples = make_stream(1, "triples"), labels = make_stream(1, "labels");
    const int n = 100000;
    Eigen::Index d = 2;
    Vector sum_s = Vector::Zero(d), sq_s = Vector::Zero(d);
    Vector sum_r = Vector::Zero(d), sq_r = Vector::Zero(d);
    for (int i = 0; i < n; ++i) {
      const MiniBatch batch =
          form_batch(problem, theta, 1, OracleMode::true_oracle, triples, labels);
      const Vector gs = stoch_grad_sail(problem, theta, batch);
      const Vector gr = stoch_subgrad_penalty(problem, theta, batch);
      sum_s += gs;
      sq_s += gs.cwiseProduct(gs);
      sum_r += gr;
      sq_r += gr.cwiseProduct(gr);
    }
    const Vector exact_s = sail_grad_exact(problem, theta);
    const Vector exact_r = penalty_subgrad_exact(problem, theta);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double ms = sum_s[k] / n, mr = sum_r[k] / n;
      const double se_s = std::sqrt((sq_s[k] / n - ms * ms) / n);
      const double se_r = std::sqrt((sq_r[k] / n - mr * mr) / n);
      CHECK(std::abs(ms - exact_s[k]) <= 4.0 * se_s);
      CHECK(std::abs(mr - exact_r[k]) <= 4.0 * se_r);
    }
  }

  TEST_CASE("composite direction") {
    Problem problem = orpa::testing::random_problem(2, 2, 3, 2);
    const Vector theta = problem.theta_ref + Vector::Constant(2, -0.3);
    Rng triples = make_stream(2, "triples"), labels = make_stream(2, "labels");
    const MiniBatch batch = form_batch(problem, theta, 16, OracleMode::true_oracle, triples, labels);
    const Vector gs = stoch_grad_sail(problem, theta, batch);
    const Vector gr = stoch_subgrad_penalty(problem, theta, batch);
    CHECK((composite_direction(problem, theta, batch) - (gs + problem.hyper.lambda() * gr)).norm() <=
          1e-14);
    problem.hyper.rho = 0.0;
    CHECK(composite_direction(problem, theta, batch) == gs);
    CHECK(stoch_subgrad_penalty(problem, problem.theta_ref, batch).norm() == 0.0);
  }

  TEST_CASE("run keeps iterates feasible and is deterministic") {
    Problem problem = orpa::testing::random_problem(3, 2, 4, 3);
    problem.hyper.eta = 0.5;
    problem.hyper.horizon_t = 60;
    problem.hyper.batch_b = 4;
    const Vector theta0 = problem.theta_ref + Vector::Constant(3, 0.4);
    const RunTrace a = rscgd_run(problem, theta0, 7);
    const RunTrace b = rscgd_run(problem, theta0, 7);
    REQUIRE(a.iterates.size() == 61);
    for (std::size_t t = 0; t < a.iterates.size(); ++t) {
      CHECK((a.iterates[t] - problem.theta_ref).norm() <= problem.radius_d * (1.0 + 1e-12));
      CHECK(a.iterates[t] == b.iterates[t]);
    }
    CHECK(a.output_index < 60);
    CHECK(a.output_index == b.output_index);
    const RunTrace c = rscgd_run(problem, theta0, 8);
    CHECK(c.iterates.back() != a.iterates.back());
  }

  TEST_CASE("output index does not depend on the batch size") {
    Problem problem = orpa::testing::random_problem(4, 2, 3, 2);
    problem.hyper.horizon_t = 25;
    problem.hyper.batch_b = 2;
    const RunTrace a = rscgd_run(problem, problem.theta_ref, 11);
    problem.hyper.batch_b = 9;
    const RunTrace b = rscgd_run(problem, problem.theta_ref, 11);
    CHECK(a.output_index == b.output_index);
  }

  TEST_CASE("logged losses and errors") {
    Problem problem = orpa::testing::random_problem(5, 2, 3, 2);
    problem.hyper.horizon_t = 5;
    RunOptions options;
    options.log_exact_loss = true;
    options.mode = OracleMode::adversarial;
    const RunTrace trace = rscgd_run(problem, problem.theta_ref, 1, options);
    REQUIRE(trace.losses.size() == 6);
    CHECK(trace.losses[0] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(trace.mode == OracleMode::adversarial);

    const Vector outside = problem.theta_ref + Vector::Constant(2, 10.0);
    CHECK_THROWS_AS(rscgd_run(problem, outside, 1), InvalidInput);
    problem.hyper.rho = problem.oracle.delta();
    CHECK_THROWS_AS(rscgd_run(problem, problem.theta_ref, 1), InadmissibleRadius);
  }

  TEST_CASE("non-finite iterates are reported") {
    Problem problem = orpa::testing::random_problem(6, 2, 3, 2);
    problem.radius_d = 1e300;
    problem.hyper.beta = 1e10;
    problem.hyper.eta = 1e308;
    problem.hyper.horizon_t = 50;
    CHECK_THROWS_AS(rscgd_run(problem, problem.theta_ref + Vector::Constant(2, 0.1), 1),
                    NonFiniteIterate);
  }

  TEST_CASE("stepsize and rate formulas") {
    ConstantsBundle c;
    c.kappa = 2.0;
    c.lambda_env = 0.25;
    c.l_env = envelope_smoothness(c.kappa, c.lambda_env);
    c.g_tot2 = 50.0;
    c.f_inf = 0.0;
    const StepsizeChoice s1 = corollary_stepsize(c, 100, 0.8);
    const StepsizeChoice s4 = corollary_stepsize(c, 400, 0.8);
    CHECK(s1.eta == doctest::Approx(std::sqrt(2.0 * 0.25 * 0.5 * 0.8 / (50.0 * 100.0))).epsilon(1e-15));
    CHECK(s4.eta / s1.eta == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(corollary_stepsize(c, 200, 0.8).eta / s1.eta ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(s4.rate_bound / s1.rate_bound == doctest::Approx(0.5).epsilon(1e-14));
    // Plugging the tuned stepsize into the general bound reproduces its rate.
    CHECK(rate_bound_rhs(c, s1.eta, 100, 0.8) == doctest::Approx(s1.rate_bound).epsilon(1e-13));
    CHECK(s1.rate_bound ==
          doctest::Approx(std::sqrt(2.0 * 50.0 * 0.8 / (0.25 * 0.125 * 100.0))).epsilon(1e-14));
    const StepsizeChoice flat = corollary_stepsize(c, 100, 0.0);
    CHECK(flat.degenerate);
    CHECK(flat.eta == 0.0);
    c.lambda_env = 0.6;
    CHECK_THROWS_AS(corollary_stepsize(c, 100, 0.8), InvalidEnvelopeParam);
  }
}
