#include <doctest.h>

#include <cmath>

#include <orpa/errors.hpp>
#include <orpa/objective.hpp>

#include "oracles.hpp"

using namespace orpa;
using orpa::testing::fd_gradient;
using orpa::testing::fd_hessian;
using orpa::testing::random_problem;
using orpa::testing::relative_error;

namespace {

Problem counterexample_problem() {
  Environment env = make_two_response_example();
  TrueOracle oracle(1, 2, {0.0, 0.0});
  return Problem{std::move(env), std::move(oracle), Vector::Zero(1), 10.0, Hyperparams{}};
}

double closed_form_penalty(double t) {
  return 2.0 * std::abs(t) * std::exp(t) / ((1.0 + std::exp(t)) * (1.0 + std::exp(t)));
}

}  // namespace

TEST_SUITE("objective") {
  TEST_CASE("per-sample losses") {
    const PerSampleLosses zero = per_sample_losses(1.3, 0.0);
    CHECK(zero.ell1 == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(zero.ell0 == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    const Problem problem = random_problem(1, 2, 3, 2, 0.5, 1.7, 2.0);
    const double cap = std::log(2.0) + 2.0 * 1.7 * problem.radius_d * problem.env.b_psi();
    Rng rng = make_stream(1, "t");
    for (int i = 0; i < 100; ++i) {
      const PolicyParams params = problem.at(random_feasible(problem.at(problem.theta_ref), rng));
      for (const auto& z : enumerate_triples(problem.env)) {
        const PerSampleLosses l = per_sample_losses(problem.env, params, problem.hyper, z);
        const double h = pairwise_logit(problem.env, params, z);
        CHECK(std::abs((l.ell1 - l.ell0) + 1.7 * h) <= 1e-10);
        CHECK(l.ell1 >= 0.0);
        CHECK(l.ell0 >= 0.0);
        CHECK(l.ell1 <= cap + 1e-12);
        CHECK(l.ell0 <= cap + 1e-12);
      }
    }
    // Large logits stay finite.
    CHECK(std::isfinite(per_sample_losses(1.0, 800.0).ell0));
    CHECK(per_sample_losses(1.0, 800.0).ell1 >= 0.0);
  }

  TEST_CASE("SAIL loss against naive enumeration") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Problem problem = random_problem(seed, 3, 4, 3);
      CHECK(sail_loss_exact(problem, problem.theta_ref) ==
            doctest::Approx(std::log(2.0)).epsilon(1e-14));
      Rng rng = make_stream(seed, "t");
      for (int i = 0; i < 5; ++i) {
        const Vector theta = random_feasible(problem.at(problem.theta_ref), rng);
        CHECK(sail_loss_exact(problem, theta) ==
              doctest::Approx(orpa::testing::naive_sail_loss(problem, theta)).epsilon(1e-12));
        CHECK(robust_penalty_exact(problem, theta) ==
              doctest::Approx(orpa::testing::naive_penalty(problem, theta)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("SAIL loss is invariant to per-prompt reward shifts") {
    Problem problem = random_problem(3, 2, 3, 2);
    const Vector theta = problem.theta_ref + Vector::Constant(2, 0.4);
    const double before = sail_loss_exact(problem, theta);
    std::vector<double> shifted = problem.oracle.reward_table();
    for (std::size_t y = 0; y < 3; ++y) shifted[y] += 5.0;
    for (std::size_t y = 3; y < 6; ++y) shifted[y] -= 2.0;
    problem.oracle = TrueOracle(2, 3, shifted);
    CHECK(sail_loss_exact(problem, theta) == doctest::Approx(before).epsilon(1e-13));
  }

  TEST_CASE("SAIL loss against on-policy Monte Carlo") {
    const Problem problem = random_problem(4, 2, 3, 2);
    const Vector theta = problem.theta_ref + Vector::Constant(2, 0.6);
    const PolicyParams params = problem.at(theta);
    Rng rng = make_stream(4, "t");
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (const auto& z : sample_triples(problem.env, params, rng, n)) {
      const int y = bernoulli(true_prob(problem.oracle, z), rng);
      const PerSampleLosses l = per_sample_losses(problem.env, params, problem.hyper, z);
      const double v = y == 1 ? l.ell1 : l.ell0;
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    CHECK(std::abs(mean - sail_loss_exact(problem, theta)) <= 4.0 * se);
  }

  TEST_CASE("counterexample penalty") {
    const Problem problem = counterexample_problem();
    for (double t : {0.5, 1.0, 2.0, -1.0}) {
      CHECK(std::abs(robust_penalty_exact(problem, Vector::Constant(1, t)) -
                     closed_form_penalty(t)) <= 1e-12);
    }
    CHECK(robust_penalty_exact(problem, Vector::Zero(1)) == 0.0);
    CHECK(robust_penalty_exact(problem, Vector::Constant(1, 1.0)) ==
          doctest::Approx(0.3932239).epsilon(1e-7));
    const double e = std::exp(1.0);
    const double gap = 2.0 * e * (e - 1.0) * (e * e * e - 1.0) /
                       ((1.0 + e) * (1.0 + e) * (1.0 + e * e) * (1.0 + e * e));
    const double measured = robust_penalty_exact(problem, Vector::Constant(1, 1.0)) -
                            0.5 * robust_penalty_exact(problem, Vector::Constant(1, 2.0));
    CHECK(std::abs(measured - gap) <= 1e-12);
    CHECK(measured > 0.0);
  }

  TEST_CASE("smoothed penalty sandwich and limit") {
    const Problem problem = random_problem(5, 3, 3, 2);
    Rng rng = make_stream(5, "t");
    for (int i = 0; i < 20; ++i) {
      const Vector theta = random_feasible(problem.at(problem.theta_ref), rng);
      const double r = robust_penalty_exact(problem, theta);
      for (double eps : {1e-2, 1e-6}) {
        const double gap = robust_penalty_smoothed(problem, theta, eps) - r;
        CHECK(gap >= -1e-15);
        CHECK(gap <= eps + 1e-15);
      }
    }
    CHECK(robust_penalty_smoothed(problem, problem.theta_ref, 1e-3) ==
          doctest::Approx(1e-3).epsilon(1e-13));
    const Vector theta = problem.theta_ref + Vector::Constant(2, 0.3);
    const double r = robust_penalty_exact(problem, theta);
    double prev = 1.0;
    for (int k = 1; k <= 8; ++k) {
      const double gap = robust_penalty_smoothed(problem, theta, std::pow(10.0, -k)) - r;
      CHECK(gap <= prev);
      prev = gap;
    }
    CHECK(prev <= 1e-8);
  }

  TEST_CASE("decomposition identity") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      Rng rng = make_stream(seed, "t/instance");
      const auto nx = 1 + uniform_index(rng, 3);
      const auto ny = 1 + uniform_index(rng, 5);
      const auto d = 1 + uniform_index(rng, 4);
      Problem problem = random_problem(seed, nx, ny, d, uniform(rng, 0.0, 0.99), uniform(rng, 0.2, 3.0));
      const Vector theta = random_feasible(problem.at(problem.theta_ref), rng);
      const double closed = robust_objective_closed_form(problem, theta);
      CHECK(std::abs(robust_objective_worstcase(problem, theta) - closed) <= 1e-10);
      CHECK(std::abs(adversarial_oracle_loss(problem, theta) - closed) <= 1e-10);
      problem.hyper.rho = 0.0;
      CHECK(robust_objective_closed_form(problem, theta) == sail_loss_exact(problem, theta));
      CHECK(std::abs(robust_objective_worstcase(problem, theta) - sail_loss_exact(problem, theta)) <=
            1e-12);
    }
  }

  TEST_CASE("closed form is affine and nondecreasing in rho") {
    Problem problem = random_problem(6, 2, 4, 3);
    const Vector theta = problem.theta_ref + Vector::Constant(3, 0.3);
    const double r = robust_penalty_exact(problem, theta);
    const double base = sail_loss_exact(problem, theta);
    double prev = base;
    for (int k = 0; k <= 10; ++k) {
      problem.hyper.rho = 0.09 * k * problem.oracle.delta();
      const double v = robust_objective_closed_form(problem, theta);
      CHECK(std::abs(v - (base + problem.hyper.rho * problem.hyper.beta * r)) <= 1e-12);
      CHECK(v >= prev - 1e-15);
      prev = v;
    }
    problem.hyper.rho = problem.oracle.delta();
    CHECK_THROWS_AS(robust_objective_closed_form(problem, theta), InadmissibleRadius);
    CHECK_THROWS_AS(robust_objective_worstcase(problem, theta), InadmissibleRadius);
  }

  TEST_CASE("gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const Problem problem = random_problem(seed, 2, 4, 3);
      Rng rng = make_stream(seed, "t");
      for (int i = 0; i < 10; ++i) {
        const Vector theta = random_feasible(problem.at(problem.theta_ref), rng);
        const auto sail = [&](const Vector& u) { return sail_loss_exact(problem, u); };
        CHECK(relative_error(fd_gradient(sail, theta), sail_grad_exact(problem, theta)) <= 1e-5);
        const auto pen = [&](const Vector& u) { return robust_penalty_smoothed(problem, u, 1e-6); };
        CHECK(relative_error(fd_gradient(pen, theta), smoothed_penalty_grad(problem, theta, 1e-6)) <=
              1e-5);
        const auto sg = [&](const Vector& u) { return sail_grad_exact(problem, u); };
        CHECK(relative_error(fd_hessian(sg, theta).reshaped(), sail_hessian_exact(problem, theta).reshaped()) <=
              1e-5);
        const auto pg = [&](const Vector& u) { return smoothed_penalty_grad(problem, u, 1e-2); };
        CHECK(relative_error(fd_hessian(pg, theta).reshaped(),
                             smoothed_penalty_hessian(problem, theta, 1e-2).reshaped()) <= 1e-5);
      }
    }
  }

  TEST_CASE("SAIL gradient at the reference with a symmetric oracle") {
    Problem problem = random_problem(7, 2, 3, 2);
    problem.oracle = TrueOracle(2, 3, std::vector<double>(6, 0.0));
    problem.hyper.rho = 0.0;
    const Vector g = sail_grad_exact(problem, problem.theta_ref);
    // With p* = 1/2 and h = 0 the loss is constant, so the score term vanishes
    // and so does the pathwise term by symmetry of dpsi.
    CHECK(g.norm() <= 1e-14);
  }

  TEST_CASE("penalty subgradient") {
    const Problem problem = random_problem(8, 2, 4, 3);
    const double b = problem.env.b_psi();
    const double bound = 2.0 * b + 8.0 * problem.radius_d * b * b;
    Rng rng = make_stream(8, "t");
    for (int i = 0; i < 30; ++i) {
      const Vector theta = random_feasible(problem.at(problem.theta_ref), rng);
      const Vector v = penalty_subgrad_exact(problem, theta);
      CHECK(v.norm() <= bound);
      CHECK(relative_error(v, smoothed_penalty_grad(problem, theta, 1e-8)) <= 1e-6);
      const Vector other = random_feasible(problem.at(problem.theta_ref), rng);
      CHECK(std::abs(robust_penalty_exact(problem, theta) - robust_penalty_exact(problem, other)) <=
            bound * (theta - other).norm());
    }
    CHECK(penalty_subgrad_exact(problem, problem.theta_ref).norm() == 0.0);
  }

  TEST_CASE("sample gradients average to the exact ones") {
    const Problem problem = random_problem(9, 2, 3, 2);
    const Vector theta = problem.theta_ref + Vector::Constant(2, 0.5);
    const PolicyParams params = problem.at(theta);
    Vector sail = Vector::Zero(2), pen = Vector::Zero(2);
    const auto d = sampling_distribution(problem.env, params);
    for (const auto& z : enumerate_triples(problem.env)) {
      const double w = d[problem.env.triple_index(z)];
      const double p = true_prob(problem.oracle, z);
      const Vector dpsi = delta_psi(problem.env, z);
      const Vector score = triple_score(problem.env, params, z);
      const double s = pairwise_logit(problem.env, params, z);
      sail += w * (p * sail_sample_grad(1.0, s, 1, dpsi, score) +
                   (1.0 - p) * sail_sample_grad(1.0, s, 0, dpsi, score));
      pen += w * penalty_sample_subgrad(s, dpsi, score);
    }
    CHECK(relative_error(sail, sail_grad_exact(problem, theta)) <= 1e-13);
    CHECK(relative_error(pen, penalty_subgrad_exact(problem, theta)) <= 1e-13);
  }
}
