#include <doctest.h>

#include <cmath>

#include <orpa/errors.hpp>
#include <orpa/oracle.hpp>

#include "oracles.hpp"

using namespace orpa;

TEST_SUITE("oracle") {
  TEST_CASE("true probability and antisymmetry") {
    RandomEnvironmentSpec spec;
    spec.n_prompts = 3;
    spec.n_responses = 4;
    const Environment env = make_random_environment(spec, 1);
    const TrueOracle oracle = make_random_oracle(env, 2.0, 1);
    for (const auto& z : enumerate_triples(env)) {
      const double p = true_prob(oracle, z);
      CHECK(p + true_prob(oracle, {z.x, z.y2, z.y1}) == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(p >= oracle.delta());
      CHECK(p <= 1.0 - oracle.delta() + 1e-16);
      if (z.y1 == z.y2) CHECK(p == 0.5);
    }
  }

  TEST_CASE("margin") {
    const TrueOracle flat(2, 3, std::vector<double>(6, 0.7));
    CHECK(flat.delta() == 0.5);

    const TrueOracle nine(1, 2, {std::log(9.0), 0.0});
    CHECK(nine.delta() == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(true_prob(nine, {0, 0, 1}) == doctest::Approx(0.9).epsilon(1e-14));

    // Brute-force minimum over enumerated triples.
    RandomEnvironmentSpec spec;
    spec.n_prompts = 3;
    spec.n_responses = 5;
    const Environment env = make_random_environment(spec, 2);
    const TrueOracle oracle = make_random_oracle(env, 3.0, 2);
    double brute = 0.5;
    for (const auto& z : enumerate_triples(env)) {
      const double p = true_prob(oracle, z);
      brute = std::min(brute, std::min(p, 1.0 - p));
    }
    CHECK(oracle.delta() == doctest::Approx(brute).epsilon(1e-14));
  }

  TEST_CASE("admissibility") {
    const TrueOracle oracle(1, 2, {std::log(9.0), 0.0});
    CHECK_NOTHROW(check_admissible(oracle, 0.0));
    CHECK_NOTHROW(check_admissible(oracle, 0.099));
    CHECK_THROWS_AS(check_admissible(oracle, 0.1), InadmissibleRadius);
    CHECK_THROWS_AS(check_admissible(oracle, -0.01), InadmissibleRadius);
    CHECK_THROWS_AS(worst_case_prob(oracle, 0.2, {0, 0, 1}, 1.0), InadmissibleRadius);
  }

  TEST_CASE("worst-case endpoint") {
    const TrueOracle oracle(1, 2, {0.4, -0.1});
    const ComparisonTriple z{0, 0, 1};
    const double p = true_prob(oracle, z);
    CHECK(worst_case_prob(oracle, 0.0, z, 0.7) == p);
    CHECK(worst_case_prob(oracle, 0.05, z, 0.7) == p - 0.05);
    CHECK(worst_case_prob(oracle, 0.05, z, -0.7) == p + 0.05);
    CHECK(worst_case_prob(oracle, 0.05, z, 0.0) == p + 0.05);

    // The endpoint maximizes the expected loss over the interval.
    Rng rng = make_stream(3, "t");
    for (int i = 0; i < 50; ++i) {
      const double h = uniform(rng, -3.0, 3.0);
      const double beta = uniform(rng, 0.2, 2.0);
      const double rho = uniform(rng, 0.0, 0.99 * oracle.delta());
      const double a = std::log1p(std::exp(-beta * h));
      const double b = std::log1p(std::exp(beta * h));
      const double q = worst_case_prob(oracle, rho, z, h);
      const double grid = orpa::testing::grid_max_linear(p - rho, p + rho, a, b, 100001);
      CHECK(q * a + (1.0 - q) * b >= grid - 1e-12);
    }
  }

  TEST_CASE("pointwise supremum") {
    CHECK(pointwise_sup_value(0.5, 0.1, 2.0, 1.0) == doctest::Approx(1.6).epsilon(1e-15));
    CHECK(pointwise_sup_value(0.3, 0.2, 1.5, 1.5) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(pointwise_sup_value(0.3, 0.0, 2.0, 1.0) == doctest::Approx(0.3 * 2.0 + 0.7).epsilon(1e-15));
    CHECK_THROWS_AS(pointwise_sup_value(0.05, 0.1, 1.0, 0.0), IntervalOutOfRange);
    CHECK_THROWS_AS(pointwise_sup_value(0.95, 0.1, 1.0, 0.0), IntervalOutOfRange);

    Rng rng = make_stream(4, "t");
    for (int i = 0; i < 200; ++i) {
      const double p = uniform(rng, 0.05, 0.95);
      const double rho = uniform(rng, 0.0, std::min(p, 1.0 - p));
      const double a = uniform(rng, -5.0, 5.0);
      const double b = uniform(rng, -5.0, 5.0);
      const double grid = orpa::testing::grid_max_linear(p - rho, p + rho, a, b, 100001);
      const double closed = pointwise_sup_value(p, rho, a, b);
      CHECK(closed >= grid - 1e-12);
      CHECK(closed - grid <= 2e-5 * std::abs(a - b) + 1e-12);
    }
  }

  TEST_CASE("label sampling") {
    const TrueOracle oracle(1, 2, {std::log(9.0), 0.0});
    const Environment env({"x"}, {"a", "b"}, {1.0}, 1, {1.0, 0.0});
    const PolicyParams params{Vector::Constant(1, 0.5), Vector::Zero(1), 1.0};
    const ComparisonTriple z{0, 0, 1};
    Rng rng = make_stream(5, "t");
    const int n = 100000;
    double ones = 0.0;
    for (int i = 0; i < n; ++i) {
      ones += sample_label(OracleMode::true_oracle, oracle, 0.05, env, params, z, rng);
    }
    CHECK(std::abs(ones / n - 0.9) <= 0.004);

    double adv = 0.0;
    for (int i = 0; i < n; ++i) {
      adv += sample_label(OracleMode::adversarial, oracle, 0.05, env, params, z, rng);
    }
    CHECK(std::abs(adv / n - 0.85) <= 0.004);  // h > 0, so p* - rho

    Rng a = make_stream(6, "t"), b = make_stream(6, "t");
    for (int i = 0; i < 100; ++i) {
      CHECK(sample_label(OracleMode::true_oracle, oracle, 0.0, env, params, z, a) ==
            sample_label(OracleMode::true_oracle, oracle, 0.0, env, params, z, b));
    }
    CHECK_THROWS_AS(sample_label(OracleMode::adversarial, oracle, 0.5, env, params, z, a),
                    InadmissibleRadius);
    CHECK_NOTHROW(sample_label(OracleMode::true_oracle, oracle, 0.5, env, params, z, a));
  }

  TEST_CASE("adversary flips with the triple") {
    const TrueOracle oracle(1, 3, {0.2, -0.3, 0.5});
    const ComparisonTriple z{0, 0, 2}, flipped{0, 2, 0};
    const double h = 0.8;
    CHECK(worst_case_prob(oracle, 0.1, z, h) + worst_case_prob(oracle, 0.1, flipped, -h) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("mode parsing") {
    CHECK(parse_oracle_mode("true") == OracleMode::true_oracle);
    CHECK(parse_oracle_mode("adversarial") == OracleMode::adversarial);
    CHECK_THROWS_AS(parse_oracle_mode("other"), InvalidInput);
  }
}
