#include <doctest.h>

#include <orpa/environment.hpp>
#include <orpa/errors.hpp>

using namespace orpa;

TEST_SUITE("environment") {
  TEST_CASE("enumeration order is lexicographic") {
    const Environment env = make_two_response_example();
    const auto triples = enumerate_triples(env);
    REQUIRE(triples.size() == 4);
    CHECK(triples[0] == ComparisonTriple{0, 0, 0});
    CHECK(triples[1] == ComparisonTriple{0, 0, 1});
    CHECK(triples[2] == ComparisonTriple{0, 1, 0});
    CHECK(triples[3] == ComparisonTriple{0, 1, 1});
    for (std::size_t i = 0; i < triples.size(); ++i) {
      CHECK(env.triple_index(triples[i]) == i);
      CHECK(env.triple_at(i) == triples[i]);
    }
  }

  TEST_CASE("triple count and cap") {
    RandomEnvironmentSpec spec;
    spec.n_prompts = 2;
    spec.n_responses = 3;
    CHECK(enumerate_triples(make_random_environment(spec, 1)).size() == 18);

    spec.n_prompts = 100;
    spec.n_responses = 200;
    spec.feature_dim = 1;
    const Environment big = make_random_environment(spec, 1);
    CHECK_THROWS_AS(enumerate_triples(big), EnumerationCapExceeded);
    CHECK_NOTHROW(check_enumeration_cap(big, 4'000'000));
  }

  TEST_CASE("delta_psi") {
    const Environment env = make_two_response_example();
    CHECK(delta_psi(env, {0, 0, 1})[0] == 1.0);
    CHECK(delta_psi(env, {0, 1, 1}).norm() == 0.0);

    RandomEnvironmentSpec spec;
    spec.n_prompts = 3;
    spec.n_responses = 5;
    spec.feature_dim = 4;
    const Environment rnd = make_random_environment(spec, 7);
    for (const auto& z : enumerate_triples(rnd)) {
      CHECK(delta_psi(rnd, z).norm() <= 2.0 * rnd.b_psi() * (1.0 + 1e-15));
    }
  }

  TEST_CASE("b_psi is exact or validated") {
    const Environment env = make_two_response_example();
    CHECK(env.b_psi() == 1.0);
    CHECK(Environment({"x"}, {"a", "b"}, {1.0}, 1, {1.0, 0.0}, 2.0).b_psi() == 2.0);
    CHECK_THROWS_AS(Environment({"x"}, {"a", "b"}, {1.0}, 1, {1.0, 0.0}, 0.5), InvalidInput);
  }

  TEST_CASE("target b_psi rescales the table") {
    RandomEnvironmentSpec spec;
    spec.target_b_psi = 3.0;
    const Environment env = make_random_environment(spec, 11);
    CHECK(env.b_psi() == doctest::Approx(3.0).epsilon(1e-14));
  }

  TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(Environment({}, {"a"}, {}, 1, {}), InvalidInput);
    CHECK_THROWS_AS(Environment({"x"}, {}, {1.0}, 1, {}), InvalidInput);
    CHECK_THROWS_AS(Environment({"x"}, {"a"}, {0.9}, 1, {0.0}), InvalidInput);
    CHECK_THROWS_AS(Environment({"x"}, {"a"}, {1.0}, 2, {0.0}), InvalidInput);
    CHECK_THROWS_AS(Environment({"x", "w"}, {"a"}, {1.5, -0.5}, 1, {0.0, 0.0}), InvalidInput);
    CHECK_THROWS_AS(Environment({"x"}, {"a"}, {1.0}, 1, {std::nan("")}), InvalidInput);
  }

  TEST_CASE("generator is deterministic in the seed") {
    RandomEnvironmentSpec spec;
    const Environment a = make_random_environment(spec, 5);
    const Environment b = make_random_environment(spec, 5);
    const Environment c = make_random_environment(spec, 6);
    CHECK(a.feature_table() == b.feature_table());
    CHECK(a.mu() == b.mu());
    CHECK(a.feature_table() != c.feature_table());
  }
}
