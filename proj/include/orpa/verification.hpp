#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "orpa/problem.hpp"

namespace orpa {

/// One judged inequality or identity. For one-sided checks slack = bound - measured
/// and the check passes when slack >= -tolerance.
struct CheckReport {
  std::string name;
  std::string claim;
  bool passed = false;
  double measured = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  double tolerance = 0.0;
  std::string config_digest;
  std::uint64_t seed = 0;
  nlohmann::json detail = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const CheckReport& r);

/// Hex FNV-1a digest of the canonical (sorted-key, compact) JSON dump.
std::string config_digest(const nlohmann::json& config);

inline constexpr double kOneSidedTol = 1e-6;
inline constexpr double kIdentityTol = 1e-10;

struct InstanceSpec {
  std::size_t n_prompts = 2;
  std::size_t n_responses = 3;
  std::size_t feature_dim = 2;
  double rho_fraction = 0.5;  ///< rho = rho_fraction * delta
  double beta = 1.0;
  double radius_d = 1.0;
  double reward_scale = 1.0;
  double eps_smooth = 1e-8;
};

/// Random environment, oracle, and theta_ref (entries uniform in [-0.5, 0.5]).
Problem make_instance(const InstanceSpec& spec, std::uint64_t seed);

/// |X| = 2, |Y| = 4, d = 3, B = 8, D = 1, rho = min(0.1, delta / 2) (or 0).
Problem benchmark_problem(std::uint64_t seed, bool nominal);

/// Start point theta_ref + D/2 times a seeded unit direction.
Vector benchmark_start(const Problem& problem, std::uint64_t seed);

CheckReport check_decomposition(std::uint64_t seed, std::size_t n_instances = 100);
CheckReport check_counterexample();
CheckReport check_pointwise_sup(std::uint64_t seed, std::size_t n_samples = 1000,
                                std::size_t grid_points = 100000);
std::vector<CheckReport> check_gradient_exactness(std::uint64_t seed, std::size_t n_theta = 50);
std::vector<CheckReport> check_unbiasedness(std::uint64_t seed, std::size_t n_samples = 100000);
std::vector<CheckReport> check_constant_bounds(std::uint64_t seed, std::size_t n_probes = 200);
std::vector<CheckReport> check_weak_convexity(std::uint64_t seed, std::size_t n_pairs = 500,
                                              std::vector<double> eps_list = {1e-2, 1e-4});
std::vector<CheckReport> check_convergence(std::uint64_t seed, std::size_t seed_count = 16,
                                           std::vector<std::size_t> t_list = {200, 800, 3200});
std::vector<CheckReport> check_prox_lemmas(std::uint64_t seed, std::size_t n_probes = 100);
/// Monte Carlo version of the expected one-step decrease at a frozen iterate.
std::vector<CheckReport> check_one_step(std::uint64_t seed, std::size_t n_batches = 1000);

struct Claim {
  std::string id;
  std::string statement;
};

/// Every claim the battery is meant to certify.
const std::vector<Claim>& claims();

struct CheckEntry {
  std::string name;
  std::vector<std::string> claims;
  bool slow = false;
  std::function<std::vector<CheckReport>(std::uint64_t seed)> run;
};

const std::vector<CheckEntry>& check_registry();

/// Claim ids no registered check covers, and claim ids used by checks but
/// missing from the manifest.
struct CoverageGap {
  std::vector<std::string> unclaimed;
  std::vector<std::string> unknown;
};
CoverageGap coverage_gaps();

/// Runs the named check, or every non-slow check when `name` is empty.
std::vector<CheckReport> run_checks(const std::string& name, std::uint64_t seed);

}  // namespace orpa
