#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "orpa/environment.hpp"
#include "orpa/policy.hpp"
#include "orpa/rng.hpp"

namespace orpa {

/// Bradley–Terry preference oracle built from a latent reward table r*(x, y),
/// stored x-major. The margin delta is always recomputed from the table.
class TrueOracle {
 public:
  TrueOracle(std::size_t n_prompts, std::size_t n_responses, std::vector<double> reward);

  std::size_t num_prompts() const { return n_prompts_; }
  std::size_t num_responses() const { return n_responses_; }
  const std::vector<double>& reward_table() const { return reward_; }
  double reward(std::size_t x, std::size_t y) const { return reward_[x * n_responses_ + y]; }

  /// Largest delta with delta <= P*(y1 > y2 | x) <= 1 - delta for every triple.
  double delta() const { return delta_; }

 private:
  std::size_t n_prompts_;
  std::size_t n_responses_;
  std::vector<double> reward_;
  double delta_;
};

/// min over prompts of sigmoid(-(max_y r - min_y r)), which equals the minimum
/// of min(p*, 1 - p*) over all triples.
double compute_margin(const TrueOracle& oracle);

/// Throws InvalidInput when the reward table does not match env's sizes.
void check_compatible(const TrueOracle& oracle, const Environment& env);

/// Throws InadmissibleRadius unless rho == 0 or 0 <= rho < delta.
void check_admissible(const TrueOracle& oracle, double rho);

/// p*(z) = sigmoid(r*(x, y1) - r*(x, y2)).
double true_prob(const TrueOracle& oracle, const ComparisonTriple& z);

/// Adversarial endpoint for a triple with pairwise logit h: p* + rho when
/// h <= 0 (the positive-label loss is at least the negative one), else p* - rho.
double worst_case_prob(const TrueOracle& oracle, double rho, const ComparisonTriple& z, double h);

double worst_case_prob(const TrueOracle& oracle, double rho, const Environment& env,
                       const PolicyParams& params, const ComparisonTriple& z);

/// sup over p in [p* - rho, p* + rho] of p a + (1 - p) b, which is
/// p* a + (1 - p*) b + rho |a - b|. Throws IntervalOutOfRange when the
/// interval leaves [0, 1].
double pointwise_sup_value(double p_star, double rho, double a, double b);

enum class OracleMode { true_oracle, adversarial };

const char* to_string(OracleMode mode);
OracleMode parse_oracle_mode(const std::string& text);

/// Bernoulli preference label, 1 meaning y1 is preferred. Under
/// OracleMode::true_oracle rho is ignored.
int sample_label(OracleMode mode, const TrueOracle& oracle, double rho, const Environment& env,
                 const PolicyParams& params, const ComparisonTriple& z, Rng& rng);

/// Label draw with a precomputed success probability. Uses exactly one
/// uniform draw so label streams stay aligned across modes.
inline int bernoulli(double p, Rng& rng) { return uniform01(rng) < p ? 1 : 0; }

/// Reward table with entries uniform in [-scale, scale].
TrueOracle make_random_oracle(const Environment& env, double scale, std::uint64_t seed);

}  // namespace orpa
