#include "orpa/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "orpa/errors.hpp"

namespace orpa {

TrueOracle::TrueOracle(std::size_t n_prompts, std::size_t n_responses, std::vector<double> reward)
    : n_prompts_(n_prompts), n_responses_(n_responses), reward_(std::move(reward)), delta_(0.0) {
  if (n_prompts_ == 0 || n_responses_ == 0) {
    throw InvalidInput("oracle: reward table must have at least one prompt and one response");
  }
  if (reward_.size() != n_prompts_ * n_responses_) {
    throw InvalidInput("oracle: reward table has " + std::to_string(reward_.size()) +
                       " entries, expected " + std::to_string(n_prompts_ * n_responses_));
  }
  for (double r : reward_) {
    if (!std::isfinite(r)) throw InvalidInput("oracle: non-finite reward entry");
  }
  delta_ = compute_margin(*this);
}

double compute_margin(const TrueOracle& oracle) {
  double widest = 0.0;
  for (std::size_t x = 0; x < oracle.num_prompts(); ++x) {
    double lo = oracle.reward(x, 0);
    double hi = lo;
    for (std::size_t y = 1; y < oracle.num_responses(); ++y) {
      lo = std::min(lo, oracle.reward(x, y));
      hi = std::max(hi, oracle.reward(x, y));
    }
    widest = std::max(widest, hi - lo);
  }
  return sigmoid(-widest);
}

void check_compatible(const TrueOracle& oracle, const Environment& env) {
  if (oracle.num_prompts() != env.num_prompts() ||
      oracle.num_responses() != env.num_responses()) {
    throw InvalidInput("oracle: reward table is " + std::to_string(oracle.num_prompts()) + "x" +
                       std::to_string(oracle.num_responses()) + " but the environment is " +
                       std::to_string(env.num_prompts()) + "x" +
                       std::to_string(env.num_responses()));
  }
}

void check_admissible(const TrueOracle& oracle, double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) {
    throw InadmissibleRadius("rho must be finite and nonnegative");
  }
  if (rho > 0.0 && !(rho < oracle.delta())) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "rho = " << rho << " is not below the oracle margin delta = " << oracle.delta()
        << "; the uncertainty interval would leave [0, 1]";
    throw InadmissibleRadius(msg.str());
  }
}

double true_prob(const TrueOracle& oracle, const ComparisonTriple& z) {
  return sigmoid(oracle.reward(z.x, z.y1) - oracle.reward(z.x, z.y2));
}

double worst_case_prob(const TrueOracle& oracle, double rho, const ComparisonTriple& z, double h) {
  check_admissible(oracle, rho);
  const double p = true_prob(oracle, z);
  return h <= 0.0 ? p + rho : p - rho;
}

double worst_case_prob(const TrueOracle& oracle, double rho, const Environment& env,
                       const PolicyParams& params, const ComparisonTriple& z) {
  return worst_case_prob(oracle, rho, z, pairwise_logit(env, params, z));
}

double pointwise_sup_value(double p_star, double rho, double a, double b) {
  if (!(rho >= 0.0) || !(p_star - rho >= 0.0) || !(p_star + rho <= 1.0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "interval [" << p_star - rho << ", " << p_star + rho << "] is not inside [0, 1]";
    throw IntervalOutOfRange(msg.str());
  }
  return p_star * a + (1.0 - p_star) * b + rho * std::abs(a - b);
}

const char* to_string(OracleMode mode) {
  return mode == OracleMode::true_oracle ? "true" : "adversarial";
}

OracleMode parse_oracle_mode(const std::string& text) {
  if (text == "true") return OracleMode::true_oracle;
  if (text == "adversarial") return OracleMode::adversarial;
  throw InvalidInput("oracle mode must be 'true' or 'adversarial', got '" + text + "'");
}

int sample_label(OracleMode mode, const TrueOracle& oracle, double rho, const Environment& env,
                 const PolicyParams& params, const ComparisonTriple& z, Rng& rng) {
  const double p = mode == OracleMode::true_oracle ? true_prob(oracle, z)
                                                    : worst_case_prob(oracle, rho, env, params, z);
  return bernoulli(p, rng);
}

TrueOracle make_random_oracle(const Environment& env, double scale, std::uint64_t seed) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw InvalidInput("random oracle: scale must be finite and nonnegative");
  }
  Rng rng = make_stream(seed, "oracle");
  std::vector<double> reward(env.num_prompts() * env.num_responses());
  for (double& r : reward) r = uniform(rng, -scale, scale);
  return TrueOracle(env.num_prompts(), env.num_responses(), std::move(reward));
}

}  // namespace orpa
