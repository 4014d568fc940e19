#include "orpa/environment.hpp"

#include <cmath>
#include <sstream>

#include "orpa/errors.hpp"
#include "orpa/rng.hpp"

namespace orpa {

Environment::Environment(std::vector<std::string> prompts, std::vector<std::string> responses,
                         std::vector<double> mu, std::size_t feature_dim,
                         std::vector<double> features, std::optional<double> b_psi)
    : prompts_(std::move(prompts)),
      responses_(std::move(responses)),
      mu_(std::move(mu)),
      dim_(feature_dim),
      features_(std::move(features)),
      b_psi_(0.0) {
  if (prompts_.empty()) throw InvalidInput("environment: prompt set is empty");
  if (responses_.empty()) throw InvalidInput("environment: response set is empty");
  if (dim_ == 0) throw InvalidInput("environment: feature_dim must be positive");
  if (mu_.size() != prompts_.size()) {
    throw InvalidInput("environment: mu has " + std::to_string(mu_.size()) +
                       " entries for " + std::to_string(prompts_.size()) + " prompts");
  }
  KahanSum total;
  for (double m : mu_) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw InvalidInput("environment: mu entries must be finite and nonnegative");
    }
    total.add(m);
  }
  if (std::abs(total.value() - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "environment: mu sums to " << total.value() << ", expected 1 within 1e-12";
    throw InvalidInput(msg.str());
  }
  const std::size_t expected = prompts_.size() * responses_.size() * dim_;
  if (features_.size() != expected) {
    throw InvalidInput("environment: feature table has " + std::to_string(features_.size()) +
                       " entries, expected " + std::to_string(expected));
  }
  for (double v : features_) {
    if (!std::isfinite(v)) throw InvalidInput("environment: non-finite feature entry");
  }
  const double max_norm = max_feature_norm(dim_, features_);
  if (b_psi) {
    if (!(*b_psi >= 0.0)) throw InvalidInput("environment: b_psi must be nonnegative");
    if (max_norm > *b_psi * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "environment: supplied b_psi " << *b_psi << " is below the max feature norm "
          << max_norm;
      throw InvalidInput(msg.str());
    }
    b_psi_ = std::max(*b_psi, max_norm);
  } else {
    b_psi_ = max_norm;
  }
}

ComparisonTriple Environment::triple_at(std::size_t index) const {
  const std::size_t ny = num_responses();
  return {index / (ny * ny), (index / ny) % ny, index % ny};
}

void check_enumeration_cap(const Environment& env, std::size_t cap) {
  if (env.num_triples() > cap) {
    throw EnumerationCapExceeded("enumeration of " + std::to_string(env.num_triples()) +
                                 " triples exceeds the cap of " + std::to_string(cap));
  }
}

std::vector<ComparisonTriple> enumerate_triples(const Environment& env, std::size_t cap) {
  check_enumeration_cap(env, cap);
  std::vector<ComparisonTriple> out;
  out.reserve(env.num_triples());
  for (std::size_t x = 0; x < env.num_prompts(); ++x) {
    for (std::size_t y1 = 0; y1 < env.num_responses(); ++y1) {
      for (std::size_t y2 = 0; y2 < env.num_responses(); ++y2) {
        out.push_back({x, y1, y2});
      }
    }
  }
  return out;
}

Vector delta_psi(const Environment& env, const ComparisonTriple& z) {
  return env.feature(z.x, z.y1) - env.feature(z.x, z.y2);
}

double max_feature_norm(std::size_t feature_dim, const std::vector<double>& features) {
  double best = 0.0;
  for (std::size_t row = 0; row * feature_dim < features.size(); ++row) {
    double sq = 0.0;
    for (std::size_t k = 0; k < feature_dim; ++k) {
      const double v = features[row * feature_dim + k];
      sq += v * v;
    }
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

Environment make_random_environment(const RandomEnvironmentSpec& spec, std::uint64_t seed) {
  if (spec.n_prompts == 0 || spec.n_responses == 0 || spec.feature_dim == 0) {
    throw InvalidInput("random environment: all sizes must be positive");
  }
  Rng rng = make_stream(seed, "environment");
  std::vector<std::string> prompts, responses;
  for (std::size_t i = 0; i < spec.n_prompts; ++i) prompts.push_back("x" + std::to_string(i));
  for (std::size_t i = 0; i < spec.n_responses; ++i) responses.push_back("y" + std::to_string(i));

  std::vector<double> mu(spec.n_prompts, 1.0);
  if (!spec.uniform_mu) {
    for (double& m : mu) m = uniform(rng, 0.5, 1.5);
  }
  double total = 0.0;
  for (double m : mu) total += m;
  for (double& m : mu) m /= total;

  std::vector<double> features(spec.n_prompts * spec.n_responses * spec.feature_dim);
  for (double& v : features) v = uniform(rng, -spec.feature_bound, spec.feature_bound);

  std::optional<double> b_psi;
  if (spec.target_b_psi) {
    const double norm = max_feature_norm(spec.feature_dim, features);
    if (norm > 0.0) {
      const double scale = *spec.target_b_psi / norm;
      for (double& v : features) v *= scale;
    }
    // Rescaling can overshoot the target by an ulp; let the constructor take the exact max.
  }
  return Environment(std::move(prompts), std::move(responses), std::move(mu), spec.feature_dim,
                     std::move(features), b_psi);
}

Environment make_two_response_example() {
  return Environment({"x"}, {"a", "b"}, {1.0}, 1, {1.0, 0.0});
}

}  // namespace orpa
