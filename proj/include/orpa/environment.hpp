#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orpa/numeric.hpp"

namespace orpa {

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

/// z = (x, y1, y2): a prompt and the two responses it is compared on.
struct ComparisonTriple {
  std::size_t x = 0;
  std::size_t y1 = 0;
  std::size_t y2 = 0;

  friend bool operator==(const ComparisonTriple&, const ComparisonTriple&) = default;
};

/// The finite comparison universe: prompts with distribution mu, responses,
/// and a dense feature table psi(x, y) in R^d stored row-major by (x, y).
///
/// Immutable after construction. The constructor validates every invariant:
/// mu is a probability vector (to 1e-12), the table is complete, and every
/// feature row has norm at most b_psi. When b_psi is not supplied it is set to
/// the exact maximum row norm.
class Environment {
 public:
  Environment(std::vector<std::string> prompts, std::vector<std::string> responses,
              std::vector<double> mu, std::size_t feature_dim, std::vector<double> features,
              std::optional<double> b_psi = std::nullopt);

  std::size_t num_prompts() const { return prompts_.size(); }
  std::size_t num_responses() const { return responses_.size(); }
  std::size_t feature_dim() const { return dim_; }
  std::size_t num_triples() const {
    return num_prompts() * num_responses() * num_responses();
  }

  const std::vector<std::string>& prompts() const { return prompts_; }
  const std::vector<std::string>& responses() const { return responses_; }
  const std::vector<double>& mu() const { return mu_; }
  const std::vector<double>& feature_table() const { return features_; }
  double b_psi() const { return b_psi_; }

  /// Pointer to the d contiguous entries of psi(x, y).
  const double* feature_data(std::size_t x, std::size_t y) const {
    return features_.data() + (x * num_responses() + y) * dim_;
  }
  Eigen::Map<const Vector> feature(std::size_t x, std::size_t y) const {
    return {feature_data(x, y), static_cast<Eigen::Index>(dim_)};
  }

  bool valid(const ComparisonTriple& z) const {
    return z.x < num_prompts() && z.y1 < num_responses() && z.y2 < num_responses();
  }
  /// Position of z in the lexicographic enumeration of Z.
  std::size_t triple_index(const ComparisonTriple& z) const {
    return (z.x * num_responses() + z.y1) * num_responses() + z.y2;
  }
  ComparisonTriple triple_at(std::size_t index) const;

 private:
  std::vector<std::string> prompts_;
  std::vector<std::string> responses_;
  std::vector<double> mu_;
  std::size_t dim_;
  std::vector<double> features_;
  double b_psi_;
};

/// Throws EnumerationCapExceeded when |X|·|Y|² > cap.
void check_enumeration_cap(const Environment& env, std::size_t cap = kDefaultEnumerationCap);

/// All triples, ordered by x, then y1, then y2.
std::vector<ComparisonTriple> enumerate_triples(const Environment& env,
                                                std::size_t cap = kDefaultEnumerationCap);

/// psi(x, y1) - psi(x, y2).
Vector delta_psi(const Environment& env, const ComparisonTriple& z);

/// Largest Euclidean norm over the rows of a flattened feature table.
double max_feature_norm(std::size_t feature_dim, const std::vector<double>& features);

struct RandomEnvironmentSpec {
  std::size_t n_prompts = 2;
  std::size_t n_responses = 3;
  std::size_t feature_dim = 2;
  double feature_bound = 1.0;  ///< entries are drawn uniformly from [-b, b]
  std::optional<double> target_b_psi;  ///< rescale the table so max norm hits this
  bool uniform_mu = false;
};

/// Seeded random environment. mu is uniform or drawn from normalized U(0.5, 1.5)
/// weights; features are U(-b, b) per entry.
Environment make_random_environment(const RandomEnvironmentSpec& spec, std::uint64_t seed);

/// One prompt, responses {a, b}, d = 1, psi(x, a) = 1 and psi(x, b) = 0.
Environment make_two_response_example();

}  // namespace orpa
