#include "orpa/policy.hpp"

#include <cmath>

#include "orpa/errors.hpp"

namespace orpa {

void validate_params(const Environment& env, const PolicyParams& params) {
  const auto d = static_cast<Eigen::Index>(env.feature_dim());
  if (params.theta.size() != d || params.theta_ref.size() != d) {
    throw InvalidInput("policy params: theta and theta_ref must have dimension " +
                       std::to_string(d));
  }
  if (!(params.radius_d > 0.0) || !std::isfinite(params.radius_d)) {
    throw InvalidInput("policy params: radius_d must be positive and finite");
  }
  if (!params.theta.allFinite() || !params.theta_ref.allFinite()) {
    throw InvalidInput("policy params: non-finite entries");
  }
}

bool is_feasible(const PolicyParams& params, double tol) {
  return (params.theta - params.theta_ref).norm() <= params.radius_d * (1.0 + tol);
}

Vector log_policy_row(const Environment& env, const Vector& theta, std::size_t x) {
  const std::size_t ny = env.num_responses();
  Vector logits(static_cast<Eigen::Index>(ny));
  for (std::size_t y = 0; y < ny; ++y) logits[y] = theta.dot(env.feature(x, y));
  const double lse = log_sum_exp({logits.data(), ny});
  return logits.array() - lse;
}

double log_policy(const Environment& env, const PolicyParams& params, std::size_t x,
                  std::size_t y) {
  return log_policy_row(env, params.theta, x)[static_cast<Eigen::Index>(y)];
}

double pairwise_logit(const Environment& env, const PolicyParams& params,
                      const ComparisonTriple& z) {
  return (params.theta - params.theta_ref).dot(delta_psi(env, z));
}

double log_ratio_logit(const Environment& env, const PolicyParams& params,
                       const ComparisonTriple& z) {
  const Vector cur = log_policy_row(env, params.theta, z.x);
  const Vector ref = log_policy_row(env, params.theta_ref, z.x);
  const auto y1 = static_cast<Eigen::Index>(z.y1);
  const auto y2 = static_cast<Eigen::Index>(z.y2);
  return (cur[y1] - ref[y1]) - (cur[y2] - ref[y2]);
}

std::vector<double> sampling_distribution(const Environment& env, const PolicyParams& params,
                                          std::size_t cap) {
  check_enumeration_cap(env, cap);
  const std::size_t ny = env.num_responses();
  std::vector<double> out;
  out.reserve(env.num_triples());
  for (std::size_t x = 0; x < env.num_prompts(); ++x) {
    const Vector p = log_policy_row(env, params.theta, x).array().exp();
    for (std::size_t y1 = 0; y1 < ny; ++y1) {
      for (std::size_t y2 = 0; y2 < ny; ++y2) {
        out.push_back(env.mu()[x] * p[y1] * p[y2]);
      }
    }
  }
  return out;
}

namespace {

void cumulative(const double* weights, std::size_t n, double* cdf) {
  KahanSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    acc.add(weights[i]);
    cdf[i] = acc.value();
  }
}

}  // namespace

TripleSampler::TripleSampler(const Environment& env, const Vector& theta)
    : n_responses_(env.num_responses()),
      prompt_cdf_(env.num_prompts()),
      response_cdf_(env.num_prompts() * env.num_responses()) {
  cumulative(env.mu().data(), env.num_prompts(), prompt_cdf_.data());
  for (std::size_t x = 0; x < env.num_prompts(); ++x) {
    const Vector p = log_policy_row(env, theta, x).array().exp();
    cumulative(p.data(), n_responses_, response_cdf_.data() + x * n_responses_);
  }
}

ComparisonTriple TripleSampler::draw(Rng& rng) const {
  const auto pick = [&rng](std::span<const double> cdf) {
    return sample_index(cdf, uniform01(rng) * cdf.back());
  };
  ComparisonTriple z;
  z.x = pick(prompt_cdf_);
  const std::span<const double> row(response_cdf_.data() + z.x * n_responses_, n_responses_);
  z.y1 = pick(row);
  z.y2 = pick(row);
  return z;
}

std::vector<ComparisonTriple> sample_triples(const Environment& env, const PolicyParams& params,
                                             Rng& rng, std::size_t count) {
  std::vector<ComparisonTriple> out;
  if (count == 0) return out;
  const TripleSampler sampler(env, params.theta);
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.draw(rng));
  return out;
}

Vector feature_mean(const Environment& env, const Vector& theta, std::size_t x) {
  const Vector p = log_policy_row(env, theta, x).array().exp();
  Vector mean = Vector::Zero(static_cast<Eigen::Index>(env.feature_dim()));
  for (std::size_t y = 0; y < env.num_responses(); ++y) mean += p[y] * env.feature(x, y);
  return mean;
}

Matrix feature_covariance(const Environment& env, const Vector& theta, std::size_t x) {
  const Vector p = log_policy_row(env, theta, x).array().exp();
  const Vector mean = feature_mean(env, theta, x);
  const auto d = static_cast<Eigen::Index>(env.feature_dim());
  Matrix cov = Matrix::Zero(d, d);
  for (std::size_t y = 0; y < env.num_responses(); ++y) {
    const Vector c = env.feature(x, y) - mean;
    cov.noalias() += p[y] * c * c.transpose();
  }
  return cov;
}

Vector policy_score(const Environment& env, const PolicyParams& params, std::size_t x,
                    std::size_t y) {
  return env.feature(x, y) - feature_mean(env, params.theta, x);
}

Vector triple_score(const Environment& env, const PolicyParams& params,
                    const ComparisonTriple& z) {
  const Vector mean = feature_mean(env, params.theta, z.x);
  return env.feature(z.x, z.y1) + env.feature(z.x, z.y2) - 2.0 * mean;
}

Matrix fisher_information(const Environment& env, const PolicyParams& params) {
  const auto d = static_cast<Eigen::Index>(env.feature_dim());
  Matrix fisher = Matrix::Zero(d, d);
  for (std::size_t x = 0; x < env.num_prompts(); ++x) {
    const Vector p = log_policy_row(env, params.theta, x).array().exp();
    const Vector mean = feature_mean(env, params.theta, x);
    for (std::size_t y = 0; y < env.num_responses(); ++y) {
      const Vector g = env.feature(x, y) - mean;
      fisher.noalias() += env.mu()[x] * p[y] * g * g.transpose();
    }
  }
  return fisher;
}

Vector project_feasible(const PolicyParams& params, const Vector& candidate) {
  const Vector offset = candidate - params.theta_ref;
  const double dist = offset.norm();
  if (dist <= params.radius_d) return candidate;
  return params.theta_ref + (params.radius_d / dist) * offset;
}

Vector random_unit_vector(std::size_t dim, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(dim));
  double norm = 0.0;
  while (norm < 1e-12) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = standard_normal(rng);
    norm = v.norm();
  }
  return v / norm;
}

Vector random_feasible(const PolicyParams& geometry, Rng& rng) {
  const auto d = static_cast<std::size_t>(geometry.theta_ref.size());
  const Vector dir = random_unit_vector(d, rng);
  const double r = geometry.radius_d * std::pow(uniform01(rng), 1.0 / static_cast<double>(d));
  return geometry.theta_ref + r * dir;
}

Vector random_on_shell(const PolicyParams& geometry, double fraction, Rng& rng) {
  const auto d = static_cast<std::size_t>(geometry.theta_ref.size());
  return geometry.theta_ref + fraction * geometry.radius_d * random_unit_vector(d, rng);
}

}  // namespace orpa
