#include "orpa/kernels.hpp"

namespace orpa {

PolicyTable tabulate_policy(const Environment& env, const Vector& theta, bool with_covariance) {
  PolicyTable table;
  const std::size_t nx = env.num_prompts();
  table.prob.reserve(nx);
  table.mean.reserve(nx);
  for (std::size_t x = 0; x < nx; ++x) {
    table.prob.push_back(log_policy_row(env, theta, x).array().exp());
    Vector mean = Vector::Zero(static_cast<Eigen::Index>(env.feature_dim()));
    for (std::size_t y = 0; y < env.num_responses(); ++y) {
      mean += table.prob.back()[static_cast<Eigen::Index>(y)] * env.feature(x, y);
    }
    table.mean.push_back(std::move(mean));
  }
  if (with_covariance) {
    table.covariance.reserve(nx);
    for (std::size_t x = 0; x < nx; ++x) table.covariance.push_back(feature_covariance(env, theta, x));
  }
  return table;
}

}  // namespace orpa
