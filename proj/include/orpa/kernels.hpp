#pragma once

#include <cstddef>
#include <vector>

#include "orpa/environment.hpp"
#include "orpa/numeric.hpp"
#include "orpa/policy.hpp"

namespace orpa {

/// How exact expectations over Z are reduced.
///
/// serial: one compensated sum in enumeration order. This is the reference.
/// blocked: Z is cut into fixed blocks of kBlockSize triples, each block is a
/// compensated sum in enumeration order, blocks run under OpenMP, and block
/// results are combined by a fixed pairwise tree. The result does not depend
/// on the thread count, and equals serial bit for bit when |Z| fits one block.
enum class Reduction { serial, blocked };

inline constexpr std::size_t kBlockSize = 4096;

enum class Derivatives { none, gradient, hessian };

/// Per-prompt policy quantities shared by every triple of that prompt.
struct PolicyTable {
  std::vector<Vector> prob;        ///< pi_theta(. | x)
  std::vector<Vector> mean;        ///< E psi(x, y) under pi_theta(. | x)
  std::vector<Matrix> covariance;  ///< empty unless requested
};

PolicyTable tabulate_policy(const Environment& env, const Vector& theta, bool with_covariance);

/// What a per-triple term sees. References stay valid only during the call.
struct TripleContext {
  ComparisonTriple z;
  double weight;       ///< d_theta(z)
  double s;            ///< pairwise logit
  const Vector& delta_psi;
  const Vector& score;  ///< S_theta(z)
  const PolicyTable& table;
};

/// Element-wise compensated accumulator for a fixed-width vector.
class KahanVector {
 public:
  explicit KahanVector(Eigen::Index width)
      : sum_(Vector::Zero(width)), comp_(Vector::Zero(width)) {}

  void add(const Vector& v) {
    const Eigen::ArrayXd y = v.array() - comp_.array();
    const Eigen::ArrayXd t = sum_.array() + y;
    comp_ = ((t - sum_.array()) - y).matrix();
    sum_ = t.matrix();
  }
  const Vector& value() const { return sum_; }

 private:
  Vector sum_;
  Vector comp_;
};

namespace detail {

template <class Term>
Vector reduce_range(const Environment& env, const Vector& offset, const PolicyTable& table,
                    Eigen::Index width, const Term& term, std::size_t begin, std::size_t end) {
  const auto d = static_cast<Eigen::Index>(env.feature_dim());
  KahanVector acc(width);
  Vector dpsi(d), score(d), out(width), weighted(width);
  for (std::size_t i = begin; i < end; ++i) {
    const ComparisonTriple z = env.triple_at(i);
    const Vector& p = table.prob[z.x];
    const double w = env.mu()[z.x] * p[static_cast<Eigen::Index>(z.y1)] *
                     p[static_cast<Eigen::Index>(z.y2)];
    if (w == 0.0) continue;
    dpsi = env.feature(z.x, z.y1) - env.feature(z.x, z.y2);
    score = env.feature(z.x, z.y1) + env.feature(z.x, z.y2) - 2.0 * table.mean[z.x];
    const TripleContext ctx{z, w, offset.dot(dpsi), dpsi, score, table};
    term(ctx, out);
    weighted = w * out;
    acc.add(weighted);
  }
  return acc.value();
}

}  // namespace detail

/// sum over z of d_theta(z) * term(z), where term writes a `width`-vector into
/// its second argument. The term must be safe to call concurrently.
template <class Term>
Vector expect_triples(const Environment& env, const PolicyParams& params,
                      const PolicyTable& table, Eigen::Index width, const Term& term,
                      Reduction mode = Reduction::blocked) {
  check_enumeration_cap(env);
  const Vector offset = params.theta - params.theta_ref;
  const std::size_t n = env.num_triples();
  if (mode == Reduction::serial || n <= kBlockSize) {
    return detail::reduce_range(env, offset, table, width, term, 0, n);
  }
  const std::size_t n_blocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<Vector> partial(n_blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_blocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kBlockSize;
    partial[static_cast<std::size_t>(b)] =
        detail::reduce_range(env, offset, table, width, term, begin, std::min(n, begin + kBlockSize));
  }
  for (std::size_t stride = 1; stride < n_blocks; stride *= 2) {
    for (std::size_t i = 0; i + stride < n_blocks; i += 2 * stride) {
      partial[i] += partial[i + stride];
    }
  }
  return partial[0];
}

/// Value, gradient, and Hessian of f(theta) = sum_z d_theta(z) r(z, s_theta(z)).
struct ScoreExpectation {
  double value = 0.0;
  Vector gradient;  ///< empty when not requested
  Matrix hessian;   ///< empty when not requested
};

/// The integrand is called as integrand(z, s, r) and must fill r[0] = r,
/// r[1] = dr/ds and r[2] = d2r/ds2 (the derivative slots may be left unset
/// when not requested). Differentiation goes through both the logit and the
/// sampling weights:
///   grad = E[r' dpsi + r S]
///   hess = E[r'' dpsi dpsi^T + r' (S dpsi^T + dpsi S^T) + r (S S^T - 2 Cov_x)]
template <class Integrand>
ScoreExpectation expect_pathwise(const Environment& env, const PolicyParams& params,
                                 const Integrand& integrand, Derivatives what,
                                 Reduction mode = Reduction::blocked) {
  const auto d = static_cast<Eigen::Index>(env.feature_dim());
  const bool grad = what != Derivatives::none;
  const bool hess = what == Derivatives::hessian;
  const PolicyTable table = tabulate_policy(env, params.theta, hess);
  const Eigen::Index width = 1 + (grad ? d : 0) + (hess ? d * d : 0);

  const auto term = [&](const TripleContext& c, Vector& out) {
    double r[3] = {0.0, 0.0, 0.0};
    integrand(c.z, c.s, r);
    out[0] = r[0];
    if (!grad) return;
    out.segment(1, d) = r[1] * c.delta_psi + r[0] * c.score;
    if (!hess) return;
    Eigen::Map<Matrix> h(out.data() + 1 + d, d, d);
    h.noalias() = r[2] * c.delta_psi * c.delta_psi.transpose();
    h.noalias() += r[1] * (c.score * c.delta_psi.transpose() + c.delta_psi * c.score.transpose());
    h.noalias() += r[0] * (c.score * c.score.transpose() - 2.0 * c.table.covariance[c.z.x]);
  };

  const Vector total = expect_triples(env, params, table, width, term, mode);
  ScoreExpectation result;
  result.value = total[0];
  if (grad) result.gradient = total.segment(1, d);
  if (hess) {
    result.hessian = Eigen::Map<const Matrix>(total.data() + 1 + d, d, d);
    result.hessian = 0.5 * (result.hessian + result.hessian.transpose()).eval();
  }
  return result;
}

}  // namespace orpa
