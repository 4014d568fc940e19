#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include <Eigen/Dense>

namespace orpa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Logistic sigmoid, evaluated without overflow for large |u|.
inline double sigmoid(double u) {
  if (u >= 0.0) {
    return 1.0 / (1.0 + std::exp(-u));
  }
  const double e = std::exp(u);
  return e / (1.0 + e);
}

/// log(1 + e^u).
inline double softplus(double u) {
  return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

/// sqrt(u² + eps²), the smoothed absolute value.
inline double smoothed_abs(double u, double eps) { return std::hypot(u, eps); }

/// Sign with sign(0) := 0.
inline double sign0(double u) { return (u > 0.0) - (u < 0.0); }

/// Max-shifted log-sum-exp.
inline double log_sum_exp(std::span<const double> values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

/// Compensated (Kahan) accumulator.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace orpa
