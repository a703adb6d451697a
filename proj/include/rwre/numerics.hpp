#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "rwre/errors.hpp"

namespace rwre {

/// ln(1 + e^x) without overflow.
inline double log1pexp(double x) {
  if (x > 36.0) return x + std::exp(-x);
  return std::log1p(std::exp(x));
}

/// ln(e^a + e^b).
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Max-shifted ln(sum_i exp(v_i)).
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  if (values.size() == 0) throw ArgumentError("log_sum_exp: empty input");
  const Scalar hi = values.maxCoeff();
  if (values.size() == 1) return hi;
  if (!std::isfinite(static_cast<double>(hi))) return hi;
  Scalar acc = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) acc += std::exp(values(i) - hi);
  return hi + std::log(acc);
}

inline double log_sum_exp(const std::vector<double>& values) {
  return log_sum_exp(Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                       static_cast<Eigen::Index>(values.size())));
}

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      c_ += (sum_ - t) + x;
    else
      c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

/// Quantile with linear interpolation between order statistics (type 7).
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw ArgumentError("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

/// Binomial frequency with its standard error.
struct Frequency {
  std::size_t hits = 0;
  std::size_t trials = 0;

  double value() const {
    return trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials);
  }
  double se() const {
    if (trials == 0) return 0.0;
    const double p = value();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
  /// Wilson score upper limit at z standard deviations.
  double upper(double z) const {
    if (trials == 0) return 1.0;
    const double n = static_cast<double>(trials);
    const double p = value();
    const double z2 = z * z;
    const double centre = p + z2 / (2 * n);
    const double spread = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
    return std::min(1.0, (centre + spread) / (1 + z2 / n));
  }
};

}  // namespace rwre
