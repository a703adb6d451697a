#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "rwre/environment.hpp"
#include "rwre/errors.hpp"

namespace rwre {

/// Streaming maximum draw-up: largest rise above the running minimum.
template <typename Scalar>
class DrawupAccumulator {
 public:
  explicit DrawupAccumulator(Scalar first) : min_(first) {}
  void push(Scalar x) {
    best_ = std::max(best_, x - min_);
    min_ = std::min(min_, x);
  }
  Scalar value() const { return best_; }

 private:
  Scalar min_;
  Scalar best_ = 0;
};

/// Streaming maximum draw-down: largest fall below the running maximum.
template <typename Scalar>
class DrawdownAccumulator {
 public:
  explicit DrawdownAccumulator(Scalar first) : max_(first) {}
  void push(Scalar x) {
    best_ = std::max(best_, max_ - x);
    max_ = std::max(max_, x);
  }
  Scalar value() const { return best_; }

 private:
  Scalar max_;
  Scalar best_ = 0;
};

/// sup_u (f(u) - min_{v <= u} f(v)).
template <typename Derived>
typename Derived::Scalar drawup(const Eigen::DenseBase<Derived>& values) {
  if (values.size() == 0) throw ArgumentError("drawup: empty input");
  DrawupAccumulator<typename Derived::Scalar> acc(values(0));
  for (Eigen::Index i = 1; i < values.size(); ++i) acc.push(values(i));
  return acc.value();
}

/// sup_u (f(u) - min_{v >= u} f(v)), one reverse pass.
template <typename Derived>
typename Derived::Scalar drawdown(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  if (values.size() == 0) throw ArgumentError("drawdown: empty input");
  const Eigen::Index n = values.size();
  Scalar suffix_min = values(n - 1);
  Scalar best = 0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    suffix_min = std::min(suffix_min, values(i));
    best = std::max(best, values(i) - suffix_min);
  }
  return best;
}

struct DrawStats {
  double drawup = 0.0;
  double drawdown = 0.0;
  Eigen::Index argmax_index = 0;  // leftmost, relative to the whole sequence
  double range_max = 0.0;         // value at argmax_index

  /// min(D+, D-), the barrier height H(I).
  double barrier() const { return std::min(drawup, drawdown); }
  /// max(D+, D-).
  double max_draw() const { return std::max(drawup, drawdown); }
};

/// Draw statistics over values[first..last] (inclusive).
template <typename Derived>
DrawStats interval_stats(const Eigen::DenseBase<Derived>& values, Eigen::Index first,
                         Eigen::Index last) {
  if (last < first) throw ArgumentError("interval_stats: empty interval");
  if (first < 0 || last >= values.size()) throw RangeError("interval_stats: interval out of bounds");
  const auto seg = values.derived().segment(first, last - first + 1);
  DrawStats st;
  st.drawup = static_cast<double>(drawup(seg));
  st.drawdown = static_cast<double>(drawdown(seg));
  Eigen::Index arg = 0;
  st.range_max = static_cast<double>(seg.maxCoeff(&arg));  // Eigen returns the first maximum
  st.argmax_index = first + arg;
  return st;
}

template <typename Derived>
DrawStats interval_stats(const Eigen::DenseBase<Derived>& values) {
  return interval_stats(values, 0, values.size() - 1);
}

enum class DrawKind { up, down };

/// Greedy left-to-right partition of values[first..last] into consecutive
/// closed pieces sharing endpoints, each with draw functional > threshold.
/// Returns the number of completed pieces, stopping once `wanted` is reached.
template <typename Derived>
int greedy_partition_count(const Eigen::DenseBase<Derived>& values, Eigen::Index first,
                           Eigen::Index last, DrawKind kind, double threshold, int wanted) {
  int pieces = 0;
  Eigen::Index start = first;
  while (pieces < wanted && start < last) {
    double extreme = static_cast<double>(values(start));
    double best = 0.0;
    Eigen::Index u = start + 1;
    bool cut = false;
    for (; u <= last; ++u) {
      const double x = static_cast<double>(values(u));
      if (kind == DrawKind::up) {
        best = std::max(best, x - extreme);
        extreme = std::min(extreme, x);
      } else {
        best = std::max(best, extreme - x);
        extreme = std::max(extreme, x);
      }
      if (best > threshold) {
        cut = true;
        break;
      }
    }
    if (!cut) break;
    ++pieces;
    start = u;
  }
  return pieces;
}

/// Parameters of the localization scale.
struct ScaleParams {
  double alpha = 0.4;
  double b = 1.0;
  double sigma = 1.0;

  void validate() const;
  /// C* = 2 alpha b / (sigma^2 (1 - 2 alpha)).
  double cstar() const { return 2.0 * alpha * b / (sigma * sigma * (1.0 - 2.0 * alpha)); }
};

/// s(t) = (C* ln t / ln ln t)^(1/alpha); DomainError for t <= e.
double scale_s(const ScaleParams& params, double t);

/// -b anchor^-alpha: slope of the drift term -(b/(1-alpha)) x^(1-alpha) at anchor.
double tangent_drift(const ScaleParams& params, double t, double anchor);

/// Upper limits on delta recorded for the draw-up events (2 delta < limit).
inline double event_a_delta_limit(double alpha, double epsilon) {
  return 1.0 - std::pow(1.0 - epsilon, alpha);
}
inline double event_c_delta_limit(double alpha, double epsilon) {
  return std::pow(1.0 + epsilon / 2.0, alpha) - 1.0;
}

/// D+ of V on [0, (1-eps) s(t)] is at most (1-delta) ln t.
bool check_event_A(const PotentialPath& path, const ScaleParams& params, double t, double epsilon,
                   double delta);
/// [(1-eps) s(t), (1-eps/2) s(t)] splits into N pieces with D- > (1+delta) ln t.
bool check_event_B(const PotentialPath& path, const ScaleParams& params, double t, double epsilon,
                   double delta, int N);
/// [s(t), (1+eps) s(t)] splits into N pieces with D+ > (1+delta) ln t.
bool check_event_C(const PotentialPath& path, const ScaleParams& params, double t, double epsilon,
                   double delta, int N);
/// max |V(y)| over y <= ln^(1/alpha) t is at most 2 ln^(1/alpha) t.
bool check_event_G(const PotentialPath& path, const ScaleParams& params, double t);

/// Path length needed to evaluate all four events at t.
double events_required_length(const ScaleParams& params, double t, double epsilon);

}  // namespace rwre
