#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/numerics.hpp"

namespace rwre {

/// A positive quantity carried by its natural logarithm.
struct LogWeight {
  double log_value = 0.0;

  static LogWeight one() { return {0.0}; }
  static LogWeight zero() { return {-std::numeric_limits<double>::infinity()}; }

  friend LogWeight operator*(LogWeight a, LogWeight b) { return {a.log_value + b.log_value}; }
  friend LogWeight operator/(LogWeight a, LogWeight b) { return {a.log_value - b.log_value}; }
  friend LogWeight operator+(LogWeight a, LogWeight b) {
    return {log_add_exp(a.log_value, b.log_value)};
  }

  bool overflows() const { return log_value > std::log(std::numeric_limits<double>::max()); }
  /// Natural-scale value; std::nullopt instead of saturating to infinity.
  std::optional<double> value() const {
    if (overflows()) return std::nullopt;
    return std::exp(log_value);
  }
};

/// ln pi(x), with pi(0) = 1 and pi(x) = e^-U(x) + e^-U(x-1).
LogWeight reversible_measure_log(const Environment& env, std::int64_t x);

/// P^x[tau_c < tau_a] for a <= x <= c.
double ruin_prob(const Environment& env, std::int64_t a, std::int64_t x, std::int64_t c);

struct ExpectedHit {
  double log_value = 0.0;
  std::optional<double> value;  // empty when the mean overflows a double
};

/// E^x[tau_y] for x <= y, unit total jump rate, reflecting at 0.
ExpectedHit expected_hit(const Environment& env, std::int64_t x, std::int64_t y);

/// E^k[tau_{k+1}] in log-space for k = 0..last.
std::vector<double> log_step_times(const Environment& env, std::int64_t last);

struct BoundParams {
  double K1 = 1.0;
  double K2 = 1.0;
  double K3 = 1.0;
};

struct BoundValue {
  bool applicable = true;
  double log_value = 0.0;

  /// Bound as a probability: exp(log_value) clipped to [0, 1].
  double reported() const { return log_value >= 0.0 ? 1.0 : std::exp(log_value); }
};

/// ln of K2 L^3 (L + M) e^H, the time scale of the confinement bound on [a, c].
double confinement_log_scale(const Environment& env, std::int64_t a, std::int64_t c, double K2);

/// Bound on P^x[tau_{a,c} >= t]; not applicable unless t exceeds the time scale.
BoundValue confinement_bound(const Environment& env, std::int64_t a, std::int64_t c,
                             std::int64_t x, double t, const BoundParams& params);

/// Leftmost argmax of U on [a, c].
std::int64_t barrier_site(const Environment& env, std::int64_t a, std::int64_t c);

/// Bound on P^a[tau_c < t]: K3 t pi(h)/pi(a), or the coarser form
/// K3 t e^{U(a)-U(h)} (2 K1 + 1) ln t when use_watq is set.
BoundValue escape_bound(const Environment& env, std::int64_t a, std::int64_t c, double t,
                        const BoundParams& params, bool use_watq);

/// One training observation for constant calibration.
struct CalibrationPoint {
  double t = 0.0;
  double log_scale = 0.0;    // confinement: ln(L^3 (L+M) e^H); escape: ln(pi(h)/pi(a))
  double frequency = 0.0;    // conservative (upper) empirical frequency
};

/// Smallest K2 for which no training point violates the confinement bound.
double calibrate_k2(std::span<const CalibrationPoint> points);
/// Smallest K3 for which no training point violates the escape bound.
double calibrate_k3(std::span<const CalibrationPoint> points);

}  // namespace rwre
