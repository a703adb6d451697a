#include "rwre/exactsolve.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rwre/pathfunc.hpp"

namespace rwre {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Keeps calibrated constants off the exact boundary, where rounding in the
// log-space bound could flip a training point.
constexpr double kCalibrationSlack = 1e-9;

void require_site(const Environment& env, std::int64_t x, const char* what) {
  if (x < 0 || x > env.n_sites()) {
    std::ostringstream os;
    os << what << ": site " << x << " outside [0, " << env.n_sites() << "]";
    throw RangeError(os.str());
  }
}

}  // namespace

LogWeight reversible_measure_log(const Environment& env, std::int64_t x) {
  require_site(env, x, "reversible_measure_log");
  if (x == 0) return LogWeight::one();
  return {log_add_exp(-env.U(x), -env.U(x - 1))};
}

double ruin_prob(const Environment& env, std::int64_t a, std::int64_t x, std::int64_t c) {
  if (!(a < c)) throw ArgumentError("ruin_prob: need a < c");
  if (x < a || x > c) throw ArgumentError("ruin_prob: need a <= x <= c");
  require_site(env, a, "ruin_prob");
  require_site(env, c, "ruin_prob");
  if (x == a) return 0.0;
  if (x == c) return 1.0;
  const Eigen::VectorXd& U = env.potential();
  const double num = log_sum_exp(U.segment(a, x - a));
  const double den = log_sum_exp(U.segment(a, c - a));
  return std::exp(num - den);
}

std::vector<double> log_step_times(const Environment& env, std::int64_t last) {
  require_site(env, last, "log_step_times");
  std::vector<double> out(static_cast<std::size_t>(last + 1));
  double log_mass = kNegInf;  // ln sum_{j <= k} pi(j)
  for (std::int64_t k = 0; k <= last; ++k) {
    const double log_pi = reversible_measure_log(env, k).log_value;
    log_mass = log_add_exp(log_mass, log_pi);
    out[static_cast<std::size_t>(k)] = log_mass - log_pi - env.log_p(k);
  }
  return out;
}

ExpectedHit expected_hit(const Environment& env, std::int64_t x, std::int64_t y) {
  if (x > y) throw ArgumentError("expected_hit: need x <= y (rightward target)");
  require_site(env, x, "expected_hit");
  require_site(env, y, "expected_hit");
  if (x == y) return {kNegInf, 0.0};
  const auto logs = log_step_times(env, y - 1);
  const std::vector<double> tail(logs.begin() + x, logs.end());
  ExpectedHit out;
  out.log_value = log_sum_exp(tail);
  if (LogWeight{out.log_value}.overflows()) return out;
  CompensatedSum sum;
  for (double l : tail) sum.add(std::exp(l));
  out.value = sum.value();
  return out;
}

double confinement_log_scale(const Environment& env, std::int64_t a, std::int64_t c, double K2) {
  require_site(env, a, "confinement_bound");
  require_site(env, c, "confinement_bound");
  if (!(a < c)) throw ArgumentError("confinement_bound: need a < c");
  if (!(K2 > 0.0)) throw ConfigError("K2 must be positive");
  const DrawStats st = interval_stats(env.potential(), a, c);
  const double L = static_cast<double>(c - a);
  return std::log(K2) + 3.0 * std::log(L) + std::log(L + st.max_draw()) + st.barrier();
}

BoundValue confinement_bound(const Environment& env, std::int64_t a, std::int64_t c,
                             std::int64_t x, double t, const BoundParams& params) {
  if (!(a < x && x < c)) throw ArgumentError("confinement_bound: need a < x < c");
  if (!(t > 0.0)) throw ArgumentError("confinement_bound: need t > 0");
  const double log_scale = confinement_log_scale(env, a, c, params.K2);
  BoundValue out;
  out.applicable = std::log(t) > log_scale;
  out.log_value = -std::exp(std::log(t) - log_scale);
  return out;
}

std::int64_t barrier_site(const Environment& env, std::int64_t a, std::int64_t c) {
  require_site(env, a, "barrier_site");
  require_site(env, c, "barrier_site");
  if (!(a <= c)) throw ArgumentError("barrier_site: need a <= c");
  return interval_stats(env.potential(), a, c).argmax_index;
}

BoundValue escape_bound(const Environment& env, std::int64_t a, std::int64_t c, double t,
                        const BoundParams& params, bool use_watq) {
  if (!(a < c)) throw ArgumentError("escape_bound: need a < c");
  if (!(t > 1.0)) throw ArgumentError("escape_bound: need t > 1");
  if (!(params.K3 > 0.0)) throw ConfigError("K3 must be positive");
  const std::int64_t h = barrier_site(env, a, c);
  BoundValue out;
  double log_ratio = 0.0;
  if (use_watq) {
    if (!(params.K1 > 0.0)) throw ConfigError("K1 must be positive");
    log_ratio = env.U(a) - env.U(h) + std::log(2.0 * params.K1 + 1.0) + std::log(std::log(t));
  } else {
    log_ratio = reversible_measure_log(env, h).log_value - reversible_measure_log(env, a).log_value;
  }
  out.log_value = std::log(params.K3) + std::log(t) + log_ratio;
  return out;
}

double calibrate_k2(std::span<const CalibrationPoint> points) {
  double k2 = std::numeric_limits<double>::min();
  for (const auto& p : points) {
    if (p.frequency <= 0.0) continue;
    const double depth = std::max(1.0, -std::log(p.frequency));
    k2 = std::max(k2, std::exp(std::log(p.t) - p.log_scale) / depth);
  }
  return k2 * (1.0 + kCalibrationSlack);
}

double calibrate_k3(std::span<const CalibrationPoint> points) {
  double k3 = std::numeric_limits<double>::min();
  for (const auto& p : points) {
    if (p.frequency <= 0.0) continue;
    k3 = std::max(k3, std::exp(std::log(p.frequency) - std::log(p.t) - p.log_scale));
  }
  return k3 * (1.0 + kCalibrationSlack);
}

}  // namespace rwre
