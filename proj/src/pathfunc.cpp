#include "rwre/pathfunc.hpp"

#include <cmath>

namespace rwre {

void ScaleParams::validate() const {
  if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("alpha must lie in the open interval (0, 1/2)");
  if (!(b > 0.0)) throw ConfigError("b must be positive");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
}

double scale_s(const ScaleParams& params, double t) {
  if (!(t > std::exp(1.0))) throw DomainError("s(t) needs t > e (ln ln t must be positive)");
  const double lt = std::log(t);
  return std::pow(params.cstar() * lt / std::log(lt), 1.0 / params.alpha);
}

double tangent_drift(const ScaleParams& params, double /*t*/, double anchor) {
  if (!(anchor > 0.0)) throw DomainError("tangent_drift: anchor must be positive");
  return -params.b * std::pow(anchor, -params.alpha);
}

bool check_event_A(const PotentialPath& path, const ScaleParams& params, double t, double epsilon,
                   double delta) {
  const double s = scale_s(params, t);
  const auto [first, last] = path.index_range(0.0, (1.0 - epsilon) * s);
  const double up = drawup(path.values.segment(first, last - first + 1));
  return up <= (1.0 - delta) * std::log(t);
}

bool check_event_B(const PotentialPath& path, const ScaleParams& params, double t, double epsilon,
                   double delta, int N) {
  if (N < 1) throw ArgumentError("event B: N must be >= 1");
  const double s = scale_s(params, t);
  const auto [first, last] = path.index_range((1.0 - epsilon) * s, (1.0 - epsilon / 2.0) * s);
  const double threshold = (1.0 + delta) * std::log(t);
  return greedy_partition_count(path.values, first, last, DrawKind::down, threshold, N) >= N;
}

bool check_event_C(const PotentialPath& path, const ScaleParams& params, double t, double epsilon,
                   double delta, int N) {
  if (N < 1) throw ArgumentError("event C: N must be >= 1");
  const double s = scale_s(params, t);
  const auto [first, last] = path.index_range(s, (1.0 + epsilon) * s);
  const double threshold = (1.0 + delta) * std::log(t);
  return greedy_partition_count(path.values, first, last, DrawKind::up, threshold, N) >= N;
}

bool check_event_G(const PotentialPath& path, const ScaleParams& params, double t) {
  if (!(t > 1.0)) throw DomainError("event G needs t > 1");
  const double reach = std::pow(std::log(t), 1.0 / params.alpha);
  const auto [first, last] = path.index_range(0.0, reach);
  const double peak = path.values.segment(first, last - first + 1).cwiseAbs().maxCoeff();
  return peak <= 2.0 * reach;
}

double events_required_length(const ScaleParams& params, double t, double epsilon) {
  return std::max((1.0 + epsilon) * scale_s(params, t), std::pow(std::log(t), 1.0 / params.alpha));
}

}  // namespace rwre
