#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/numerics.hpp"
#include "rwre/pathfunc.hpp"
#include "rwre/rng.hpp"

namespace rwre {

/// Which time counts as tau_x when x is the starting site.
enum class HitConvention {
  at_start,      // tau_x = 0 if the walk starts at x
  first_return,  // tau_x = inf{u > 0 : X_u = x} after leaving x
};

struct SimConfig {
  std::vector<double> t_checkpoints;
  std::vector<std::int64_t> targets;
  std::uint64_t max_events = 1'000'000'000;
  std::uint64_t seed = 0;
  std::size_t replicas = 1;
  std::int64_t start = 0;
  HitConvention convention = HitConvention::at_start;

  void validate() const;
};

struct HitRecord {
  std::int64_t target = 0;
  std::optional<double> time;  // empty: censored at the event cap
};

struct Trajectory {
  std::vector<std::optional<std::int64_t>> checkpoint_positions;  // empty: censored
  std::vector<HitRecord> hits;
  std::uint64_t events = 0;
};

/// Embedded jump chain of an environment with precomputed 53-bit thresholds.
class WalkKernel {
 public:
  explicit WalkKernel(const Environment& env);

  std::int64_t n_sites() const { return static_cast<std::int64_t>(threshold_.size()) - 1; }

  /// One embedded step from x. Throws RangeError on a right-edge overrun.
  std::int64_t step(Xoshiro256& rng, std::int64_t x) const;

  /// Advances x by up to `steps` jumps, stopping early when x reaches `stop`
  /// (if given). Returns the number of jumps made.
  std::uint64_t advance(Xoshiro256& rng, std::int64_t& x, std::uint64_t steps,
                        std::optional<std::int64_t> stop = std::nullopt) const;

  /// Advances while a < x < c, up to `steps` jumps. Returns jumps made.
  std::uint64_t advance_inside(Xoshiro256& rng, std::int64_t& x, std::uint64_t steps,
                               std::int64_t a, std::int64_t c) const;

 private:
  [[noreturn]] void overrun() const;
  std::vector<std::uint64_t> threshold_;  // jump left iff (r >> 11) < threshold_[x]
};

/// Draws the number of unit-rate events in a window of length `duration`.
std::uint64_t poisson_count(Xoshiro256& rng, double duration);

Trajectory run_trajectory(const Environment& env, const SimConfig& cfg, std::size_t replica);

/// P[tau_target <= t] from `start`, estimated over replicas.
Frequency mc_hit_cdf(const Environment& env, std::int64_t target, double t,
                     std::size_t n_replicas, std::uint64_t seed, std::int64_t start = 0,
                     unsigned threads = 0,
                     HitConvention convention = HitConvention::at_start,
                     std::uint64_t* events_out = nullptr);

/// P^x[tau_{a,c} >= t] estimated over replicas.
Frequency mc_confinement(const Environment& env, std::int64_t a, std::int64_t c, std::int64_t x,
                         double t, std::size_t n_replicas, std::uint64_t seed,
                         unsigned threads = 0, std::uint64_t* events_out = nullptr);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

Quartiles quartiles(const std::vector<double>& xs);

/// Quartiles of X_t / s(t) over replicas in one environment.
Quartiles localization_ratio(const Environment& env, const ScaleParams& params, double t,
                             std::size_t n_replicas, std::uint64_t seed, unsigned threads = 0);

}  // namespace rwre
