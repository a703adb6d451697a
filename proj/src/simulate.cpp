#include "rwre/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "rwre/errors.hpp"
#include "rwre/parallel.hpp"

namespace rwre {

namespace {

constexpr double kTwo53 = 9007199254740992.0;

Xoshiro256 replica_stream(std::uint64_t seed, const Environment& env, std::size_t replica) {
  return make_stream(seed, Domain::walk, replica, env.seed());
}

}  // namespace

void SimConfig::validate() const {
  for (std::size_t i = 0; i < t_checkpoints.size(); ++i) {
    if (!(t_checkpoints[i] > 0.0)) throw ConfigError("checkpoints must be positive");
    if (i > 0 && !(t_checkpoints[i] > t_checkpoints[i - 1]))
      throw ConfigError("checkpoints must be strictly increasing");
  }
  if (max_events == 0) throw ConfigError("max_events must be positive");
  if (replicas == 0) throw ConfigError("replicas must be positive");
}

WalkKernel::WalkKernel(const Environment& env) : threshold_(static_cast<std::size_t>(env.n_sites() + 1)) {
  threshold_[0] = 0;
  for (std::int64_t y = 1; y <= env.n_sites(); ++y) {
    const double q = env.jump_prob(y);
    threshold_[static_cast<std::size_t>(y)] = static_cast<std::uint64_t>(std::nearbyint(q * kTwo53));
  }
}

void WalkKernel::overrun() const {
  std::ostringstream os;
  os << "right-edge overrun: walk left the environment at site " << n_sites();
  throw RangeError(os.str());
}

std::int64_t WalkKernel::step(Xoshiro256& rng, std::int64_t x) const {
  const bool left = (rng() >> 11) < threshold_[static_cast<std::size_t>(x)];
  if (left) return x - 1;
  if (x >= n_sites()) overrun();
  return x + 1;
}

std::uint64_t WalkKernel::advance(Xoshiro256& rng, std::int64_t& x, std::uint64_t steps,
                                  std::optional<std::int64_t> stop) const {
  const std::uint64_t* thr = threshold_.data();
  const std::int64_t n = n_sites();
  std::uint64_t made = 0;
  while (made < steps) {
    if (stop && x == *stop) return made;
    const auto room = static_cast<std::uint64_t>(n - x);
    if (room == 0) {
      x = step(rng, x);
      ++made;
      continue;
    }
    // At most `room` jumps cannot cross the right edge.
    const std::uint64_t chunk = std::min(steps - made, room);
    std::int64_t pos = x;
    if (!stop) {
      for (std::uint64_t i = 0; i < chunk; ++i) {
        const std::int64_t left = (rng() >> 11) < thr[pos];
        pos += 1 - 2 * left;
      }
      made += chunk;
    } else {
      const std::int64_t target = *stop;
      std::uint64_t i = 0;
      while (i < chunk) {
        const std::int64_t left = (rng() >> 11) < thr[pos];
        pos += 1 - 2 * left;
        ++i;
        if (pos == target) break;
      }
      made += i;
    }
    x = pos;
  }
  return made;
}

std::uint64_t WalkKernel::advance_inside(Xoshiro256& rng, std::int64_t& x, std::uint64_t steps,
                                         std::int64_t a, std::int64_t c) const {
  std::uint64_t made = 0;
  while (made < steps && x > a && x < c) {
    x = step(rng, x);
    ++made;
  }
  return made;
}

std::uint64_t poisson_count(Xoshiro256& rng, double duration) {
  if (!(duration > 0.0)) return 0;
  boost::random::poisson_distribution<std::uint64_t, double> dist(duration);
  return dist(rng);
}

Trajectory run_trajectory(const Environment& env, const SimConfig& cfg, std::size_t replica) {
  cfg.validate();
  if (cfg.start < 0 || cfg.start > env.n_sites()) throw RangeError("start site outside environment");
  for (auto target : cfg.targets)
    if (target < 0 || target > env.n_sites()) throw RangeError("target site outside environment");

  const WalkKernel kernel(env);
  auto rng = replica_stream(cfg.seed, env, replica);
  Trajectory out;
  out.checkpoint_positions.assign(cfg.t_checkpoints.size(), std::nullopt);
  std::int64_t x = cfg.start;

  if (cfg.targets.empty()) {
    // Only positions needed: the event count on each window is Poisson.
    double prev = 0.0;
    for (std::size_t k = 0; k < cfg.t_checkpoints.size(); ++k) {
      const std::uint64_t n = poisson_count(rng, cfg.t_checkpoints[k] - prev);
      prev = cfg.t_checkpoints[k];
      if (out.events + n > cfg.max_events) break;
      kernel.advance(rng, x, n);
      out.events += n;
      out.checkpoint_positions[k] = x;
    }
    return out;
  }

  boost::random::exponential_distribution<double> hold;
  out.hits.reserve(cfg.targets.size());
  std::size_t pending = 0;
  for (auto target : cfg.targets) {
    HitRecord rec{target, std::nullopt};
    if (target == cfg.start && cfg.convention == HitConvention::at_start)
      rec.time = 0.0;
    else
      ++pending;
    out.hits.push_back(rec);
  }
  std::size_t next_checkpoint = 0;
  double time = 0.0;
  while (out.events < cfg.max_events &&
         (pending > 0 || next_checkpoint < cfg.t_checkpoints.size())) {
    const double next_time = time + hold(rng);
    while (next_checkpoint < cfg.t_checkpoints.size() && cfg.t_checkpoints[next_checkpoint] < next_time)
      out.checkpoint_positions[next_checkpoint++] = x;
    time = next_time;
    x = kernel.step(rng, x);
    ++out.events;
    if (pending > 0) {
      for (auto& rec : out.hits) {
        if (!rec.time && rec.target == x) {
          rec.time = time;
          --pending;
        }
      }
    }
  }
  return out;
}

Frequency mc_hit_cdf(const Environment& env, std::int64_t target, double t, std::size_t n_replicas,
                     std::uint64_t seed, std::int64_t start, unsigned threads,
                     HitConvention convention, std::uint64_t* events_out) {
  if (target < 0 || target > env.n_sites()) throw RangeError("mc_hit_cdf: target outside environment");
  if (start < 0 || start > env.n_sites()) throw RangeError("mc_hit_cdf: start outside environment");
  if (t < 0.0) throw ArgumentError("mc_hit_cdf: t must be non-negative");
  const WalkKernel kernel(env);
  std::vector<char> hit(n_replicas, 0);
  std::vector<std::uint64_t> events(n_replicas, 0);
  parallel_for(n_replicas, threads, [&](std::size_t r) {
    if (target == start && convention == HitConvention::at_start) {
      hit[r] = 1;
      return;
    }
    auto rng = replica_stream(seed, env, r);
    std::uint64_t n = poisson_count(rng, t);
    std::int64_t x = start;
    std::uint64_t made = 0;
    if (target == start) {  // first return: leave before looking
      if (n == 0) return;
      x = kernel.step(rng, x);
      made = 1;
      --n;
    }
    made += kernel.advance(rng, x, n, target);
    events[r] = made;
    hit[r] = x == target;
  });
  Frequency f;
  f.trials = n_replicas;
  for (std::size_t r = 0; r < n_replicas; ++r) f.hits += static_cast<std::size_t>(hit[r]);
  if (events_out) {
    for (auto e : events) *events_out += e;
  }
  return f;
}

Frequency mc_confinement(const Environment& env, std::int64_t a, std::int64_t c, std::int64_t x,
                         double t, std::size_t n_replicas, std::uint64_t seed, unsigned threads,
                         std::uint64_t* events_out) {
  if (!(a < x && x < c)) throw ArgumentError("mc_confinement: need a < x < c");
  if (a < 0 || c > env.n_sites()) throw RangeError("mc_confinement: interval outside environment");
  const WalkKernel kernel(env);
  std::vector<char> inside(n_replicas, 0);
  std::vector<std::uint64_t> events(n_replicas, 0);
  parallel_for(n_replicas, threads, [&](std::size_t r) {
    auto rng = replica_stream(seed, env, r);
    const std::uint64_t n = poisson_count(rng, t);
    std::int64_t pos = x;
    events[r] = kernel.advance_inside(rng, pos, n, a, c);
    inside[r] = pos > a && pos < c;
  });
  Frequency f;
  f.trials = n_replicas;
  for (std::size_t r = 0; r < n_replicas; ++r) f.hits += static_cast<std::size_t>(inside[r]);
  if (events_out) {
    for (auto e : events) *events_out += e;
  }
  return f;
}

Quartiles quartiles(const std::vector<double>& xs) {
  return {quantile(xs, 0.25), quantile(xs, 0.5), quantile(xs, 0.75)};
}

Quartiles localization_ratio(const Environment& env, const ScaleParams& params, double t,
                             std::size_t n_replicas, std::uint64_t seed, unsigned threads) {
  const double s = scale_s(params, t);
  if (static_cast<double>(env.n_sites()) <= 2.0 * s)
    throw RangeError("localization_ratio: environment shorter than 2 s(t)");
  SimConfig cfg;
  cfg.t_checkpoints = {t};
  cfg.seed = seed;
  cfg.replicas = n_replicas;
  cfg.max_events = std::numeric_limits<std::uint64_t>::max();
  std::vector<double> ratios(n_replicas);
  parallel_for(n_replicas, threads, [&](std::size_t r) {
    const Trajectory tr = run_trajectory(env, cfg, r);
    ratios[r] = static_cast<double>(*tr.checkpoint_positions[0]) / s;
  });
  return quartiles(ratios);
}

}  // namespace rwre
