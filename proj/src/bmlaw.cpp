#include "rwre/bmlaw.hpp"

#include <algorithm>
#include <cmath>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "rwre/errors.hpp"
#include "rwre/parallel.hpp"
#include "rwre/pathfunc.hpp"
#include "rwre/rng.hpp"

namespace rwre {

void DriftedBMParams::validate() const {
  if (!(sigma > 0.0)) throw ArgumentError("drifted BM: sigma must be positive");
  if (!(mu > 0.0)) throw ArgumentError("drifted BM: mu must be positive");
  if (!(a >= 0.0)) throw ArgumentError("drifted BM: level a must be non-negative");
  if (!std::isfinite(nu)) throw ArgumentError("drifted BM: nu must be finite");
}

double prop0_survival(const DriftedBMParams& p) {
  p.validate();
  if (p.a == 0.0) return 1.0;
  const double s = p.sigma;
  const double rho = std::sqrt(2.0 / p.mu + p.nu * p.nu / (s * s));
  const double sr = s * rho;
  const double ar = p.a * rho / s;
  // 1 +- k with k = nu/(sigma rho), written to avoid cancellation.
  const double gap = 2.0 * s * s / p.mu;
  const double one_plus_k = p.nu >= 0.0 ? 1.0 + p.nu / sr : gap / ((sr - p.nu) * sr);
  const double one_minus_k = p.nu <= 0.0 ? 1.0 - p.nu / sr : gap / ((sr + p.nu) * sr);
  // cosh(ar) + k sinh(ar) = (e^{ar}/2) ((1+k) + (1-k) e^{-2ar})
  const double log_den = ar - std::log(2.0) + std::log(one_plus_k + one_minus_k * std::exp(-2.0 * ar));
  const double log_p = p.nu * p.a / (s * s) - log_den;
  return std::clamp(std::exp(log_p), 0.0, 1.0);
}

double cor1_asymptotic(const DriftedBMParams& p) {
  p.validate();
  if (!(p.nu < 0.0)) throw DomainError("cor1_asymptotic: needs nu < 0");
  const double s2 = p.sigma * p.sigma;
  const double log_term =
      std::log(s2 / (2.0 * p.nu * p.nu * p.mu)) + 2.0 * std::abs(p.nu) * p.a / s2;
  return logistic(-log_term);
}

std::vector<Frequency> mc_drawup_survival_levels(const DriftedBMParams& p,
                                                 std::span<const double> levels, double dt,
                                                 std::size_t n_paths, std::uint64_t seed,
                                                 unsigned threads, std::uint64_t* steps_out) {
  DriftedBMParams check = p;
  check.a = 0.0;
  check.validate();
  if (!(dt > 0.0)) throw ArgumentError("mc_drawup_survival: dt must be positive");
  if (n_paths == 0) throw ArgumentError("mc_drawup_survival: need at least one path");
  if (levels.empty()) throw ArgumentError("mc_drawup_survival: no levels");
  for (double a : levels)
    if (!(a >= 0.0)) throw ArgumentError("mc_drawup_survival: levels must be non-negative");
  const double top = *std::max_element(levels.begin(), levels.end());

  std::vector<double> best(n_paths, 0.0);
  std::vector<std::uint64_t> steps(n_paths, 0);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    auto rng = make_stream(seed, Domain::path, i);
    boost::random::exponential_distribution<double> horizon(1.0 / p.mu);
    boost::random::normal_distribution<double> normal;
    const double T = horizon(rng);
    const auto full = static_cast<std::uint64_t>(std::floor(T / dt));
    const double rest = T - static_cast<double>(full) * dt;
    const double mean_step = p.nu * dt;
    const double sd_step = p.sigma * std::sqrt(dt);
    DrawupAccumulator<double> acc(0.0);
    double x = 0.0;
    std::uint64_t drawn = 0;
    bool done = false;
    for (std::uint64_t k = 0; k < full; ++k) {
      x += mean_step + sd_step * normal(rng);
      acc.push(x);
      ++drawn;
      if (acc.value() > top) {
        done = true;
        break;
      }
    }
    if (!done && rest > 0.0) {
      x += p.nu * rest + p.sigma * std::sqrt(rest) * normal(rng);
      acc.push(x);
      ++drawn;
    }
    best[i] = acc.value();
    steps[i] = drawn;
  });

  std::vector<Frequency> out(levels.size());
  for (std::size_t j = 0; j < levels.size(); ++j) {
    out[j].trials = n_paths;
    // The continuous draw-up is a.s. positive, so level 0 is always exceeded.
    if (levels[j] == 0.0) {
      out[j].hits = n_paths;
      continue;
    }
    for (double d : best) out[j].hits += static_cast<std::size_t>(d > levels[j]);
  }
  if (steps_out) {
    for (auto s : steps) *steps_out += s;
  }
  return out;
}

Frequency mc_drawup_survival(const DriftedBMParams& p, double dt, std::size_t n_paths,
                             std::uint64_t seed, unsigned threads, std::uint64_t* steps_out) {
  p.validate();
  const double level = p.a;
  return mc_drawup_survival_levels(p, std::span<const double>(&level, 1), dt, n_paths, seed,
                                   threads, steps_out)[0];
}

}  // namespace rwre
