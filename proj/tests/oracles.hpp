#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rwre/environment.hpp"
#include "rwre/rng.hpp"

namespace oracle {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

/// O(n^2) draw-up: max over v <= u of f(u) - f(v).
inline double drawup(const std::vector<double>& f) {
  double best = 0.0;
  for (std::size_t u = 0; u < f.size(); ++u)
    for (std::size_t v = 0; v <= u; ++v) best = std::max(best, f[u] - f[v]);
  return best;
}

/// O(n^2) draw-down: max over u <= v of f(u) - f(v).
inline double drawdown(const std::vector<double>& f) {
  double best = 0.0;
  for (std::size_t u = 0; u < f.size(); ++u)
    for (std::size_t v = u; v < f.size(); ++v) best = std::max(best, f[u] - f[v]);
  return best;
}

inline double piece(const std::vector<double>& f, std::size_t lo, std::size_t hi, bool up) {
  std::vector<double> seg(f.begin() + static_cast<std::ptrdiff_t>(lo),
                          f.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
  return up ? drawup(seg) : drawdown(seg);
}

/// Does [lo, hi] split into exactly n consecutive closed pieces (shared
/// endpoints) whose draw functional each exceeds thr? Exhaustive search.
inline bool partition_exists(const std::vector<double>& f, std::size_t lo, std::size_t hi, int n,
                             double thr, bool up) {
  if (n == 1) return piece(f, lo, hi, up) > thr;
  for (std::size_t cut = lo + 1; cut < hi; ++cut)
    if (piece(f, lo, cut, up) > thr && partition_exists(f, cut, hi, n - 1, thr, up)) return true;
  return false;
}

/// q_y and 1 - q_y in extended precision, straight from the log-odds.
inline long double q_of(const rwre::Environment& env, std::int64_t y) {
  if (y == 0) return 0.0L;
  const long double z = env.log_odds(y);
  return 1.0L / (1.0L + std::exp(-z));
}

/// P^x[tau_c < tau_a] for every x in [a, c] from the dense harmonic system.
inline LVector ruin_dense(const rwre::Environment& env, std::int64_t a, std::int64_t c) {
  const auto n = static_cast<Eigen::Index>(c - a + 1);
  LMatrix A = LMatrix::Zero(n, n);
  LVector rhs = LVector::Zero(n);
  A(0, 0) = 1.0L;
  A(n - 1, n - 1) = 1.0L;
  rhs(n - 1) = 1.0L;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const long double q = q_of(env, a + i);
    A(i, i) = 1.0L;
    A(i, i - 1) = -q;
    A(i, i + 1) = -(1.0L - q);
  }
  return A.partialPivLu().solve(rhs);
}

/// E^x[tau_y] for x in [0, y] from the dense system (I - P) m = 1, m(y) = 0.
inline LVector hit_dense(const rwre::Environment& env, std::int64_t y) {
  const auto n = static_cast<Eigen::Index>(y + 1);
  LMatrix A = LMatrix::Zero(n, n);
  LVector rhs = LVector::Ones(n);
  for (Eigen::Index x = 0; x + 1 < n; ++x) {
    const long double q = q_of(env, x);
    A(x, x) = 1.0L;
    if (x > 0) A(x, x - 1) = -q;
    A(x, x + 1) = -(1.0L - q);
  }
  A(n - 1, n - 1) = 1.0L;
  rhs(n - 1) = 0.0L;
  return A.partialPivLu().solve(rhs);
}

/// Law of X_t from X_0 = 0 by uniformization: Poisson(t) mixture of the
/// jump-chain distributions. Mass that would leave [0, n] is dropped.
inline std::vector<double> law_at(const rwre::Environment& env, double t) {
  const auto n = static_cast<std::size_t>(env.n_sites());
  std::vector<long double> q(n + 1);
  for (std::size_t y = 0; y <= n; ++y) q[y] = q_of(env, static_cast<std::int64_t>(y));
  std::vector<long double> p(n + 1, 0.0L), next(n + 1), law(n + 1, 0.0L);
  p[0] = 1.0L;
  const auto k_max = static_cast<std::size_t>(t + 12.0 * std::sqrt(t) + 20.0);
  for (std::size_t k = 0; k <= k_max; ++k) {
    const long double w = std::exp(static_cast<long double>(k) * std::log(static_cast<long double>(t)) -
                                   static_cast<long double>(t) - std::lgamma(static_cast<long double>(k) + 1.0L));
    for (std::size_t y = 0; y <= n; ++y) law[y] += w * p[y];
    std::fill(next.begin(), next.end(), 0.0L);
    for (std::size_t y = 0; y <= n; ++y) {
      if (y > 0) next[y - 1] += p[y] * q[y];
      if (y < n) next[y + 1] += p[y] * (1.0L - q[y]);
    }
    p.swap(next);
  }
  return {law.begin(), law.end()};
}

/// Extended-precision log-sum-exp.
inline long double log_sum_exp(const std::vector<double>& v) {
  long double hi = *std::max_element(v.begin(), v.end());
  long double acc = 0.0L;
  for (double x : v) acc += std::exp(static_cast<long double>(x) - hi);
  return hi + std::log(acc);
}

/// A random environment spec for oracle sweeps.
inline rwre::EnvSpec random_spec(rwre::Xoshiro256& rng, std::int64_t n_sites) {
  rwre::EnvSpec spec;
  const double u = rng.uniform();
  if (u < 0.4)
    spec.distribution = rwre::Distribution::rademacher(0.3 + 1.2 * rng.uniform());
  else if (u < 0.7)
    spec.distribution = rwre::Distribution::gaussian(0.3 + 1.2 * rng.uniform());
  else
    spec.distribution = rwre::Distribution::centered_uniform(0.5 + 2.0 * rng.uniform());
  spec.alpha = 0.05 + 0.4 * rng.uniform();
  spec.b = 0.2 + 1.5 * rng.uniform();
  spec.n_sites = n_sites;
  return spec;
}

inline double rel_err(long double got, long double want) {
  if (want == 0.0L) return static_cast<double>(std::abs(got));
  return static_cast<double>(std::abs(got - want) / std::abs(want));
}

}  // namespace oracle
