#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "json.hpp"

#include "rwre/rng.hpp"

namespace rwre {

/// Law of the i.i.d. disorder variables. Every family offered here is
/// centered with a finite moment generating function everywhere.
struct Distribution {
  enum class Family { rademacher, centered_uniform, gaussian, two_point };

  Family family = Family::rademacher;
  double scale = 1.0;  // c for Rademacher, half-width for uniform, std for Gaussian
  double p = 0.5;      // two-point: P[omega = low]
  double low = -1.0;
  double high = 1.0;

  static Distribution rademacher(double c) { return {Family::rademacher, c}; }
  static Distribution centered_uniform(double half_width) {
    return {Family::centered_uniform, half_width};
  }
  static Distribution gaussian(double std_dev) { return {Family::gaussian, std_dev}; }
  static Distribution two_point(double p, double low, double high) {
    return {Family::two_point, 1.0, p, low, high};
  }

  double mean() const;
  double variance() const;
  double stddev() const;
  /// E[exp(theta * omega)].
  double mgf(double theta) const;
  /// Throws ConfigError unless mean is 0 and variance is positive and finite.
  void validate() const;

  double sample(Xoshiro256& rng) const;

  std::string name() const;
};

struct EnvSpec {
  Distribution distribution;
  double b = 1.0;
  double alpha = 0.25;
  std::int64_t n_sites = 1000;
  double theta0_check = 1.0;

  void validate() const;
  double sigma() const { return distribution.stddev(); }
};

/// One quenched realization: disorder, log-odds of a left jump, and the
/// potential U with U(0) = 0. Immutable after construction.
class Environment {
 public:
  /// Build from explicit log-odds z_1..z_n (z_y = U(y) - U(y-1)). Site 0 is
  /// always reflecting. `b` and `alpha` only serve to report the disorder
  /// omega_y = z_y + b y^-alpha.
  static Environment from_log_odds(const Eigen::VectorXd& log_odds, double b = 0.0,
                                   double alpha = 0.25);

  std::int64_t n_sites() const { return static_cast<std::int64_t>(log_odds_.size()) - 1; }
  double b() const { return b_; }
  double alpha() const { return alpha_; }
  std::uint64_t seed() const { return seed_; }
  const EnvSpec& spec() const { return spec_; }
  bool has_spec() const { return has_spec_; }

  /// omega_y for 1 <= y <= n.
  double omega(std::int64_t y) const;
  /// U(x) for 0 <= x <= n.
  double U(std::int64_t x) const;
  /// ln(q_y / (1 - q_y)); -inf at y = 0.
  double log_odds(std::int64_t y) const;
  /// q_y, the probability that a jump from y goes left.
  double jump_prob(std::int64_t y) const;
  /// ln q_y and ln(1 - q_y), accurate for large |log-odds|.
  double log_q(std::int64_t y) const;
  double log_p(std::int64_t y) const;

  /// Partial sum of omega_1..omega_x.
  double omega_sum(std::int64_t x) const;

  const Eigen::VectorXd& potential() const { return potential_; }
  const Eigen::VectorXd& disorder() const { return omega_; }

  nlohmann::json to_json(bool include_disorder = false) const;
  /// Regenerates from (spec, seed) and, when disorder is stored, checks it.
  static Environment from_json(const nlohmann::json& j);

 private:
  friend Environment sample_environment(const EnvSpec&, std::uint64_t);
  void check_site(std::int64_t y, std::int64_t lo) const;
  void finish();

  EnvSpec spec_;
  bool has_spec_ = false;
  std::uint64_t seed_ = 0;
  double b_ = 0.0;
  double alpha_ = 0.25;
  Eigen::VectorXd omega_;     // omega_[y-1] = omega_y
  Eigen::VectorXd log_odds_;  // log_odds_[0] = -inf
  Eigen::VectorXd potential_;
  Eigen::VectorXd omega_sums_;
};

Environment sample_environment(const EnvSpec& spec, std::uint64_t seed);

EnvSpec env_spec_from_json(const nlohmann::json& j);
nlohmann::json env_spec_to_json(const EnvSpec& spec);

/// Sampled V(x) = sigma W(x) - b/(1-alpha) x^(1-alpha) on a uniform grid.
struct PotentialPath {
  double grid_step = 1.0;
  Eigen::VectorXd values;
  Eigen::VectorXd scaled_brownian;  // sigma W at the grid points
  double sigma = 1.0;
  double b = 0.0;
  double alpha = 0.25;
  std::uint64_t brownian_seed = 0;

  Eigen::Index size() const { return values.size(); }
  double length() const { return grid_step * static_cast<double>(values.size() - 1); }
  /// Index range [first, last] of grid points inside [lo, hi]; RangeError
  /// when the path stops before hi.
  std::pair<Eigen::Index, Eigen::Index> index_range(double lo, double hi) const;
};

double power_drift(double b, double alpha, double x);

PotentialPath sample_potential_path(double sigma, double b, double alpha, double length,
                                    double grid_step, std::uint64_t seed);

/// Gaussian environment whose partial sums equal sigma W at the integers of
/// `path`: omega_i = sigma (W(i) - W(i-1)). Requires 1/grid_step integral.
Environment couple_gaussian_environment(const PotentialPath& path, std::int64_t n_sites);

/// |sum_{i <= floor x} i^-alpha - int_1^x u^-alpha du|.
double series_integral_gap(double alpha, double x);

/// Default exponent M for the good-environment window [0, ln^M t].
inline int default_coupling_exponent(double alpha) {
  return static_cast<int>(std::ceil(1.0 / alpha)) + 1;
}

/// Largest |sum_{i<=floor x} omega_i - sigma W(x)| over grid x in [0, ln^M t].
double gamma_gap(const Environment& env, const PotentialPath& path, double t, double M);

/// Membership of the good-environment event: gamma_gap <= K ln ln t.
bool check_gamma_event(const Environment& env, const PotentialPath& path, double t, double K,
                       double M);

}  // namespace rwre
