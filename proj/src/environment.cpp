#include "rwre/environment.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/random/normal_distribution.hpp>

#include "rwre/errors.hpp"
#include "rwre/numerics.hpp"

namespace rwre {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string family_name(Distribution::Family f) {
  switch (f) {
    case Distribution::Family::rademacher: return "rademacher";
    case Distribution::Family::centered_uniform: return "centered_uniform";
    case Distribution::Family::gaussian: return "gaussian";
    case Distribution::Family::two_point: return "two_point";
  }
  return "unknown";
}

Distribution::Family family_from_name(const std::string& s) {
  if (s == "rademacher") return Distribution::Family::rademacher;
  if (s == "centered_uniform" || s == "uniform") return Distribution::Family::centered_uniform;
  if (s == "gaussian" || s == "normal") return Distribution::Family::gaussian;
  if (s == "two_point") return Distribution::Family::two_point;
  throw ConfigError("unknown disorder distribution '" + s + "'");
}

nlohmann::json spec_to_json(const EnvSpec& spec) {
  const auto& d = spec.distribution;
  nlohmann::json dist = {{"type", family_name(d.family)}};
  if (d.family == Distribution::Family::two_point) {
    dist["p"] = d.p;
    dist["low"] = d.low;
    dist["high"] = d.high;
  } else {
    dist["scale"] = d.scale;
  }
  return {{"distribution", dist},
          {"b", spec.b},
          {"alpha", spec.alpha},
          {"n_sites", spec.n_sites},
          {"theta0_check", spec.theta0_check}};
}

EnvSpec spec_from_json(const nlohmann::json& j) {
  EnvSpec spec;
  const auto& dist = j.at("distribution");
  spec.distribution.family = family_from_name(dist.at("type").get<std::string>());
  if (spec.distribution.family == Distribution::Family::two_point) {
    spec.distribution.p = dist.at("p").get<double>();
    spec.distribution.low = dist.at("low").get<double>();
    spec.distribution.high = dist.at("high").get<double>();
  } else {
    spec.distribution.scale = dist.at("scale").get<double>();
  }
  spec.b = j.at("b").get<double>();
  spec.alpha = j.at("alpha").get<double>();
  spec.n_sites = j.at("n_sites").get<std::int64_t>();
  spec.theta0_check = j.value("theta0_check", 1.0);
  return spec;
}

}  // namespace

double Distribution::mean() const {
  if (family == Family::two_point) return p * low + (1 - p) * high;
  return 0.0;
}

double Distribution::variance() const {
  switch (family) {
    case Family::rademacher: return scale * scale;
    case Family::centered_uniform: return scale * scale / 3.0;
    case Family::gaussian: return scale * scale;
    case Family::two_point: {
      const double m = mean();
      return p * (low - m) * (low - m) + (1 - p) * (high - m) * (high - m);
    }
  }
  return 0.0;
}

double Distribution::stddev() const { return std::sqrt(variance()); }

double Distribution::mgf(double theta) const {
  switch (family) {
    case Family::rademacher: return std::cosh(scale * theta);
    case Family::centered_uniform: {
      const double x = scale * theta;
      return x == 0.0 ? 1.0 : std::sinh(x) / x;
    }
    case Family::gaussian: return std::exp(0.5 * scale * scale * theta * theta);
    case Family::two_point: return p * std::exp(theta * low) + (1 - p) * std::exp(theta * high);
  }
  return kInf;
}

void Distribution::validate() const {
  if (family == Family::two_point) {
    if (!(p > 0.0 && p < 1.0))
      throw ConfigError("two_point: p must lie in (0, 1), zero variance violates Condition S");
    const double tol = 1e-12 * std::max(std::abs(low), std::abs(high));
    if (std::abs(mean()) > tol)
      throw ConfigError("two_point: mean must be 0 (Condition S), got " + std::to_string(mean()));
  } else if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ConfigError(name() + ": scale must be positive, zero variance violates Condition S");
  }
  const double v = variance();
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(name() + ": variance must be positive and finite (Condition S)");
}

double Distribution::sample(Xoshiro256& rng) const {
  switch (family) {
    case Family::rademacher: return (rng() >> 63) ? scale : -scale;
    case Family::centered_uniform: return scale * (2.0 * rng.uniform() - 1.0);
    case Family::gaussian: return scale * boost::random::normal_distribution<double>()(rng);
    case Family::two_point: return rng.uniform() < p ? low : high;
  }
  return 0.0;
}

std::string Distribution::name() const { return family_name(family); }

void EnvSpec::validate() const {
  distribution.validate();
  if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("b must be positive");
  if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("alpha must lie in the open interval (0, 1/2)");
  if (n_sites < 1) throw ConfigError("n_sites must be positive");
  if (!(theta0_check > 0.0)) throw ConfigError("theta0_check must be positive");
  if (!std::isfinite(distribution.mgf(theta0_check)) ||
      !std::isfinite(distribution.mgf(-theta0_check)))
    throw ConfigError("moment generating function infinite at theta0_check (Condition K)");
}

double power_drift(double b, double alpha, double x) {
  return b / (1.0 - alpha) * std::pow(x, 1.0 - alpha);
}

void Environment::check_site(std::int64_t y, std::int64_t lo) const {
  if (y < lo || y > n_sites()) {
    std::ostringstream os;
    os << "site " << y << " outside [" << lo << ", " << n_sites() << "]";
    throw RangeError(os.str());
  }
}

void Environment::finish() {
  const Eigen::Index n = log_odds_.size() - 1;
  potential_.resize(n + 1);
  omega_sums_.resize(n + 1);
  potential_(0) = 0.0;
  omega_sums_(0) = 0.0;
  for (Eigen::Index y = 1; y <= n; ++y) {
    potential_(y) = potential_(y - 1) + log_odds_(y);
    omega_sums_(y) = omega_sums_(y - 1) + omega_(y - 1);
  }
}

Environment Environment::from_log_odds(const Eigen::VectorXd& log_odds, double b, double alpha) {
  Environment env;
  const Eigen::Index n = log_odds.size();
  env.b_ = b;
  env.alpha_ = alpha;
  env.log_odds_.resize(n + 1);
  env.log_odds_(0) = -kInf;
  env.log_odds_.tail(n) = log_odds;
  env.omega_.resize(n);
  for (Eigen::Index y = 1; y <= n; ++y)
    env.omega_(y - 1) = log_odds(y - 1) + b * std::pow(static_cast<double>(y), -alpha);
  env.finish();
  return env;
}

Environment sample_environment(const EnvSpec& spec, std::uint64_t seed) {
  spec.validate();
  Environment env;
  env.spec_ = spec;
  env.has_spec_ = true;
  env.seed_ = seed;
  env.b_ = spec.b;
  env.alpha_ = spec.alpha;
  const Eigen::Index n = spec.n_sites;
  env.omega_.resize(n);
  env.log_odds_.resize(n + 1);
  env.log_odds_(0) = -kInf;
  auto rng = make_stream(seed, Domain::disorder, 0);
  for (Eigen::Index y = 1; y <= n; ++y) {
    const double w = spec.distribution.sample(rng);
    env.omega_(y - 1) = w;
    env.log_odds_(y) = w - spec.b * std::pow(static_cast<double>(y), -spec.alpha);
  }
  env.finish();
  return env;
}

double Environment::omega(std::int64_t y) const {
  check_site(y, 1);
  return omega_(y - 1);
}

double Environment::U(std::int64_t x) const {
  check_site(x, 0);
  return potential_(x);
}

double Environment::log_odds(std::int64_t y) const {
  check_site(y, 0);
  return log_odds_(y);
}

double Environment::jump_prob(std::int64_t y) const {
  check_site(y, 0);
  if (y == 0) return 0.0;
  return logistic(log_odds_(y));
}

double Environment::log_q(std::int64_t y) const {
  check_site(y, 0);
  if (y == 0) return -kInf;
  return -log1pexp(-log_odds_(y));
}

double Environment::log_p(std::int64_t y) const {
  check_site(y, 0);
  if (y == 0) return 0.0;
  return -log1pexp(log_odds_(y));
}

double Environment::omega_sum(std::int64_t x) const {
  check_site(x, 0);
  return omega_sums_(x);
}

nlohmann::json Environment::to_json(bool include_disorder) const {
  nlohmann::json j = {{"format", "rwre-environment"}, {"version", 1}, {"seed", seed_}};
  if (has_spec_) {
    j["spec"] = spec_to_json(spec_);
  } else {
    j["b"] = b_;
    j["alpha"] = alpha_;
    include_disorder = true;
    j["log_odds"] = std::vector<double>(log_odds_.data() + 1, log_odds_.data() + log_odds_.size());
  }
  if (include_disorder) j["omega"] = std::vector<double>(omega_.data(), omega_.data() + omega_.size());
  return j;
}

Environment Environment::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "rwre-environment")
    throw ConfigError("not an rwre-environment document");
  if (j.value("version", 0) != 1) throw ConfigError("unsupported environment format version");
  if (j.contains("spec")) {
    Environment env = sample_environment(spec_from_json(j.at("spec")), j.at("seed").get<std::uint64_t>());
    if (j.contains("omega")) {
      const auto stored = j.at("omega").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(stored.size()) != env.omega_.size())
        throw ConfigError("stored disorder length does not match spec");
      for (std::size_t i = 0; i < stored.size(); ++i)
        if (stored[i] != env.omega_(static_cast<Eigen::Index>(i)))
          throw ConfigError("stored disorder differs from the regenerated environment");
    }
    return env;
  }
  const auto z = j.at("log_odds").get<std::vector<double>>();
  Environment env = from_log_odds(Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size())),
                                  j.at("b").get<double>(), j.at("alpha").get<double>());
  env.seed_ = j.at("seed").get<std::uint64_t>();
  if (j.contains("omega")) {
    const auto w = j.at("omega").get<std::vector<double>>();
    if (w.size() == z.size())
      env.omega_ = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    env.finish();
  }
  return env;
}

EnvSpec env_spec_from_json(const nlohmann::json& j) { return spec_from_json(j); }
nlohmann::json env_spec_to_json(const EnvSpec& spec) { return spec_to_json(spec); }

std::pair<Eigen::Index, Eigen::Index> PotentialPath::index_range(double lo, double hi) const {
  if (!(lo >= 0.0) || hi < lo) throw ArgumentError("index_range: need 0 <= lo <= hi");
  // Small tolerance so that grid points sitting on an endpoint are included.
  const double eps = 1e-9;
  const auto first = static_cast<Eigen::Index>(std::ceil(lo / grid_step - eps));
  const auto last = static_cast<Eigen::Index>(std::floor(hi / grid_step + eps));
  if (last > values.size() - 1) {
    std::ostringstream os;
    os << "path covers [0, " << length() << "] but [" << lo << ", " << hi << "] was requested";
    throw RangeError(os.str());
  }
  return {first, std::max(first, last)};
}

PotentialPath sample_potential_path(double sigma, double b, double alpha, double length,
                                    double grid_step, std::uint64_t seed) {
  if (!(grid_step > 0.0)) throw ConfigError("grid_step must be positive");
  if (!(length > 0.0)) throw ConfigError("path length must be positive");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  const auto steps = static_cast<Eigen::Index>(std::ceil(length / grid_step - 1e-9));
  PotentialPath path;
  path.grid_step = grid_step;
  path.sigma = sigma;
  path.b = b;
  path.alpha = alpha;
  path.brownian_seed = seed;
  path.values.resize(steps + 1);
  path.scaled_brownian.resize(steps + 1);
  auto rng = make_stream(seed, Domain::brownian, 0);
  boost::random::normal_distribution<double> normal;
  const double scale = sigma * std::sqrt(grid_step);
  double w = 0.0;
  path.scaled_brownian(0) = 0.0;
  path.values(0) = 0.0;
  for (Eigen::Index k = 1; k <= steps; ++k) {
    w += scale * normal(rng);
    path.scaled_brownian(k) = w;
    path.values(k) = w - power_drift(b, alpha, static_cast<double>(k) * grid_step);
  }
  return path;
}

Environment couple_gaussian_environment(const PotentialPath& path, std::int64_t n_sites) {
  const double per_unit = 1.0 / path.grid_step;
  const auto m = static_cast<Eigen::Index>(std::llround(per_unit));
  if (m < 1 || std::abs(per_unit - static_cast<double>(m)) > 1e-9)
    throw ConfigError("coupling needs a grid aligned to the integers (1/grid_step integral)");
  if (n_sites < 1 || n_sites * m > path.size() - 1)
    throw RangeError("path too short for the requested number of sites");
  Eigen::VectorXd z(n_sites);
  for (Eigen::Index i = 1; i <= n_sites; ++i) {
    const double w = path.scaled_brownian(i * m) - path.scaled_brownian((i - 1) * m);
    z(i - 1) = w - path.b * std::pow(static_cast<double>(i), -path.alpha);
  }
  Environment env = Environment::from_log_odds(z, path.b, path.alpha);
  return env;
}

double series_integral_gap(double alpha, double x) {
  if (!(x >= 1.0)) throw DomainError("series_integral_gap: x must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("series_integral_gap: alpha must lie in (0, 1)");
  const auto n = static_cast<std::int64_t>(std::floor(x));
  CompensatedSum sum;
  for (std::int64_t i = n; i >= 1; --i) sum.add(std::pow(static_cast<double>(i), -alpha));
  const double integral = (std::pow(x, 1.0 - alpha) - 1.0) / (1.0 - alpha);
  return std::abs(sum.value() - integral);
}

double gamma_gap(const Environment& env, const PotentialPath& path, double t, double M) {
  if (!(t > std::exp(1.0))) throw DomainError("good-environment event needs t > e");
  const double window = std::pow(std::log(t), M);
  const auto [first, last] = path.index_range(0.0, window);
  const auto m = static_cast<std::int64_t>(std::llround(1.0 / path.grid_step));
  const bool aligned = std::abs(1.0 / path.grid_step - static_cast<double>(m)) < 1e-9;
  const auto top = static_cast<std::int64_t>(std::floor(window + 1e-9));
  if (top > env.n_sites()) throw RangeError("environment shorter than the coupling window");
  double gap = 0.0;
  for (Eigen::Index k = first; k <= last; ++k) {
    const std::int64_t site = aligned ? k / m
                                      : static_cast<std::int64_t>(std::floor(
                                            static_cast<double>(k) * path.grid_step + 1e-9));
    gap = std::max(gap, std::abs(env.omega_sum(site) - path.scaled_brownian(k)));
  }
  return gap;
}

bool check_gamma_event(const Environment& env, const PotentialPath& path, double t, double K,
                       double M) {
  return gamma_gap(env, path, t, M) <= K * std::log(std::log(t));
}

}  // namespace rwre
