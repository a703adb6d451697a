#include "rwre/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "rwre/bmlaw.hpp"
#include "rwre/errors.hpp"
#include "rwre/parallel.hpp"
#include "rwre/rng.hpp"
#include "rwre/simulate.hpp"

namespace rwre {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Upper bound on a Poisson(t) event count used by the budget estimates.
double poisson_cap(double t) { return t + 6.0 * std::sqrt(t) + 10.0; }

std::uint64_t env_seed(std::uint64_t root, std::size_t index, std::uint64_t set = 0) {
  return stream_key(root ^ (static_cast<std::uint64_t>(Domain::environment) << 56), index, set);
}

std::uint64_t path_seed(std::uint64_t root, std::size_t index) {
  return stream_key(root ^ (static_cast<std::uint64_t>(Domain::path) << 56), index);
}

std::uint64_t walk_seed(std::uint64_t root, std::uint64_t study, std::uint64_t slot) {
  return stream_key(root ^ (static_cast<std::uint64_t>(Domain::walk) << 56), study, slot);
}

std::string coordinate(std::uint64_t seed, std::optional<std::size_t> replica, std::optional<double> t) {
  std::ostringstream os;
  os << "[env seed " << seed;
  if (replica) os << ", replica " << *replica;
  if (t) os << ", t " << *t;
  os << "] ";
  return os.str();
}

/// Reads config values, recording every default that gets applied.
class Reader {
 public:
  Reader(const json& root, std::vector<std::string>& defaults) : root_(root), defaults_(defaults) {}

  const json* find(const std::string& dotted) const {
    const json* node = &root_;
    std::size_t pos = 0;
    while (pos <= dotted.size()) {
      const auto next = dotted.find('.', pos);
      const std::string key = dotted.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      if (!node->is_object() || !node->contains(key)) return nullptr;
      node = &(*node)[key];
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    return node;
  }

  template <typename T>
  T required(const std::string& key) const {
    const json* node = find(key);
    if (!node) throw ConfigError("missing required field '" + key + "'");
    return convert<T>(*node, key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    const json* node = find(key);
    if (!node) {
      defaults_.push_back(key);
      return fallback;
    }
    return convert<T>(*node, key);
  }

  bool has(const std::string& key) const { return find(key) != nullptr; }

 private:
  template <typename T>
  static T convert(const json& node, const std::string& key) {
    try {
      return node.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("field '" + key + "' has the wrong type: " + e.what());
    }
  }

  const json& root_;
  std::vector<std::string>& defaults_;
};

bool uses_environment(ExperimentKind k) {
  return k == ExperimentKind::localization_trend || k == ExperimentKind::lemma_frequency ||
         k == ExperimentKind::bound_validation;
}

double max_t(const std::vector<double>& grid) { return grid.empty() ? 0.0 : grid.back(); }

json frequency_json(const Frequency& f) {
  return {{"frequency", f.value()}, {"se", f.se()}, {"hits", f.hits}, {"trials", f.trials}};
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::localization_trend: return "localization_trend";
    case ExperimentKind::lemma_frequency: return "lemma_frequency";
    case ExperimentKind::bound_validation: return "bound_validation";
    case ExperimentKind::prop0_validation: return "prop0_validation";
    case ExperimentKind::cor1_convergence: return "cor1_convergence";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::localization_trend, ExperimentKind::lemma_frequency,
                 ExperimentKind::bound_validation, ExperimentKind::prop0_validation,
                 ExperimentKind::cor1_convergence})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

std::vector<double> geometric_time_grid(double mu, double t_min, double t_max) {
  if (!(mu > 0.0)) throw ConfigError("grid ratio mu must be positive");
  std::vector<double> grid;
  for (int n = 0; n < 400; ++n) {
    const double log_t = std::pow(1.0 + mu, n);
    if (log_t > std::log(t_max) * (1 + 1e-12)) break;
    if (log_t >= std::log(t_min) * (1 - 1e-12)) grid.push_back(std::exp(log_t));
  }
  return grid;
}

json ExperimentSpec::to_json() const {
  json j;
  j["kind"] = to_string(kind);
  j["env"] = env_spec_to_json(env);
  j["scale"] = {{"alpha", scale.alpha}, {"b", scale.b}, {"sigma", scale.sigma}};
  j["t_grid"] = t_grid;
  j["grid_mu"] = grid_mu;
  j["n_environments"] = n_environments;
  j["n_replicas"] = n_replicas;
  j["epsilon"] = epsilon;
  j["delta"] = delta;
  j["N_partition"] = N_partition;
  j["grid_step"] = grid_step;
  j["root_seed"] = root_seed;
  j["output_path"] = output_path;
  j["budget_events"] = budget_events;
  j["bm"] = {{"sigma", bm.sigma}, {"nu", bm.nu},         {"mu", bm.mu},
             {"levels", bm.levels}, {"dt", bm.dt},       {"n_paths", bm.n_paths},
             {"allowance", bm.allowance}, {"schedule_k", bm.schedule_k},
             {"cor1_tolerance", bm.cor1_tolerance}};
  j["bounds"] = {{"interval_start", bounds.interval_start},
                 {"interval_length", bounds.interval_length},
                 {"n_calibration", bounds.n_calibration},
                 {"confine_t", bounds.confine_t},
                 {"escape_t", bounds.escape_t},
                 {"K1", bounds.K1},
                 {"K2", bounds.K2},
                 {"K3", bounds.K3},
                 {"use_watq", bounds.use_watq},
                 {"calibration_z", bounds.calibration_z},
                 {"hit_tolerance", bounds.hit_tolerance}};
  return j;
}

double estimate_events(const ExperimentSpec& spec) {
  const auto n_env = static_cast<double>(spec.n_environments);
  const auto n_rep = static_cast<double>(spec.n_replicas);
  switch (spec.kind) {
    case ExperimentKind::localization_trend:
      return n_env * n_rep * poisson_cap(max_t(spec.t_grid));
    case ExperimentKind::lemma_frequency: {
      double length = 0.0;
      for (double t : spec.t_grid)
        length = std::max(length, events_required_length(spec.scale, t, spec.epsilon));
      return n_env * (length / spec.grid_step + 2.0);
    }
    case ExperimentKind::bound_validation: {
      double per_env = 0.0;
      for (double t : spec.bounds.confine_t) per_env += poisson_cap(t);
      for (double t : spec.bounds.escape_t) per_env += poisson_cap(t);
      double hit = 0.0;
      for (double t : spec.t_grid) hit += poisson_cap(t);
      return n_rep * ((n_env + static_cast<double>(spec.bounds.n_calibration)) * per_env + n_env * hit);
    }
    case ExperimentKind::prop0_validation: {
      const auto n = static_cast<double>(spec.bm.n_paths);
      const double mean_steps = spec.bm.mu / spec.bm.dt;
      return n * (mean_steps + 1.0) + 6.0 * std::sqrt(n) * mean_steps;
    }
    case ExperimentKind::cor1_convergence: return 0.0;
  }
  return 0.0;
}

ExperimentSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentSpec spec;
  Reader r(j, spec.defaults_applied);
  spec.kind = experiment_kind_from_string(r.required<std::string>("kind"));
  const bool env_kind = uses_environment(spec.kind);

  // Environment and scale.
  if (env_kind) {
    spec.env.alpha = r.required<double>("env.alpha");
    spec.env.b = r.required<double>("env.b");
  } else {
    spec.env.alpha = r.get<double>("env.alpha", 0.4);
    spec.env.b = r.get<double>("env.b", 1.0);
  }
  if (!(spec.env.alpha > 0.0 && spec.env.alpha < 0.5))
    throw ConfigError("env.alpha must lie in the open interval (0, 1/2), got " + std::to_string(spec.env.alpha));
  if (!(spec.env.b > 0.0)) throw ConfigError("env.b must be positive");
  const std::string family = r.get<std::string>("env.distribution.type", "rademacher");
  if (family == "two_point") {
    spec.env.distribution = Distribution::two_point(r.required<double>("env.distribution.p"),
                                                    r.required<double>("env.distribution.low"),
                                                    r.required<double>("env.distribution.high"));
  } else {
    const double scale = r.get<double>("env.distribution.scale", 1.0);
    if (family == "rademacher")
      spec.env.distribution = Distribution::rademacher(scale);
    else if (family == "centered_uniform")
      spec.env.distribution = Distribution::centered_uniform(scale);
    else if (family == "gaussian")
      spec.env.distribution = Distribution::gaussian(scale);
    else
      throw ConfigError("unknown disorder distribution '" + family + "'");
  }
  spec.env.distribution.validate();
  spec.env.theta0_check = r.get<double>("env.theta0_check", 1.0);
  spec.env.n_sites = r.get<std::int64_t>("env.n_sites", 0);

  spec.scale.alpha = r.get<double>("scale.alpha", spec.env.alpha);
  spec.scale.b = r.get<double>("scale.b", spec.env.b);
  spec.scale.sigma = r.get<double>("scale.sigma", spec.env.sigma());
  spec.scale.validate();

  spec.root_seed = r.get<std::uint64_t>("root_seed", 0);
  spec.output_path = r.get<std::string>("output_path", "");
  spec.budget_events = r.get<double>("budget_events", 5e11);
  spec.threads = r.get<unsigned>("threads", 0);
  if (!(spec.budget_events > 0.0)) throw ConfigError("budget_events must be positive");

  std::size_t default_envs = 200;
  std::size_t default_reps = 50;
  if (spec.kind == ExperimentKind::lemma_frequency) default_envs = 1000;
  if (spec.kind == ExperimentKind::bound_validation) default_envs = 100;
  spec.n_environments = r.get<std::size_t>("n_environments", default_envs);
  spec.n_replicas = r.get<std::size_t>("n_replicas", default_reps);
  if (spec.n_environments == 0) throw ConfigError("n_environments must be positive");
  if (spec.n_replicas == 0) throw ConfigError("n_replicas must be positive");

  spec.epsilon = r.get<double>("epsilon", 0.5);
  if (!(spec.epsilon > 0.0 && spec.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  const double lim_a = event_a_delta_limit(spec.scale.alpha, spec.epsilon);
  const double lim_c = event_c_delta_limit(spec.scale.alpha, spec.epsilon);
  spec.delta = r.get<double>("delta", 0.4 * std::min(lim_a, lim_c));
  spec.N_partition = r.get<int>("N_partition", 2);
  spec.grid_step = r.get<double>("grid_step", 1.0);
  if (!(spec.grid_step > 0.0)) throw ConfigError("grid_step must be positive");

  if (spec.kind == ExperimentKind::lemma_frequency) {
    if (!(spec.delta > 0.0)) throw ConfigError("delta must be positive");
    if (!(2.0 * spec.delta < lim_a))
      throw ConfigError("2δ < 1−(1−ε)^α required for event A (delta " + std::to_string(spec.delta) +
                        ", limit " + std::to_string(lim_a / 2.0) + ")");
    if (!(2.0 * spec.delta < lim_c))
      throw ConfigError("2δ < (1+ε/2)^α − 1 required for event C (delta " + std::to_string(spec.delta) +
                        ", limit " + std::to_string(lim_c / 2.0) + ")");
    if (spec.N_partition < 1) throw ConfigError("N_partition must be >= 1");
  }

  // Drifted-BM studies.
  spec.bm.sigma = r.get<double>("bm.sigma", spec.bm.sigma);
  spec.bm.nu = r.get<double>("bm.nu", spec.bm.nu);
  spec.bm.mu = r.get<double>("bm.mu", spec.bm.mu);
  spec.bm.levels = r.get<std::vector<double>>("bm.levels", spec.bm.levels);
  spec.bm.dt = r.get<double>("bm.dt", spec.bm.dt);
  spec.bm.n_paths = r.get<std::size_t>("bm.n_paths", spec.bm.n_paths);
  spec.bm.allowance = r.get<double>("bm.allowance", spec.bm.allowance);
  spec.bm.schedule_k = r.get<std::vector<double>>("bm.schedule_k", spec.bm.schedule_k);
  spec.bm.cor1_tolerance = r.get<double>("bm.cor1_tolerance", spec.bm.cor1_tolerance);
  if (spec.kind == ExperimentKind::prop0_validation) {
    DriftedBMParams p{spec.bm.sigma, spec.bm.nu, spec.bm.mu, 0.0};
    try {
      p.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("bm: ") + e.what());
    }
    if (!(spec.bm.dt > 0.0)) throw ConfigError("bm.dt must be positive");
    if (spec.bm.n_paths == 0) throw ConfigError("bm.n_paths must be positive");
    if (spec.bm.levels.empty()) throw ConfigError("bm.levels must not be empty");
    for (double a : spec.bm.levels)
      if (!(a >= 0.0)) throw ConfigError("bm.levels must be non-negative");
  }
  if (spec.kind == ExperimentKind::cor1_convergence) {
    if (spec.bm.schedule_k.empty()) throw ConfigError("bm.schedule_k must not be empty");
    for (double k : spec.bm.schedule_k)
      if (!(k > 0.0)) throw ConfigError("bm.schedule_k entries must be positive");
    if (!(spec.bm.sigma > 0.0)) throw ConfigError("bm.sigma must be positive");
  }

  // Bound validation.
  spec.bounds.interval_start = r.get<std::int64_t>("bounds.interval_start", spec.bounds.interval_start);
  spec.bounds.interval_length = r.get<std::int64_t>("bounds.interval_length", spec.bounds.interval_length);
  spec.bounds.n_calibration = r.get<std::size_t>("bounds.n_calibration", spec.bounds.n_calibration);
  spec.bounds.confine_t = r.get<std::vector<double>>("bounds.confine_t", spec.bounds.confine_t);
  spec.bounds.escape_t = r.get<std::vector<double>>("bounds.escape_t", spec.bounds.escape_t);
  spec.bounds.K1 = r.get<double>("bounds.K1", spec.bounds.K1);
  spec.bounds.K2 = r.get<double>("bounds.K2", spec.bounds.K2);
  spec.bounds.K3 = r.get<double>("bounds.K3", spec.bounds.K3);
  spec.bounds.use_watq = r.get<bool>("bounds.use_watq", spec.bounds.use_watq);
  spec.bounds.calibration_z = r.get<double>("bounds.calibration_z", spec.bounds.calibration_z);
  spec.bounds.hit_tolerance = r.get<double>("bounds.hit_tolerance", spec.bounds.hit_tolerance);
  if (spec.kind == ExperimentKind::bound_validation) {
    if (spec.bounds.interval_start < 0) throw ConfigError("bounds.interval_start must be >= 0");
    if (spec.bounds.interval_length < 2) throw ConfigError("bounds.interval_length must be >= 2");
    for (double t : spec.bounds.escape_t)
      if (!(t > 1.0)) throw ConfigError("bounds.escape_t entries must exceed 1");
    for (double t : spec.bounds.confine_t)
      if (!(t > 0.0)) throw ConfigError("bounds.confine_t entries must be positive");
    if (spec.bounds.K2 < 0.0 || spec.bounds.K3 < 0.0 || !(spec.bounds.K1 > 0.0))
      throw ConfigError("bound constants must be positive (0 requests calibration for K2, K3)");
    if (spec.bounds.n_calibration == 0 && (spec.bounds.K2 == 0.0 || spec.bounds.K3 == 0.0))
      throw ConfigError("calibration needs bounds.n_calibration > 0");
  }

  // Time grid.
  spec.grid_mu = r.get<double>("grid_mu", 0.1);
  if (const json* node = r.find("t_grid")) {
    if (node->is_array()) {
      spec.t_grid = node->get<std::vector<double>>();
    } else if (node->is_object()) {
      Reader g(*node, spec.defaults_applied);
      spec.grid_mu = g.get<double>("mu", spec.grid_mu);
      spec.t_grid = geometric_time_grid(spec.grid_mu, g.get<double>("t_min", 1e3), g.get<double>("t_max", 1e8));
    } else {
      throw ConfigError("t_grid must be an array or an object");
    }
  } else if (env_kind) {
    spec.defaults_applied.push_back("t_grid");
    // Paper-style grid, extended while the event estimate fits the budget.
    const auto full = geometric_time_grid(spec.grid_mu, 1e3, std::exp(std::pow(1.0 + spec.grid_mu, 40)));
    for (double t : full) {
      ExperimentSpec trial = spec;
      trial.t_grid = spec.t_grid;
      trial.t_grid.push_back(t);
      if (estimate_events(trial) > spec.budget_events) break;
      spec.t_grid = std::move(trial.t_grid);
    }
  }
  if (env_kind) {
    if (spec.t_grid.empty()) throw ConfigError("t_grid is empty (budget too small for the default grid?)");
    for (std::size_t i = 0; i < spec.t_grid.size(); ++i) {
      if (!(spec.t_grid[i] > std::exp(1.0))) throw ConfigError("t_grid entries must exceed e");
      if (i > 0 && !(spec.t_grid[i] > spec.t_grid[i - 1]))
        throw ConfigError("t_grid must be strictly increasing");
    }
  }

  // Environment length.
  if (env_kind) {
    const double s_max = scale_s(spec.scale, max_t(spec.t_grid));
    std::int64_t needed = 1;
    if (spec.kind == ExperimentKind::localization_trend)
      needed = static_cast<std::int64_t>(std::ceil(4.0 * s_max)) + 64;
    if (spec.kind == ExperimentKind::bound_validation)
      needed = std::max(static_cast<std::int64_t>((1.0 - spec.epsilon) * s_max),
                        spec.bounds.interval_start + 2 * spec.bounds.interval_length) + 64;
    if (spec.env.n_sites == 0) {
      spec.env.n_sites = needed;
    } else if (spec.kind == ExperimentKind::localization_trend && spec.env.n_sites <= 2.0 * s_max) {
      throw ConfigError("env.n_sites must exceed 2 s(t) at the largest t (" + std::to_string(2.0 * s_max) + ")");
    } else if (spec.kind == ExperimentKind::bound_validation && spec.env.n_sites < needed - 64) {
      throw ConfigError("env.n_sites too small for the bound-validation targets");
    }
    spec.env.validate();
  }
  return spec;
}

ExperimentSpec parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return spec_from_json(j);
}

ExperimentSpec parse_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

namespace {

struct Regression {
  double slope = kNaN;
  double intercept = kNaN;
  double se = kNaN;
  double ci_lo = kNaN;
  double ci_hi = kNaN;
};

Regression least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  Regression out;
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return out;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (x.size() >= 3) {
    double sse = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - out.intercept - out.slope * x[i];
      sse += e * e;
    }
    out.se = std::sqrt(sse / (n - 2.0) / sxx);
    const boost::math::students_t dist(n - 2.0);
    const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
    out.ci_lo = out.slope - q * out.se;
    out.ci_hi = out.slope + q * out.se;
  }
  return out;
}

ExperimentResult run_localization(const ExperimentSpec& spec) {
  ExperimentResult res;
  const auto& grid = spec.t_grid;
  const std::size_t n_t = grid.size();
  const std::size_t n_env = spec.n_environments;
  const std::size_t n_rep = spec.n_replicas;
  std::vector<std::vector<std::int64_t>> positions(n_env);  // [env][rep * n_t + k]
  std::vector<std::uint64_t> events(n_env, 0);

  parallel_for(n_env, spec.threads, [&](std::size_t e) {
    const std::uint64_t seed = env_seed(spec.root_seed, e);
    const Environment env = sample_environment(spec.env, seed);
    SimConfig cfg;
    cfg.t_checkpoints = grid;
    cfg.seed = walk_seed(spec.root_seed, 0, 0);
    cfg.replicas = n_rep;
    cfg.max_events = std::numeric_limits<std::uint64_t>::max();
    auto& out = positions[e];
    out.resize(n_rep * n_t);
    for (std::size_t r = 0; r < n_rep; ++r) {
      Trajectory tr;
      try {
        tr = run_trajectory(env, cfg, r);
      } catch (const std::exception& ex) {
        throw RunError(coordinate(seed, r, std::nullopt) + ex.what());
      }
      events[e] += tr.events;
      for (std::size_t k = 0; k < n_t; ++k) out[r * n_t + k] = *tr.checkpoint_positions[k];
    }
  });

  res.table.header = {"env_index", "env_seed", "replica", "t", "position", "ratio"};
  std::vector<double> s_t(n_t);
  for (std::size_t k = 0; k < n_t; ++k) s_t[k] = scale_s(spec.scale, grid[k]);
  std::vector<std::vector<double>> env_median_pos(n_t, std::vector<double>(n_env));
  for (std::size_t e = 0; e < n_env; ++e) {
    const auto seed = static_cast<std::int64_t>(env_seed(spec.root_seed, e));
    for (std::size_t r = 0; r < n_rep; ++r)
      for (std::size_t k = 0; k < n_t; ++k) {
        const std::int64_t x = positions[e][r * n_t + k];
        res.table.rows.push_back({static_cast<std::int64_t>(e), seed, static_cast<std::int64_t>(r),
                                  grid[k], x, static_cast<double>(x) / s_t[k]});
      }
    for (std::size_t k = 0; k < n_t; ++k) {
      std::vector<double> xs(n_rep);
      for (std::size_t r = 0; r < n_rep; ++r) xs[r] = static_cast<double>(positions[e][r * n_t + k]);
      env_median_pos[k][e] = median(xs);
    }
    res.events_actual += static_cast<double>(events[e]);
  }

  json per_t = json::array();
  std::vector<double> xs, ys, spreads;
  for (std::size_t k = 0; k < n_t; ++k) {
    const double t = grid[k];
    const double med = median(env_median_pos[k]);
    std::vector<double> ratios(n_env);
    for (std::size_t e = 0; e < n_env; ++e) ratios[e] = env_median_pos[k][e] / s_t[k];
    const Quartiles q = quartiles(ratios);
    const double spread = (q.q3 - q.q1) / q.median;
    spreads.push_back(spread);
    per_t.push_back({{"t", t},
                     {"s_t", s_t[k]},
                     {"median_position", med},
                     {"median_ratio", q.median},
                     {"ratio_q1", q.q1},
                     {"ratio_q3", q.q3},
                     {"relative_iqr", spread}});
    const double lt = std::log(t);
    xs.push_back(std::log(lt / std::log(lt)));
    ys.push_back(std::log(med));
  }
  const Regression fit = least_squares(xs, ys);
  const double target = 1.0 / spec.scale.alpha;
  res.summary = {{"per_t", per_t},
                 {"slope", fit.slope},
                 {"slope_se", fit.se},
                 {"slope_ci95", {fit.ci_lo, fit.ci_hi}},
                 {"intercept", fit.intercept},
                 {"target_slope", target},
                 {"slope_window", {0.7 * target, 1.3 * target}},
                 {"slope_in_window", fit.slope >= 0.7 * target && fit.slope <= 1.3 * target},
                 {"spread_first", spreads.front()},
                 {"spread_last", spreads.back()},
                 {"spread_shrinks", spreads.back() < spreads.front()}};
  return res;
}

ExperimentResult run_lemma(const ExperimentSpec& spec) {
  ExperimentResult res;
  const auto& grid = spec.t_grid;
  const std::size_t n_t = grid.size();
  const std::size_t n_paths = spec.n_environments;
  double length = 0.0;
  for (double t : grid) length = std::max(length, events_required_length(spec.scale, t, spec.epsilon));
  length += spec.grid_step;

  // flags[path][k] bit 0..3 = A, B, C, G
  std::vector<std::vector<unsigned char>> flags(n_paths, std::vector<unsigned char>(n_t));
  parallel_for(n_paths, spec.threads, [&](std::size_t i) {
    const std::uint64_t seed = path_seed(spec.root_seed, i);
    const PotentialPath path =
        sample_potential_path(spec.scale.sigma, spec.scale.b, spec.scale.alpha, length, spec.grid_step, seed);
    for (std::size_t k = 0; k < n_t; ++k) {
      const double t = grid[k];
      unsigned char f = 0;
      f |= check_event_A(path, spec.scale, t, spec.epsilon, spec.delta) ? 1 : 0;
      f |= check_event_B(path, spec.scale, t, spec.epsilon, spec.delta, spec.N_partition) ? 2 : 0;
      f |= check_event_C(path, spec.scale, t, spec.epsilon, spec.delta, spec.N_partition) ? 4 : 0;
      f |= check_event_G(path, spec.scale, t) ? 8 : 0;
      flags[i][k] = f;
    }
  });
  res.events_actual = static_cast<double>(n_paths) * std::ceil(length / spec.grid_step - 1e-9);

  res.table.header = {"path_index", "path_seed", "t", "event_A", "event_B", "event_C", "event_G"};
  for (std::size_t i = 0; i < n_paths; ++i)
    for (std::size_t k = 0; k < n_t; ++k) {
      const unsigned char f = flags[i][k];
      res.table.rows.push_back({static_cast<std::int64_t>(i),
                                static_cast<std::int64_t>(path_seed(spec.root_seed, i)), grid[k],
                                std::int64_t{f & 1}, std::int64_t{(f >> 1) & 1},
                                std::int64_t{(f >> 2) & 1}, std::int64_t{(f >> 3) & 1}});
    }

  const char* names[] = {"A", "B", "C", "G"};
  json events = json::object();
  for (int ev = 0; ev < 4; ++ev) {
    json rows = json::array();
    std::vector<Frequency> freqs(n_t);
    for (std::size_t k = 0; k < n_t; ++k) {
      freqs[k].trials = n_paths;
      for (std::size_t i = 0; i < n_paths; ++i) freqs[k].hits += (flags[i][k] >> ev) & 1;
      json row = frequency_json(freqs[k]);
      row["t"] = grid[k];
      rows.push_back(row);
    }
    bool monotone = true;
    for (std::size_t k = 1; k < n_t; ++k) {
      const double tol = 2.0 * std::hypot(freqs[k].se(), freqs[k - 1].se());
      if (freqs[k].value() < freqs[k - 1].value() - tol) monotone = false;
    }
    events[names[ev]] = {{"per_t", rows}, {"nondecreasing_within_2se", monotone}};
  }
  json scales = json::array();
  for (double t : grid)
    scales.push_back({{"t", t}, {"s_t", scale_s(spec.scale, t)}, {"log_t", std::log(t)}});
  res.summary = {{"events", events},
                 {"scales", scales},
                 {"delta", spec.delta},
                 {"delta_limit_event_A", event_a_delta_limit(spec.scale.alpha, spec.epsilon) / 2.0},
                 {"delta_limit_event_C", event_c_delta_limit(spec.scale.alpha, spec.epsilon) / 2.0},
                 {"N_partition", spec.N_partition}};
  return res;
}

struct BoundObservation {
  int study = 0;  // 0 confine, 1 escape, 2 hit
  std::int64_t a = 0, c = 0, x = 0;
  double t = 0.0;
  double log_scale = 0.0;  // K-free part of the bound
  Frequency freq;
};

struct EnvBoundData {
  std::uint64_t seed = 0;
  std::vector<BoundObservation> obs;
  std::uint64_t events = 0;
};

ExperimentResult run_bounds(const ExperimentSpec& spec) {
  ExperimentResult res;
  const auto& bs = spec.bounds;
  const std::size_t n_cal = bs.n_calibration;
  const std::size_t n_val = spec.n_environments;
  const std::size_t n_rep = spec.n_replicas;

  auto study_env = [&](std::uint64_t seed, bool validation) {
    EnvBoundData d;
    d.seed = seed;
    const Environment env = sample_environment(spec.env, seed);
    const Eigen::VectorXd& U = env.potential();
    Eigen::Index arg = 0;
    U.segment(bs.interval_start, bs.interval_length + 1).minCoeff(&arg);
    const std::int64_t a = bs.interval_start + arg;
    const std::int64_t c = a + bs.interval_length;
    U.segment(a + 1, c - a - 1).minCoeff(&arg);
    const std::int64_t x = a + 1 + arg;
    std::uint64_t slot = 0;
    for (double t : bs.confine_t) {
      BoundObservation o{0, a, c, x, t, confinement_log_scale(env, a, c, 1.0), {}};
      try {
        o.freq = mc_confinement(env, a, c, x, t, n_rep, walk_seed(spec.root_seed, 1, slot++), 1, &d.events);
      } catch (const std::exception& ex) {
        throw RunError(coordinate(seed, std::nullopt, t) + ex.what());
      }
      d.obs.push_back(o);
    }
    for (double t : bs.escape_t) {
      const BoundParams unit{bs.K1, 1.0, 1.0};
      const double log_ratio = escape_bound(env, a, c, t, unit, bs.use_watq).log_value - std::log(t);
      BoundObservation o{1, a, c, a, t, log_ratio, {}};
      try {
        o.freq = mc_hit_cdf(env, c, t, n_rep, walk_seed(spec.root_seed, 2, slot++), a, 1,
                            HitConvention::at_start, &d.events);
      } catch (const std::exception& ex) {
        throw RunError(coordinate(seed, std::nullopt, t) + ex.what());
      }
      d.obs.push_back(o);
    }
    if (validation) {
      for (double t : spec.t_grid) {
        const auto target = static_cast<std::int64_t>(std::floor((1.0 - spec.epsilon) * scale_s(spec.scale, t)));
        BoundObservation o{2, 0, target, 0, t, 0.0, {}};
        try {
          const Frequency hit = mc_hit_cdf(env, target, t, n_rep, walk_seed(spec.root_seed, 3, slot++), 0, 1,
                                           HitConvention::at_start, &d.events);
          o.freq.trials = hit.trials;
          o.freq.hits = hit.trials - hit.hits;  // tau > t
        } catch (const std::exception& ex) {
          throw RunError(coordinate(seed, std::nullopt, t) + ex.what());
        }
        d.obs.push_back(o);
      }
    }
    return d;
  };

  std::vector<EnvBoundData> cal(n_cal), val(n_val);
  parallel_for(n_cal, spec.threads,
               [&](std::size_t i) { cal[i] = study_env(env_seed(spec.root_seed, i, 1), false); });
  parallel_for(n_val, spec.threads,
               [&](std::size_t i) { val[i] = study_env(env_seed(spec.root_seed, i, 0), true); });

  BoundParams constants{bs.K1, bs.K2, bs.K3};
  std::vector<CalibrationPoint> conf_pts, esc_pts;
  for (const auto& d : cal) {
    res.events_actual += static_cast<double>(d.events);
    for (const auto& o : d.obs) {
      const CalibrationPoint p{o.t, o.log_scale, o.freq.upper(bs.calibration_z)};
      (o.study == 0 ? conf_pts : esc_pts).push_back(p);
    }
  }
  if (bs.K2 == 0.0) constants.K2 = calibrate_k2(conf_pts);
  if (bs.K3 == 0.0) constants.K3 = calibrate_k3(esc_pts);

  res.table.header = {"set", "study", "env_index", "env_seed", "a", "c", "x", "t",
                      "applicable", "bound", "frequency", "se"};
  const char* study_names[] = {"confine", "escape", "hit"};
  std::size_t applicable[2] = {0, 0}, violations[2] = {0, 0};
  double max_excess[2] = {-1.0, -1.0};
  std::vector<Frequency> hit_pooled(spec.t_grid.size());
  std::vector<double> hit_worst(spec.t_grid.size(), 0.0);

  auto emit = [&](const char* set, std::size_t idx, const EnvBoundData& d, bool validation) {
    std::size_t hit_k = 0;
    for (const auto& o : d.obs) {
      Cell applicable_cell, bound_cell;
      if (o.study == 0) {
        const double log_time = std::log(constants.K2) + o.log_scale;
        const bool ok = std::log(o.t) > log_time;
        const double bound = std::exp(-std::exp(std::log(o.t) - log_time));
        applicable_cell = std::int64_t{ok};
        bound_cell = bound;
        if (validation && ok) {
          ++applicable[0];
          max_excess[0] = std::max(max_excess[0], o.freq.value() - bound);
          if (o.freq.value() > bound) ++violations[0];
        }
      } else if (o.study == 1) {
        const double log_bound = std::log(constants.K3) + std::log(o.t) + o.log_scale;
        const double bound = log_bound >= 0.0 ? 1.0 : std::exp(log_bound);
        applicable_cell = std::int64_t{1};
        bound_cell = bound;
        if (validation) {
          ++applicable[1];
          max_excess[1] = std::max(max_excess[1], o.freq.value() - bound);
          if (o.freq.value() > bound) ++violations[1];
        }
      } else {
        hit_pooled[hit_k].trials += o.freq.trials;
        hit_pooled[hit_k].hits += o.freq.hits;
        hit_worst[hit_k] = std::max(hit_worst[hit_k], o.freq.value());
        ++hit_k;
      }
      res.table.rows.push_back({std::string(set), std::string(study_names[o.study]),
                                static_cast<std::int64_t>(idx), static_cast<std::int64_t>(d.seed), o.a,
                                o.c, o.x, o.t, applicable_cell, bound_cell, o.freq.value(), o.freq.se()});
    }
  };
  for (std::size_t i = 0; i < n_cal; ++i) emit("calibration", i, cal[i], false);
  for (std::size_t i = 0; i < n_val; ++i) {
    emit("validation", i, val[i], true);
    res.events_actual += static_cast<double>(val[i].events);
  }

  json hit = json::array();
  bool hit_ok = true;
  for (std::size_t k = 0; k < spec.t_grid.size(); ++k) {
    const double t = spec.t_grid[k];
    json row = frequency_json(hit_pooled[k]);
    row["t"] = t;
    row["target"] = std::floor((1.0 - spec.epsilon) * scale_s(spec.scale, t));
    row["worst_environment_frequency"] = hit_worst[k];
    row["within_tolerance"] = hit_pooled[k].value() <= bs.hit_tolerance;
    hit_ok = hit_ok && hit_pooled[k].value() <= bs.hit_tolerance;
    hit.push_back(row);
  }
  res.summary = {{"K1", constants.K1},
                 {"K2", constants.K2},
                 {"K3", constants.K3},
                 {"K2_calibrated", bs.K2 == 0.0},
                 {"K3_calibrated", bs.K3 == 0.0},
                 {"confine", {{"applicable", applicable[0]}, {"violations", violations[0]}, {"max_excess", max_excess[0]}}},
                 {"escape", {{"checked", applicable[1]}, {"violations", violations[1]}, {"max_excess", max_excess[1]}}},
                 {"hitting", {{"per_t", hit}, {"all_within_tolerance", hit_ok}}},
                 {"bounds_hold", violations[0] == 0 && violations[1] == 0}};
  return res;
}

ExperimentResult run_prop0(const ExperimentSpec& spec) {
  ExperimentResult res;
  const auto& bm = spec.bm;
  std::uint64_t steps = 0;
  const DriftedBMParams base{bm.sigma, bm.nu, bm.mu, 0.0};
  const auto mc = mc_drawup_survival_levels(base, bm.levels, bm.dt, bm.n_paths,
                                            walk_seed(spec.root_seed, 4, 0), spec.threads, &steps);
  res.events_actual = static_cast<double>(steps);
  res.table.header = {"a", "sigma", "nu", "mu", "exact", "asymptotic", "mc_estimate", "mc_se", "dt", "n_paths"};
  json levels = json::array();
  bool all_ok = true;
  for (std::size_t j = 0; j < bm.levels.size(); ++j) {
    DriftedBMParams p = base;
    p.a = bm.levels[j];
    const double exact = prop0_survival(p);
    const Cell asym = p.nu < 0.0 ? Cell{cor1_asymptotic(p)} : Cell{};
    const double est = mc[j].value();
    const double se = mc[j].se();
    res.table.rows.push_back({p.a, p.sigma, p.nu, p.mu, exact, asym, est, se, bm.dt,
                              static_cast<std::int64_t>(bm.n_paths)});
    const bool close = std::abs(exact - est) <= 3.0 * se + bm.allowance;
    const bool one_sided = est <= exact + 3.0 * se;
    all_ok = all_ok && close && one_sided;
    levels.push_back({{"a", p.a}, {"exact", exact}, {"mc_estimate", est}, {"mc_se", se},
                      {"within_tolerance", close}, {"below_exact_plus_3se", one_sided}});
  }
  res.summary = {{"levels", levels}, {"all_pass", all_ok}, {"allowance", bm.allowance}};
  return res;
}

ExperimentResult run_cor1(const ExperimentSpec& spec) {
  ExperimentResult res;
  res.table.header = {"k", "a", "nu", "mu", "sigma", "exact", "asymptotic", "rel_error"};
  std::vector<double> errs;
  for (double k : spec.bm.schedule_k) {
    const DriftedBMParams p{spec.bm.sigma, -k, k * k * k, k};
    const double exact = prop0_survival(p);
    const double asym = cor1_asymptotic(p);
    const double err = std::abs(exact / asym - 1.0);
    errs.push_back(err);
    res.table.rows.push_back({k, p.a, p.nu, p.mu, p.sigma, exact, asym, err});
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < errs.size(); ++i) decreasing = decreasing && errs[i] < errs[i - 1];
  res.summary = {{"rel_errors", errs},
                 {"monotone_decreasing", decreasing},
                 {"final_rel_error", errs.back()},
                 {"tolerance", spec.bm.cor1_tolerance},
                 {"final_within_tolerance", errs.back() <= spec.bm.cor1_tolerance}};
  return res;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const double estimate = estimate_events(spec);
  if (estimate > spec.budget_events) {
    std::ostringstream os;
    os << "estimated " << estimate << " events exceeds the budget of " << spec.budget_events;
    throw BudgetError(os.str(), estimate);
  }
  ExperimentResult res;
  switch (spec.kind) {
    case ExperimentKind::localization_trend: res = run_localization(spec); break;
    case ExperimentKind::lemma_frequency: res = run_lemma(spec); break;
    case ExperimentKind::bound_validation: res = run_bounds(spec); break;
    case ExperimentKind::prop0_validation: res = run_prop0(spec); break;
    case ExperimentKind::cor1_convergence: res = run_cor1(spec); break;
  }
  res.events_estimate = estimate;
  res.provenance = {{"tool", "rwre"},
                    {"version", kToolVersion},
                    {"spec", spec.to_json()},
                    {"defaults_applied", spec.defaults_applied},
                    {"root_seed", spec.root_seed},
                    {"seed_derivation", "environment/path/walk streams are SplitMix64 keys of (root_seed, index)"},
                    {"design_origin", "study designed by this toolkit"}};
  return res;
}

std::string summary_path_for(const std::string& csv_path) {
  const std::string ext = ".csv";
  if (csv_path.size() >= ext.size() && csv_path.compare(csv_path.size() - ext.size(), ext.size(), ext) == 0)
    return csv_path.substr(0, csv_path.size() - ext.size()) + ".summary.json";
  return csv_path + ".summary.json";
}

std::string emit_report(const ExperimentResult& result, const std::string& path) {
  write_csv(path, result.table);
  json doc = {{"summary", result.summary},
              {"provenance", result.provenance},
              {"events", {{"estimate", result.events_estimate}, {"actual", result.events_actual}}},
              {"rows", result.table.rows.size()},
              {"no_data", result.table.empty()}};
  const std::string summary = summary_path_for(path);
  std::ofstream os(summary, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + summary + "' for writing");
  os << doc.dump(2) << '\n';
  if (!os) throw std::runtime_error("write to '" + summary + "' failed");
  return summary;
}

}  // namespace rwre
