// rwre: command-line front end for the environment, walk and draw-up tools.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rwre/bmlaw.hpp"
#include "rwre/csv.hpp"
#include "rwre/environment.hpp"
#include "rwre/errors.hpp"
#include "rwre/exactsolve.hpp"
#include "rwre/experiment.hpp"
#include "rwre/pathfunc.hpp"
#include "rwre/simulate.hpp"

using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kBudget = 3, kRuntime = 4 };

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw rwre::ConfigError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw rwre::ConfigError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << text;
}

void write_table(const std::string& path, const rwre::Table& table) {
  if (path.empty() || path == "-")
    rwre::write_csv(std::cout, table);
  else
    rwre::write_csv(path, table);
}

rwre::Environment load_environment(const std::string& path) {
  try {
    return rwre::Environment::from_json(read_json(path));
  } catch (const json::exception& e) {
    throw rwre::ConfigError(path + ": " + e.what());
  }
}

std::vector<double> read_values(const std::string& path) {
  std::ifstream file;
  std::istream* is = &std::cin;
  if (!path.empty() && path != "-") {
    file.open(path);
    if (!file) throw rwre::ConfigError("cannot open '" + path + "'");
    is = &file;
  }
  std::vector<double> out;
  for (const auto& row : rwre::read_csv(*is)) {
    if (row.empty() || row[0].empty()) continue;
    try {
      out.push_back(std::stod(row.back()));
    } catch (const std::exception&) {
      if (!out.empty()) throw rwre::ConfigError("non-numeric value '" + row.back() + "'");
      // a header line is allowed
    }
  }
  return out;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 0;
  std::optional<double> budget;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON configuration file");
  sub->add_option("--seed", c.seed, "root seed (u64)");
  sub->add_option("--out", c.out, "output path ('-' or empty: stdout)");
  sub->add_option("--threads", c.threads, "worker threads (0: all cores)");
  sub->add_option("--budget-events", c.budget, "refuse runs estimated above this event count");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walk in a random environment with power-law drift"};
  app.set_version_flag("--version", rwre::kToolVersion);
  app.require_subcommand(1);

  // gen-env
  Common gen;
  double gen_alpha = 0.25, gen_b = 1.0, gen_scale = 1.0;
  std::int64_t gen_sites = 1000;
  std::string gen_dist = "rademacher";
  bool gen_disorder = false;
  auto* gen_cmd = app.add_subcommand("gen-env", "sample an environment and write it as JSON");
  add_common(gen_cmd, gen);
  gen_cmd->add_option("--alpha", gen_alpha, "drift exponent in (0, 1/2)");
  gen_cmd->add_option("--b", gen_b, "drift strength");
  gen_cmd->add_option("--n-sites", gen_sites, "number of sites");
  gen_cmd->add_option("--distribution", gen_dist, "rademacher | centered_uniform | gaussian");
  gen_cmd->add_option("--scale", gen_scale, "disorder scale");
  gen_cmd->add_flag("--include-disorder", gen_disorder, "store the sampled disorder");

  // simulate
  Common sim;
  std::string sim_env;
  std::vector<double> sim_t;
  std::size_t sim_replicas = 1;
  std::int64_t sim_start = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "positions X_t over replicas");
  add_common(sim_cmd, sim);
  sim_cmd->add_option("--env", sim_env, "environment JSON from gen-env")->required();
  sim_cmd->add_option("--t", sim_t, "checkpoint times")->required();
  sim_cmd->add_option("--replicas", sim_replicas, "number of replicas");
  sim_cmd->add_option("--start", sim_start, "starting site");

  // hitting
  Common hit;
  std::string hit_env;
  std::int64_t hit_a = 0, hit_x = 0, hit_c = 1;
  std::vector<double> hit_t;
  double hit_k1 = 1.0, hit_k2 = 1.0, hit_k3 = 1.0;
  bool hit_watq = false;
  auto* hit_cmd = app.add_subcommand("hitting", "exact hitting quantities and bounds");
  add_common(hit_cmd, hit);
  hit_cmd->add_option("--env", hit_env, "environment JSON from gen-env")->required();
  hit_cmd->add_option("--a", hit_a, "left end");
  hit_cmd->add_option("--x", hit_x, "starting site");
  hit_cmd->add_option("--c", hit_c, "right end");
  hit_cmd->add_option("--t", hit_t, "times at which to evaluate the bounds");
  hit_cmd->add_option("--K1", hit_k1);
  hit_cmd->add_option("--K2", hit_k2);
  hit_cmd->add_option("--K3", hit_k3);
  hit_cmd->add_flag("--watq", hit_watq, "use the coarser escape bound");

  // drawstats
  Common draw;
  std::string draw_input;
  double draw_alpha = 0.4, draw_b = 1.0, draw_sigma = 1.0, draw_length = 0.0, draw_step = 1.0;
  auto* draw_cmd = app.add_subcommand("drawstats", "draw-up / draw-down of a sequence or a sampled V path");
  add_common(draw_cmd, draw);
  draw_cmd->add_option("--input", draw_input, "CSV or one value per line ('-': stdin)");
  draw_cmd->add_option("--alpha", draw_alpha);
  draw_cmd->add_option("--b", draw_b);
  draw_cmd->add_option("--sigma", draw_sigma);
  draw_cmd->add_option("--length", draw_length, "sample V on [0, length] instead of reading input");
  draw_cmd->add_option("--grid-step", draw_step);

  // bmlaw
  Common bm;
  double bm_sigma = 1.0, bm_nu = -0.5, bm_mu = 20.0, bm_dt = 1e-4;
  std::vector<double> bm_a{1.0};
  std::size_t bm_paths = 0;
  auto* bm_cmd = app.add_subcommand("bmlaw", "draw-up law of drifted BM at an exponential time");
  add_common(bm_cmd, bm);
  bm_cmd->add_option("--sigma", bm_sigma);
  bm_cmd->add_option("--nu", bm_nu);
  bm_cmd->add_option("--mu", bm_mu);
  bm_cmd->add_option("--a", bm_a, "levels");
  bm_cmd->add_option("--dt", bm_dt);
  bm_cmd->add_option("--paths", bm_paths, "Monte Carlo paths (0: closed forms only)");

  // experiment
  Common exp;
  bool exp_dry = false;
  auto* exp_cmd = app.add_subcommand("experiment", "run a configured study");
  add_common(exp_cmd, exp);
  exp_cmd->add_flag("--dry-run", exp_dry, "validate and print the resolved spec and estimate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*gen_cmd) {
      rwre::EnvSpec spec;
      if (!gen.config.empty()) {
        spec = rwre::env_spec_from_json(read_json(gen.config));
      } else {
        spec.alpha = gen_alpha;
        spec.b = gen_b;
        spec.n_sites = gen_sites;
        if (gen_dist == "rademacher")
          spec.distribution = rwre::Distribution::rademacher(gen_scale);
        else if (gen_dist == "centered_uniform")
          spec.distribution = rwre::Distribution::centered_uniform(gen_scale);
        else if (gen_dist == "gaussian")
          spec.distribution = rwre::Distribution::gaussian(gen_scale);
        else
          throw rwre::ConfigError("unknown distribution '" + gen_dist + "'");
      }
      const auto env = rwre::sample_environment(spec, gen.seed.value_or(0));
      write_text(gen.out, env.to_json(gen_disorder).dump(2) + "\n");
    } else if (*sim_cmd) {
      const auto env = load_environment(sim_env);
      rwre::SimConfig cfg;
      cfg.t_checkpoints = sim_t;
      cfg.seed = sim.seed.value_or(0);
      cfg.replicas = sim_replicas;
      cfg.start = sim_start;
      cfg.max_events = std::numeric_limits<std::uint64_t>::max();
      double estimate = 0.0;
      for (double t : sim_t) estimate = std::max(estimate, t + 6.0 * std::sqrt(t) + 10.0);
      estimate *= static_cast<double>(sim_replicas);
      if (sim.budget && estimate > *sim.budget)
        throw rwre::BudgetError("estimated " + std::to_string(estimate) + " events exceeds the budget",
                                estimate);
      rwre::Table table;
      table.header = {"replica", "t", "position"};
      for (std::size_t r = 0; r < sim_replicas; ++r) {
        const auto tr = rwre::run_trajectory(env, cfg, r);
        for (std::size_t k = 0; k < sim_t.size(); ++k)
          table.rows.push_back({static_cast<std::int64_t>(r), sim_t[k], *tr.checkpoint_positions[k]});
      }
      write_table(sim.out, table);
    } else if (*hit_cmd) {
      const auto env = load_environment(hit_env);
      const auto eh = rwre::expected_hit(env, hit_x, hit_c);
      json out = {{"a", hit_a},
                  {"x", hit_x},
                  {"c", hit_c},
                  {"ruin_prob", rwre::ruin_prob(env, hit_a, hit_x, hit_c)},
                  {"log_expected_hit", eh.log_value},
                  {"expected_hit", eh.value ? json(*eh.value) : json(nullptr)},
                  {"barrier_site", rwre::barrier_site(env, hit_a, hit_c)}};
      const rwre::BoundParams params{hit_k1, hit_k2, hit_k3};
      json bounds = json::array();
      for (double t : hit_t) {
        json row = {{"t", t}};
        if (hit_a < hit_x && hit_x < hit_c) {
          const auto cb = rwre::confinement_bound(env, hit_a, hit_c, hit_x, t, params);
          row["confinement"] = {{"applicable", cb.applicable}, {"bound", cb.reported()}};
        }
        const auto eb = rwre::escape_bound(env, hit_a, hit_c, t, params, hit_watq);
        row["escape"] = {{"applicable", eb.applicable}, {"bound", eb.reported()}};
        bounds.push_back(row);
      }
      out["bounds"] = bounds;
      write_text(hit.out, out.dump(2) + "\n");
    } else if (*draw_cmd) {
      Eigen::VectorXd values;
      if (draw_length > 0.0) {
        values = rwre::sample_potential_path(draw_sigma, draw_b, draw_alpha, draw_length, draw_step,
                                             draw.seed.value_or(0))
                     .values;
      } else {
        const auto v = read_values(draw_input);
        if (v.empty()) throw rwre::ConfigError("drawstats: no values");
        values = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      const auto st = rwre::interval_stats(values);
      const json out = {{"n", values.size()},
                        {"drawup", st.drawup},
                        {"drawdown", st.drawdown},
                        {"barrier", st.barrier()},
                        {"argmax_index", st.argmax_index},
                        {"max", st.range_max}};
      write_text(draw.out, out.dump(2) + "\n");
    } else if (*bm_cmd) {
      rwre::Table table;
      table.header = {"a", "sigma", "nu", "mu", "exact", "asymptotic", "mc_estimate", "mc_se", "dt", "n_paths"};
      const rwre::DriftedBMParams base{bm_sigma, bm_nu, bm_mu, 0.0};
      std::vector<rwre::Frequency> mc;
      if (bm_paths > 0) {
        const double estimate = static_cast<double>(bm_paths) * (bm_mu / bm_dt + 1.0) +
                                6.0 * std::sqrt(static_cast<double>(bm_paths)) * bm_mu / bm_dt;
        if (bm.budget && estimate > *bm.budget)
          throw rwre::BudgetError("estimated " + std::to_string(estimate) + " steps exceeds the budget",
                                  estimate);
        mc = rwre::mc_drawup_survival_levels(base, bm_a, bm_dt, bm_paths, bm.seed.value_or(0), bm.threads);
      }
      for (std::size_t j = 0; j < bm_a.size(); ++j) {
        auto p = base;
        p.a = bm_a[j];
        const rwre::Cell asym = p.nu < 0.0 ? rwre::Cell{rwre::cor1_asymptotic(p)} : rwre::Cell{};
        rwre::Cell est, se;
        if (!mc.empty()) {
          est = mc[j].value();
          se = mc[j].se();
        }
        table.rows.push_back({p.a, p.sigma, p.nu, p.mu, rwre::prop0_survival(p), asym, est, se, bm_dt,
                              static_cast<std::int64_t>(bm_paths)});
      }
      write_table(bm.out, table);
    } else if (*exp_cmd) {
      if (exp.config.empty()) throw rwre::ConfigError("experiment: --config is required");
      json j = read_json(exp.config);
      if (exp.seed) j["root_seed"] = *exp.seed;
      if (exp.threads) j["threads"] = exp.threads;
      if (exp.budget) j["budget_events"] = *exp.budget;
      if (!exp.out.empty()) j["output_path"] = exp.out;
      const auto spec = rwre::spec_from_json(j);
      const double estimate = rwre::estimate_events(spec);
      std::cerr << "estimated events: " << estimate << "\n";
      if (exp_dry) {
        std::cout << json({{"spec", spec.to_json()}, {"defaults_applied", spec.defaults_applied},
                           {"estimated_events", estimate}})
                         .dump(2)
                  << "\n";
        return kOk;
      }
      if (spec.output_path.empty()) throw rwre::ConfigError("experiment: no output path (--out or output_path)");
      const auto result = rwre::run_experiment(spec);
      const auto summary = rwre::emit_report(result, spec.output_path);
      std::cerr << "wrote " << spec.output_path << " and " << summary << "\n";
    }
  } catch (const rwre::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const rwre::BudgetError& e) {
    std::cerr << "budget refusal: " << e.what() << "\n";
    return kBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
