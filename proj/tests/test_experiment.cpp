#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"

#include "rwre/errors.hpp"
#include "rwre/experiment.hpp"

using namespace rwre;
using nlohmann::json;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "rwre_experiment_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

json small_localization() {
  return {{"kind", "localization_trend"},
          {"env", {{"alpha", 0.4}, {"b", 1.0}}},
          {"t_grid", {1e3, 3e3, 1e4}},
          {"n_environments", 6},
          {"n_replicas", 5},
          {"root_seed", 99}};
}

}  // namespace

TEST_CASE("config errors name the problem") {
  CHECK(config_error(R"({"kind": "localization_trend", "env": {"b": 1}})").find("'env.alpha'") != std::string::npos);
  CHECK(config_error(R"({"kind": "localization_trend", "env": {"alpha": 0.5, "b": 1}})").find("open interval (0, 1/2)") !=
        std::string::npos);
  const auto parse = config_error("{\n  \"kind\": \"lemma_frequency\",\n  \"env\": {alpha: 1}\n}");
  CHECK(parse.find("line 3") != std::string::npos);
  CHECK(parse.find("column") != std::string::npos);
  const auto event_a = config_error(
      R"({"kind": "lemma_frequency", "env": {"alpha": 0.4, "b": 1}, "epsilon": 0.5, "delta": 0.2, "t_grid": [1e6]})");
  CHECK(event_a.find("2δ < 1−(1−ε)^α required for event A") != std::string::npos);
  const auto event_c = config_error(
      R"({"kind": "lemma_frequency", "env": {"alpha": 0.4, "b": 1}, "epsilon": 0.5, "delta": 0.05, "t_grid": [1e6]})");
  CHECK(event_c.find("required for event C") != std::string::npos);
  CHECK(config_error(R"({"kind": "nope"})").find("unknown experiment kind") != std::string::npos);
  CHECK(config_error(R"({"kind": "localization_trend", "env": {"alpha": 0.4, "b": 1}, "t_grid": [1e4, 1e3]})")
            .find("increasing") != std::string::npos);
  CHECK(config_error(R"({"kind": "localization_trend", "env": {"alpha": 0.4, "b": 1,
                         "distribution": {"type": "rademacher", "scale": 0}}})")
            .find("Condition S") != std::string::npos);
  CHECK(config_error(R"({"kind": "localization_trend", "env": {"alpha": "x", "b": 1}})").find("env.alpha") !=
        std::string::npos);
  CHECK(config_error(R"({"kind": "localization_trend", "env": {"alpha": 0.4, "b": 1, "n_sites": 100},
                         "t_grid": [1e4]})")
            .find("2 s(t)") != std::string::npos);
}

TEST_CASE("minimal config records every default") {
  const auto spec = parse_config_text(R"({"kind": "localization_trend", "env": {"alpha": 0.4, "b": 1}})");
  const auto& d = spec.defaults_applied;
  for (const char* key : {"n_environments", "n_replicas", "root_seed", "t_grid", "env.n_sites", "env.distribution.type"})
    CHECK(std::find(d.begin(), d.end(), key) != d.end());
  CHECK(spec.n_environments == 200);
  CHECK(spec.n_replicas == 50);
  CHECK(spec.t_grid.size() >= 2);
  CHECK(estimate_events(spec) <= spec.budget_events);
  for (std::size_t i = 0; i < spec.t_grid.size(); ++i) {
    const double n = std::log(std::log(spec.t_grid[i])) / std::log(1.1);
    CHECK(std::abs(n - std::round(n)) < 1e-9);
  }
  CHECK(spec.env.n_sites > 2.0 * scale_s(spec.scale, spec.t_grid.back()));
  const auto lemma = parse_config_text(R"({"kind": "lemma_frequency", "env": {"alpha": 0.4, "b": 1}, "t_grid": [1e6]})");
  CHECK(2.0 * lemma.delta < event_a_delta_limit(0.4, 0.5));
  CHECK(2.0 * lemma.delta < event_c_delta_limit(0.4, 0.5));
  CHECK(lemma.n_environments == 1000);
}

TEST_CASE("geometric time grid") {
  const auto g = geometric_time_grid(0.1, 1e3, 1e8);
  REQUIRE(!g.empty());
  CHECK(g.front() >= 1e3);
  CHECK(g.back() <= 1e8);
  for (std::size_t i = 1; i < g.size(); ++i)
    CHECK(std::log(std::log(g[i])) - std::log(std::log(g[i - 1])) == doctest::Approx(std::log(1.1)));
  const auto obj = parse_config_text(
      R"({"kind": "localization_trend", "env": {"alpha": 0.4, "b": 1}, "t_grid": {"mu": 0.2, "t_min": 1e3, "t_max": 1e5}})");
  CHECK(obj.t_grid == geometric_time_grid(0.2, 1e3, 1e5));
}

TEST_CASE("budget refusal carries the estimate") {
  auto j = small_localization();
  j["budget_events"] = 10.0;
  const auto spec = spec_from_json(j);
  try {
    run_experiment(spec);
    FAIL("expected a budget refusal");
  } catch (const BudgetError& e) {
    CHECK(e.estimate() == doctest::Approx(estimate_events(spec)));
  }
}

TEST_CASE("localization study is deterministic across thread counts") {
  auto j = small_localization();
  j["threads"] = 1;
  const auto r1 = run_experiment(spec_from_json(j));
  j["threads"] = 3;
  const auto r3 = run_experiment(spec_from_json(j));
  const auto p1 = scratch("loc1.csv"), p3 = scratch("loc3.csv");
  emit_report(r1, p1.string());
  const auto summary = emit_report(r3, p3.string());
  CHECK(slurp(p1) == slurp(p3));
  CHECK(r1.table.rows.size() == 6 * 5 * 3);
  CHECK(r1.summary.contains("slope"));
  CHECK(r1.summary.contains("slope_ci95"));
  CHECK(r1.events_actual <= 1.01 * r1.events_estimate);
  const auto doc = json::parse(slurp(summary));
  CHECK(doc["summary"].contains("slope"));
  CHECK(doc["provenance"]["spec"]["root_seed"] == 99);
  CHECK(doc["provenance"]["version"] == kToolVersion);
  CHECK(doc["no_data"] == false);
}

TEST_CASE("module errors carry the environment coordinate") {
  auto spec = spec_from_json(small_localization());
  spec.env.n_sites = 30;  // far too short; bypasses config validation on purpose
  try {
    run_experiment(spec);
    FAIL("expected a run error");
  } catch (const RunError& e) {
    const std::string what = e.what();
    CHECK(what.find("env seed") != std::string::npos);
    CHECK(what.find("replica") != std::string::npos);
    CHECK(what.find("right-edge") != std::string::npos);
  }
}

TEST_CASE("lemma frequency study") {
  const auto spec = parse_config_text(R"({"kind": "lemma_frequency", "env": {"alpha": 0.4, "b": 1},
      "t_grid": [1e4, 1e5], "n_environments": 40, "root_seed": 5})");
  const auto r = run_experiment(spec);
  CHECK(r.table.rows.size() == 80);
  CHECK(r.summary["events"]["G"]["per_t"].size() == 2);
  CHECK(r.summary["events"]["A"]["per_t"][0]["trials"] == 40);
  CHECK(r.events_actual <= 1.01 * r.events_estimate);
  const auto again = run_experiment(spec);
  std::ostringstream a, b;
  write_csv(a, r.table);
  write_csv(b, again.table);
  CHECK(a.str() == b.str());
}

TEST_CASE("bound validation study") {
  const auto spec = parse_config_text(R"({"kind": "bound_validation", "env": {"alpha": 0.4, "b": 1},
      "t_grid": [1e4], "n_environments": 5, "n_replicas": 20, "root_seed": 8,
      "bounds": {"n_calibration": 5, "confine_t": [200, 2000], "escape_t": [10, 100]}})");
  const auto r = run_experiment(spec);
  CHECK(r.summary["K2_calibrated"] == true);
  CHECK(r.summary["K2"].get<double>() > 0.0);
  CHECK(r.summary["K3"].get<double>() > 0.0);
  CHECK(r.summary.contains("bounds_hold"));
  CHECK(r.summary["hitting"]["per_t"].size() == 1);
  CHECK(r.table.rows.size() == 5 * 4 + 5 * 5);
  CHECK(r.events_actual <= 1.01 * r.events_estimate);
  // calibration and validation environments never share seeds
  std::set<std::int64_t> cal, val;
  for (const auto& row : r.table.rows)
    (std::get<std::string>(row[0]) == "calibration" ? cal : val).insert(std::get<std::int64_t>(row[3]));
  for (auto s : cal) CHECK(val.count(s) == 0);
}

TEST_CASE("drifted BM studies") {
  const auto p0 = parse_config_text(R"({"kind": "prop0_validation", "bm": {"dt": 1e-2, "n_paths": 2000, "mu": 4}})");
  const auto r0 = run_experiment(p0);
  CHECK(r0.table.header.size() == 10);
  CHECK(r0.table.rows.size() == 3);
  CHECK(r0.events_actual <= 1.01 * r0.events_estimate);
  const auto c1 = run_experiment(parse_config_text(R"({"kind": "cor1_convergence"})"));
  CHECK(c1.summary["monotone_decreasing"] == true);
  CHECK(c1.summary["final_within_tolerance"] == true);
}

TEST_CASE("empty result gives a header-only CSV and a no-data summary") {
  ExperimentResult empty;
  empty.table.header = {"a", "b"};
  empty.summary = json::object();
  const auto path = scratch("empty.csv");
  const auto summary = emit_report(empty, path.string());
  CHECK(slurp(path) == "a,b\n");
  CHECK(json::parse(slurp(summary))["no_data"] == true);
  CHECK(summary_path_for("x/out.csv") == "x/out.summary.json");
  CHECK_THROWS(emit_report(empty, "/nonexistent-dir/out.csv"));
}

TEST_CASE("CSV round trip recovers full precision") {
  Table t;
  t.header = {"name", "value", "count"};
  t.rows.push_back({std::string("plain"), 0.1, std::int64_t{3}});
  t.rows.push_back({std::string("with,comma"), 1.0 / 3.0, std::int64_t{-7}});
  t.rows.push_back({std::string("with \"quote\""), 6.02214076e23, std::monostate{}});
  t.rows.push_back({std::string("line\nbreak"), -2.2250738585072014e-308, std::int64_t{0}});
  std::ostringstream os;
  write_csv(os, t);
  std::istringstream is(os.str());
  const auto rows = read_csv(is);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"name", "value", "count"});
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(rows[i + 1][0] == std::get<std::string>(t.rows[i][0]));
    CHECK(std::stod(rows[i + 1][1]) == std::get<double>(t.rows[i][1]));
  }
  CHECK(rows[3][2].empty());
}
