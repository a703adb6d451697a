#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "rwre_cli_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(RWRE_CLI_PATH) + " " + args + " >/dev/null 2>" +
                          (workdir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path write(const std::string& name, const std::string& text) {
  const auto p = workdir() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run("--version") == 0);
  CHECK(run("no-such-command") == 2);
  const auto bad = write("bad.json", R"({"kind": "localization_trend", "env": {"b": 1}})");
  CHECK(run("experiment --config " + bad.string() + " --out " + (workdir() / "x.csv").string()) == 2);
  CHECK(slurp(workdir() / "stderr.txt").find("env.alpha") != std::string::npos);
  const auto big = write("big.json", R"({"kind": "localization_trend", "env": {"alpha": 0.4, "b": 1},
                                        "t_grid": [1e7], "n_environments": 200, "n_replicas": 50})");
  CHECK(run("experiment --config " + big.string() + " --budget-events 1e6 --out " + (workdir() / "y.csv").string()) ==
        3);
  const auto env = workdir() / "env.json";
  CHECK(run("gen-env --alpha 0.4 --b 20 --n-sites 30 --seed 1 --out " + env.string()) == 0);
  CHECK(run("simulate --env " + env.string() + " --t 1000 --seed 1") == 4);  // walks off the right edge
}

TEST_CASE("subcommands produce their artifacts") {
  const auto env = workdir() / "env2.json";
  REQUIRE(run("gen-env --alpha 0.3 --n-sites 500 --seed 4 --include-disorder --out " + env.string()) == 0);
  const auto doc = nlohmann::json::parse(slurp(env));
  CHECK(doc["seed"] == 4);
  CHECK(doc["omega"].size() == 500);

  const auto sim = workdir() / "sim.csv";
  REQUIRE(run("simulate --env " + env.string() + " --t 10 100 --replicas 4 --seed 2 --out " + sim.string()) == 0);
  CHECK(slurp(sim).rfind("replica,t,position\n", 0) == 0);

  const auto hit = workdir() / "hit.json";
  REQUIRE(run("hitting --env " + env.string() + " --a 5 --x 10 --c 40 --t 100 1e6 --out " + hit.string()) == 0);
  const auto h = nlohmann::json::parse(slurp(hit));
  CHECK(h["ruin_prob"].get<double>() > 0.0);
  CHECK(h["bounds"].size() == 2);

  const auto values = write("values.csv", "value\n0\n-1\n2\n0\n3\n");
  const auto draw = workdir() / "draw.json";
  REQUIRE(run("drawstats --input " + values.string() + " --out " + draw.string()) == 0);
  const auto d = nlohmann::json::parse(slurp(draw));
  CHECK(d["drawup"] == 4.0);
  CHECK(d["drawdown"] == 2.0);

  const auto bm = workdir() / "bm.csv";
  REQUIRE(run("bmlaw --a 1 2 --paths 200 --dt 1e-2 --seed 3 --out " + bm.string()) == 0);
  CHECK(slurp(bm).rfind("a,sigma,nu,mu,exact,asymptotic,mc_estimate,mc_se,dt,n_paths\n", 0) == 0);
}

TEST_CASE("experiment output is byte-identical across runs and thread counts") {
  const auto cfg = write("loc.json", R"({"kind": "localization_trend", "env": {"alpha": 0.4, "b": 1},
                                        "t_grid": [1e3, 1e4], "n_environments": 4, "n_replicas": 3})");
  const auto a = workdir() / "a.csv", b = workdir() / "b.csv";
  REQUIRE(run("experiment --config " + cfg.string() + " --seed 17 --threads 1 --out " + a.string()) == 0);
  REQUIRE(run("experiment --config " + cfg.string() + " --seed 17 --threads 2 --out " + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(fs::exists(workdir() / "a.summary.json"));
  const auto c = workdir() / "c.csv";
  REQUIRE(run("experiment --config " + cfg.string() + " --seed 18 --out " + c.string()) == 0);
  CHECK(slurp(a) != slurp(c));
}
