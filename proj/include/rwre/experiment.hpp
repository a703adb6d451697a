#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "rwre/csv.hpp"
#include "rwre/environment.hpp"
#include "rwre/exactsolve.hpp"
#include "rwre/pathfunc.hpp"

namespace rwre {

inline constexpr const char* kToolVersion = "1.0.0";

enum class ExperimentKind {
  localization_trend,
  lemma_frequency,
  bound_validation,
  prop0_validation,
  cor1_convergence,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

/// Settings of the drifted-BM studies.
struct BMSettings {
  double sigma = 1.0;
  double nu = -0.5;
  double mu = 20.0;
  std::vector<double> levels{1.0, 2.0, 3.0};
  double dt = 1e-4;
  std::size_t n_paths = 200'000;
  double allowance = 0.01;
  std::vector<double> schedule_k{2.0, 4.0, 8.0, 16.0};
  double cor1_tolerance = 0.05;
};

/// Settings of the bound-validation study.
struct BoundSettings {
  std::int64_t interval_start = 50;
  std::int64_t interval_length = 12;
  std::size_t n_calibration = 100;
  std::vector<double> confine_t{200.0, 1000.0, 5000.0};
  std::vector<double> escape_t{10.0, 100.0, 1000.0};
  double K1 = 1.0;
  double K2 = 0.0;  // 0: calibrate
  double K3 = 0.0;  // 0: calibrate
  bool use_watq = false;
  double calibration_z = 3.0;
  double hit_tolerance = 0.01;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::localization_trend;
  EnvSpec env;
  ScaleParams scale;
  std::vector<double> t_grid;
  double grid_mu = 0.1;
  std::size_t n_environments = 0;
  std::size_t n_replicas = 0;
  double epsilon = 0.5;
  double delta = 0.0;
  int N_partition = 2;
  double grid_step = 1.0;
  std::uint64_t root_seed = 0;
  std::string output_path;
  double budget_events = 5e11;
  unsigned threads = 0;
  BMSettings bm;
  BoundSettings bounds;

  /// Names of every field filled from a default, echoed into provenance.
  std::vector<std::string> defaults_applied;

  nlohmann::json to_json() const;
};

struct ExperimentResult {
  Table table;
  nlohmann::json summary;
  nlohmann::json provenance;
  double events_estimate = 0.0;
  double events_actual = 0.0;
};

/// Parses and validates a JSON config; defaults are applied and recorded.
ExperimentSpec parse_config(const std::string& path);
ExperimentSpec parse_config_text(const std::string& text);
ExperimentSpec spec_from_json(const nlohmann::json& j);

/// Upper bound on the number of random events the spec will draw.
double estimate_events(const ExperimentSpec& spec);

/// Runs the study. BudgetError when the estimate exceeds the budget.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Writes `<path>` (CSV) and the JSON summary next to it; returns the summary path.
std::string emit_report(const ExperimentResult& result, const std::string& path);

std::string summary_path_for(const std::string& csv_path);

/// Geometric-exponential grid t_n = exp((1+mu)^n) restricted to [t_min, t_max].
std::vector<double> geometric_time_grid(double mu, double t_min, double t_max);

/// Thrown when a study fails at a specific (environment, replica, t) coordinate.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rwre
