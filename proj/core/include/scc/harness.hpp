#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "scc/baselines.hpp"
#include "scc/optimizers.hpp"
#include "scc/system_model.hpp"

namespace scc {

enum class Algorithm { cem, wsr, fixed_mmse, zfbf, mfbf, ufbf };

const char* to_string(Algorithm a);
/// cem, wsr, fixed-mmse (or fixed_mmse), zfbf, mfbf, ufbf.
Algorithm parse_algorithm(std::string_view name);

enum class SweepParam { snr_db, k, n, r0, rho };

const char* to_string(SweepParam p);
/// snr (snr_db), k, n, r0, rho; case-insensitive.
SweepParam parse_sweep_param(std::string_view name);

/// Scalar knobs of one experiment point. The per-UE lists, when non-empty,
/// override the homogeneous values and must match n_ues.
struct Scenario {
  int n_bs_antennas = 16;
  int n_ues = 8;
  int n_ue_antennas = 2;
  int n_comp_streams = 1;
  int n_sense_streams = 1;
  double noise_power = 1e-8;
  double snr_db = 5.0;  ///< P0 = noise_power * 10^(snr_db / 10)
  double r0 = 0.5;
  double priority = 1.0;
  double rho = std::numeric_limits<double>::infinity();  ///< per-UE MSE budget, mse_budget = rho K
  double cell_radius = 500.0;
  double min_ue_distance = 10.0;
  InterferenceModel interference_model = InterferenceModel::all_cross_streams;
  ChannelMode channel_mode = ChannelMode::normalized;

  std::vector<double> power_budget;     // K
  std::vector<double> rate_thresholds;  // K x J, row-major
  std::vector<double> priorities;       // K x J, row-major
  double mse_budget = std::numeric_limits<double>::quiet_NaN();  ///< absolute; NaN defers to rho

  double power_per_ue() const;
  double absolute_mse_budget() const;
  SystemConfig system_config() const;
  /// Copy with the swept parameter set to value.
  Scenario with(SweepParam p, double value) const;
  double value_of(SweepParam p) const;
};

struct ExperimentSpec {
  Scenario base;
  Algorithm algorithm = Algorithm::cem;
  ObjectiveMode baseline_mode = ObjectiveMode::cem;  ///< objective the baselines are scored against
  SweepParam sweep_param = SweepParam::snr_db;
  std::vector<double> sweep_values;  ///< empty runs the base point alone
  int trials = 20;
  std::uint64_t master_seed = 1;
  OptimizerOptions opts;
  int threads = 1;
  bool timings = false;  ///< keep wall-clock columns; they are zero otherwise
  std::string output_dir = "scc_out";

  /// Throws ConfigError for an invalid spec.
  void validate() const;
  /// The sweep values, or the base value of the swept parameter.
  std::vector<double> points() const;
};

/// Per-trial seed: derive_seed(derive_seed(master, point + 1), trial + 1).
/// Placement and fading seeds are derive_seed(trial_seed, 1) and
/// derive_seed(trial_seed, 2).
std::uint64_t trial_seed(std::uint64_t master_seed, int point, int trial);

struct ResultRow {
  int scenario_id = 0;
  std::string algorithm;
  std::uint64_t seed = 0;
  int trial = 0;
  int k = 0;
  int n = 0;
  int m = 0;
  int l = 0;
  int j = 0;
  double snr_db = 0.0;
  double r0 = 0.0;
  double rho = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
  double nmse = 0.0;
  double wsr = 0.0;
  double min_rate_margin = 0.0;
  double power_slack_min = 0.0;
  double mse_budget_slack = 0.0;
  std::string status;  ///< converged, max_iterations, infeasible or error

  bool operator==(const ResultRow&) const = default;
};

struct TrialTrace {
  int scenario_id = 0;
  int trial = 0;
  std::vector<double> objective;
  std::vector<double> constraint_margin;
  std::vector<double> wall_ms;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;      // sorted by (scenario_id, trial)
  std::vector<TrialTrace> traces;   // same order
  std::vector<SolveOutcome> outcomes;  // same order; empty beams for error rows
};

/// Runs every (sweep point, trial) pair. Trial failures land in the row's
/// status; the batch itself never aborts.
ExperimentResult run_experiment_detailed(const ExperimentSpec& spec);
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

/// Smallest relative slack of the constraints the algorithm is held to.
double constraint_margin(const ConstraintReport& report, const SystemConfig& config, Algorithm algorithm,
                         ObjectiveMode baseline_mode);

struct SummaryRow {
  int scenario_id = 0;
  std::string algorithm;
  std::string param;
  double value = 0.0;
  int trials = 0;
  double mean_nmse = 0.0;
  double median_nmse = 0.0;
  double mean_wsr = 0.0;
  double median_wsr = 0.0;
  double converged_fraction = 0.0;
  double mean_iterations = 0.0;
};

/// Mean and median per sweep point. Error rows are left out of the
/// statistics but counted in trials.
std::vector<SummaryRow> summarize(const ExperimentSpec& spec, const std::vector<ResultRow>& rows);

/// Shortest text that parses back to the same double: %.17g semantics,
/// "inf", "-inf", "nan".
std::string format_number(double x);
double parse_number(std::string_view text);

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& is);
void write_traces_csv(std::ostream& os, const std::vector<TrialTrace>& traces);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

/// File variants; I/O failures throw std::runtime_error naming the path.
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);
void emit_traces(const std::vector<TrialTrace>& traces, const std::string& path);
void emit_summary(const std::vector<SummaryRow>& rows, const std::string& path);

/// Parses the INI experiment file. Sections: [system], [algorithm],
/// [sweep], [solver], [output]. Unknown sections or keys throw ConfigError.
ExperimentSpec parse_experiment_config(std::istream& is);
ExperimentSpec load_experiment_config(const std::string& path);

}  // namespace scc
