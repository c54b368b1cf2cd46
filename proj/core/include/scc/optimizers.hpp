#pragma once

#include <string>
#include <vector>

#include "scc/signal_metrics.hpp"
#include "scc/subproblems.hpp"
#include "scc/system_model.hpp"

namespace scc {

struct OptimizerOptions {
  int max_iterations = 100;
  double rel_tol = 1e-4;
  double subproblem_tol = kDefaultSubproblemTol;
  double monotonicity_slack = 1e-7;

  /// Throws ConfigError unless every field is positive and rel_tol < 1.
  void validate() const;
};

struct TraceRecord {
  int iteration = 0;
  double objective = 0.0;  ///< AirComp MSE (CEM) or weighted sum-rate (WSR)
  ConstraintReport report;
  double subproblem_ms = 0.0;
  double max_rank_gap = 0.0;  ///< CEM only
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;

  /// True when consecutive objectives never move against `increasing` by
  /// more than slack.
  bool monotone(bool increasing, double slack) const;
  double max_rank_gap() const;
};

enum class OutcomeStatus { converged, max_iterations, infeasible };

const char* to_string(OutcomeStatus s);

struct SolveOutcome {
  TransmitBeams tx;
  ReceiveBeams rx;
  ConvergenceTrace trace;
  bool converged = false;
  OutcomeStatus status = OutcomeStatus::max_iterations;
  ConstraintReport report;  ///< at the final (tx, rx)
  double objective = 0.0;   ///< last traced objective
  Eigen::MatrixXd weights;  ///< last WMMSE weights beta (WSR loops)
  double wall_ms = 0.0;
  std::string message;

  int iterations() const { return static_cast<int>(trace.records.size()); }
};

enum class ReceiverRule {
  mmse,            ///< Omega^{-1} H W and Omega^{-1} H v
  matched_filter,  ///< directions sum_k H_k w_kl and H_k v_kj, each with its MSE-optimal gain
};

ReceiveBeams compute_receivers(ReceiverRule rule, const TransmitBeams& tx, const ChannelSet& ch,
                               double noise_power);

/// Computation-error minimization: MMSE receivers, SDR transmit step,
/// principal-eigenvector recovery, repeated until the relative MSE change
/// drops below rel_tol.
SolveOutcome run_cem(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts);

/// Weighted sum-rate maximization by weighted-MMSE block coordinate descent.
SolveOutcome run_wsr(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts);

/// The same loops with a different receiver update.
SolveOutcome run_cem_with(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts,
                          ReceiverRule rule);
SolveOutcome run_wsr_with(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts,
                          ReceiverRule rule);

/// Converged MSE of the computation-error loop with every rate target
/// removed. A lower bound (up to local optimality) on any achievable MSE.
double min_achievable_mse(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts);

/// Beam pair attaining min_achievable_mse.
SolveOutcome min_mse_outcome(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts);

}  // namespace scc
