#include "scc/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "scc/errors.hpp"

namespace scc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool small_change(double prev, double cur, double rel_tol) {
  const double scale = std::max(std::abs(prev), 1e-300);
  return std::abs(cur - prev) / scale < rel_tol;
}

Eigen::MatrixXd sinr_targets(const SystemConfig& config) {
  Eigen::MatrixXd g(config.n_ues, config.n_sense_streams);
  for (int k = 0; k < config.n_ues; ++k) {
    for (int j = 0; j < config.n_sense_streams; ++j) g(k, j) = config.sinr_target(k, j);
  }
  return g;
}

// Scales up sensing beams whose recovered rank-one form misses its rate
// target at the receivers of the subproblem, within the remaining power.
// False when that is not possible.
bool repair_rates(const SystemConfig& config, const ChannelSet& ch, const ReceiveBeams& rx, TransmitBeams& tx) {
  const double s2 = config.noise_power;
  for (int pass = 0; pass < 4; ++pass) {
    bool ok = true;
    for (int k = 0; k < config.n_ues; ++k) {
      for (int j = 0; j < config.n_sense_streams; ++j) {
        const double r = config.rate_thresholds(k, j);
        if (r <= 0.0) continue;
        const double sinr = sensing_sinr(k, j, rx, tx, ch, s2, config.interference_model);
        if (std::log2(1.0 + sinr) - r >= -kFeasibilityTolerance * std::max(1.0, r)) continue;
        ok = false;
        const CVector& u = rx.sense[k][j];
        const double signal = std::norm(u.dot(ch.matrices[k] * tx.sense[k][j]));
        if (!(signal > 0.0) || !(sinr > 0.0)) return false;
        const double interference = signal / sinr;
        const double scale2 = config.sinr_target(k, j) * (1.0 + 1e-9) * interference / signal;
        const double extra = (scale2 - 1.0) * tx.sense[k][j].squaredNorm();
        if (tx.power(k) + extra > config.power_budget[k]) return false;
        tx.sense[k][j] *= std::sqrt(scale2);
      }
    }
    if (ok) return true;
  }
  return false;
}

void finalize(const SystemConfig& config, const ChannelSet& ch, ReceiverRule rule, SolveOutcome& out,
              Clock::time_point t0) {
  out.rx = compute_receivers(rule, out.tx, ch, config.noise_power);
  out.report = constraint_report(out.rx, out.tx, ch, config);
  if (out.status == OutcomeStatus::converged && !out.report.feasible) {
    out.status = OutcomeStatus::max_iterations;
    if (out.message.empty()) out.message = "stationary point violates a constraint";
  }
  out.converged = out.status == OutcomeStatus::converged;
  out.wall_ms = ms_since(t0);
}

void check_inputs(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts) {
  config.validate();
  opts.validate();
  if (ch.n_ues() != config.n_ues || ch.n_rows() != config.n_bs_antennas || ch.n_cols() != config.n_ue_antennas) {
    throw ContractError("channel set does not match the system configuration");
  }
}

std::string subproblem_message(SubproblemStatus s, int iteration) {
  std::ostringstream os;
  os << "transmit subproblem " << to_string(s) << " at iteration " << iteration << "; kept previous iterate";
  return os.str();
}

// Power-feasible start for the MSE-budgeted loop: blends the min-MSE
// computation beams with low-leakage sensing beams.
TransmitBeams budget_feasible_start(const SystemConfig& config, const ChannelSet& ch, const SolveOutcome& floor) {
  const double s2 = config.noise_power;
  const double target = 0.5 * (floor.objective + config.mse_budget);
  const int jn = config.n_sense_streams;
  std::vector<CVector> leak_dirs;
  for (int k = 0; k < config.n_ues; ++k) {
    const CMatrix g = floor.rx.comp.adjoint() * ch.matrices[k];
    Eigen::SelfAdjointEigenSolver<CMatrix> es(g.adjoint() * g);
    leak_dirs.push_back(es.eigenvectors().col(0));
  }
  const auto blend = [&](double alpha) {
    TransmitBeams tx = floor.tx;
    for (int k = 0; k < config.n_ues; ++k) {
      tx.comp[k] *= std::sqrt(1.0 - alpha);
      for (int j = 0; j < jn; ++j) tx.sense[k][j] = std::sqrt(alpha * config.power_budget[k] / jn) * leak_dirs[k];
    }
    return tx;
  };
  const auto mse_at = [&](double alpha) {
    const TransmitBeams tx = blend(alpha);
    return aircomp_mse(mmse_receivers(tx, ch, s2), tx, ch, s2);
  };
  if (mse_at(1.0) <= target) return blend(1.0);
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mse_at(mid) <= target ? lo : hi) = mid;
  }
  return blend(lo > 0.0 ? lo : 0.5 * hi);
}

}  // namespace

void OptimizerOptions::validate() const {
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (!(rel_tol > 0.0) || !(rel_tol < 1.0)) throw ConfigError("rel_tol must lie in (0, 1)");
  if (!(subproblem_tol > 0.0) || subproblem_tol > 1e-3) throw ConfigError("subproblem_tol must lie in (0, 1e-3]");
  if (!(monotonicity_slack > 0.0)) throw ConfigError("monotonicity_slack must be positive");
}

bool ConvergenceTrace::monotone(bool increasing, double slack) const {
  for (std::size_t i = 1; i < records.size(); ++i) {
    const double step = records[i].objective - records[i - 1].objective;
    if (increasing ? step < -slack : step > slack) return false;
  }
  return true;
}

double ConvergenceTrace::max_rank_gap() const {
  double g = 0.0;
  for (const auto& r : records) g = std::max(g, r.max_rank_gap);
  return g;
}

const char* to_string(OutcomeStatus s) {
  switch (s) {
    case OutcomeStatus::converged:
      return "converged";
    case OutcomeStatus::max_iterations:
      return "max_iterations";
    case OutcomeStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

ReceiveBeams compute_receivers(ReceiverRule rule, const TransmitBeams& tx, const ChannelSet& ch,
                               double noise_power) {
  if (rule == ReceiverRule::mmse) return mmse_receivers(tx, ch, noise_power);
  check_shapes(tx, ch);
  const int k_count = ch.n_ues();
  const auto l = tx.comp.front().cols();
  const int jn = static_cast<int>(tx.sense.front().size());
  const int n = ch.n_rows();

  CMatrix omega = noise_power * CMatrix::Identity(n, n);
  CMatrix comp_dir = CMatrix::Zero(n, l);
  for (int k = 0; k < k_count; ++k) {
    const CMatrix hw = ch.matrices[k] * tx.comp[k];
    omega.noalias() += hw * hw.adjoint();
    comp_dir += hw;
    for (int j = 0; j < jn; ++j) {
      const CVector hv = ch.matrices[k] * tx.sense[k][j];
      omega.noalias() += hv * hv.adjoint();
    }
  }
  // Unit direction d times the gain c = d^H b / d^H Omega d that minimizes
  // the error along d, b being the desired signature.
  const auto scaled = [&](const CVector& b) -> CVector {
    const double nb = b.norm();
    if (!(nb > 0.0)) return CVector::Zero(n);
    const CVector d = b / nb;
    const double energy = d.dot(omega * d).real();
    return (d.dot(b) / energy) * d;
  };
  ReceiveBeams rx = ReceiveBeams::zeros(n, k_count, static_cast<int>(l), jn);
  for (Eigen::Index c = 0; c < l; ++c) rx.comp.col(c) = scaled(comp_dir.col(c));
  for (int k = 0; k < k_count; ++k) {
    for (int j = 0; j < jn; ++j) rx.sense[k][j] = scaled(ch.matrices[k] * tx.sense[k][j]);
  }
  return rx;
}

SolveOutcome run_cem_with(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts,
                          ReceiverRule rule) {
  check_inputs(config, ch, opts);
  const auto t_start = Clock::now();
  const double s2 = config.noise_power;
  const Eigen::MatrixXd gamma = sinr_targets(config);
  // The MSE budget is not a constraint of this problem.
  SystemConfig report_cfg = config;
  report_cfg.mse_budget = std::numeric_limits<double>::infinity();

  SolveOutcome out;
  out.tx = initial_transmit_beams(config);
  out.objective = aircomp_mse(compute_receivers(rule, out.tx, ch, s2), out.tx, ch, s2);
  out.status = OutcomeStatus::max_iterations;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const ReceiveBeams rx = compute_receivers(rule, out.tx, ch, s2);
    const CemSubproblem p{rx, ch, s2, gamma, config.power_budget, config.interference_model};
    const auto t0 = Clock::now();
    const SubproblemSolution sol = solve_cem_subproblem(p, opts.subproblem_tol);
    const double sub_ms = ms_since(t0);
    if (sol.status != SubproblemStatus::optimal) {
      if (it == 1 && sol.status == SubproblemStatus::infeasible) {
        out.status = OutcomeStatus::infeasible;
        out.message = "rate targets unreachable under the power budgets: " + sol.certificate;
      } else {
        out.message = subproblem_message(sol.status, it);
      }
      break;
    }

    TransmitBeams cand = TransmitBeams::zeros(config.n_ues, config.n_ue_antennas, config.n_comp_streams,
                                              config.n_sense_streams);
    cand.comp = sol.comp_beams;
    double max_gap = 0.0;
    for (int k = 0; k < config.n_ues; ++k) {
      for (int j = 0; j < config.n_sense_streams; ++j) {
        const RankOneResult r1 = recover_rank_one(sol.sense_matrices[k][j], opts.subproblem_tol, config.power_budget[k]);
        cand.sense[k][j] = r1.v;
        if (!r1.degenerate) max_gap = std::max(max_gap, r1.rank_gap);
      }
    }
    if (!repair_rates(config, ch, rx, cand)) {
      out.status = OutcomeStatus::converged;
      out.message = "rank-one recovery broke a rate target at iteration " + std::to_string(it) +
                    "; kept previous iterate";
      break;
    }
    out.tx = std::move(cand);

    const ReceiveBeams rx_next = compute_receivers(rule, out.tx, ch, s2);
    TraceRecord rec;
    rec.iteration = it;
    rec.objective = aircomp_mse(rx_next, out.tx, ch, s2);
    rec.report = constraint_report(rx_next, out.tx, ch, report_cfg);
    rec.subproblem_ms = sub_ms;
    rec.max_rank_gap = max_gap;
    const double prev = out.objective;
    out.objective = rec.objective;
    out.trace.records.push_back(std::move(rec));
    if (it >= 2 && small_change(prev, out.objective, opts.rel_tol)) {
      out.status = OutcomeStatus::converged;
      break;
    }
  }
  finalize(report_cfg, ch, rule, out, t_start);
  return out;
}

SolveOutcome run_cem(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts) {
  return run_cem_with(config, ch, opts, ReceiverRule::mmse);
}

SolveOutcome min_mse_outcome(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts) {
  SystemConfig relaxed = config;
  relaxed.rate_thresholds.setZero();
  relaxed.mse_budget = std::numeric_limits<double>::infinity();
  return run_cem(relaxed, ch, opts);
}

double min_achievable_mse(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts) {
  return min_mse_outcome(config, ch, opts).objective;
}

SolveOutcome run_wsr_with(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts,
                          ReceiverRule rule) {
  check_inputs(config, ch, opts);
  const auto t_start = Clock::now();
  const double s2 = config.noise_power;
  const int kn = config.n_ues;
  const int jn = config.n_sense_streams;
  // Rates are the objective here, not constraints.
  SystemConfig report_cfg = config;
  report_cfg.rate_thresholds.setZero();

  SolveOutcome out;
  out.tx = initial_transmit_beams(config);
  out.status = OutcomeStatus::max_iterations;
  if (std::isfinite(config.mse_budget)) {
    const SolveOutcome floor = min_mse_outcome(config, ch, opts);
    if (floor.objective > config.mse_budget) {
      std::ostringstream os;
      os.precision(12);
      os << "MSE budget " << config.mse_budget << " is below the achievable floor " << floor.objective;
      out.status = OutcomeStatus::infeasible;
      out.message = os.str();
      finalize(report_cfg, ch, rule, out, t_start);
      return out;
    }
    const ReceiveBeams rx0 = mmse_receivers(out.tx, ch, s2);
    if (aircomp_mse(rx0, out.tx, ch, s2) > config.mse_budget) out.tx = budget_feasible_start(config, ch, floor);
  }
  out.objective = weighted_sum_rate(compute_receivers(rule, out.tx, ch, s2), out.tx, ch, s2, config.priorities,
                                    config.interference_model);

  for (int it = 1; it <= opts.max_iterations; ++it) {
    const ReceiveBeams rx = compute_receivers(rule, out.tx, ch, s2);
    Eigen::MatrixXd beta(kn, jn);
    for (int k = 0; k < kn; ++k) {
      for (int j = 0; j < jn; ++j) beta(k, j) = 1.0 / per_stream_mse(k, j, rx, out.tx, ch, s2);
    }
    const WsrSubproblem p{rx, ch, s2, beta, config.priorities, config.power_budget, config.mse_budget};
    const auto t0 = Clock::now();
    const SubproblemSolution sol = solve_wsr_subproblem(p, opts.subproblem_tol);
    const double sub_ms = ms_since(t0);
    if (sol.status != SubproblemStatus::optimal) {
      if (it == 1 && sol.status == SubproblemStatus::infeasible) {
        out.status = OutcomeStatus::infeasible;
        out.message = "MSE budget unreachable: " + sol.certificate;
      } else {
        out.message = subproblem_message(sol.status, it);
      }
      break;
    }
    out.weights = beta;
    out.tx.comp = sol.comp_beams;
    out.tx.sense = sol.sense_beams;

    const ReceiveBeams rx_next = compute_receivers(rule, out.tx, ch, s2);
    TraceRecord rec;
    rec.iteration = it;
    rec.objective = weighted_sum_rate(rx_next, out.tx, ch, s2, config.priorities, config.interference_model);
    rec.report = constraint_report(rx_next, out.tx, ch, report_cfg);
    rec.subproblem_ms = sub_ms;
    const double prev = out.objective;
    out.objective = rec.objective;
    out.trace.records.push_back(std::move(rec));
    if (it >= 2 && small_change(prev, out.objective, opts.rel_tol)) {
      out.status = OutcomeStatus::converged;
      break;
    }
  }
  finalize(report_cfg, ch, rule, out, t_start);
  return out;
}

SolveOutcome run_wsr(const SystemConfig& config, const ChannelSet& ch, const OptimizerOptions& opts) {
  return run_wsr_with(config, ch, opts, ReceiverRule::mmse);
}

}  // namespace scc
