#include "scc/baselines.hpp"

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

SystemConfig scoring_config(ObjectiveMode mode, const SystemConfig& config) {
  SystemConfig c = config;
  if (mode == ObjectiveMode::cem) {
    c.mse_budget = std::numeric_limits<double>::infinity();
  } else {
    c.rate_thresholds.setZero();
  }
  return c;
}

double score(ObjectiveMode mode, const SystemConfig& config, const ChannelSet& ch, const TransmitBeams& tx,
             const ReceiveBeams& rx) {
  if (mode == ObjectiveMode::cem) return aircomp_mse(rx, tx, ch, config.noise_power);
  return weighted_sum_rate(rx, tx, ch, config.noise_power, config.priorities, config.interference_model);
}

CMatrix right_singular_vectors(const CMatrix& h) {
  Eigen::JacobiSVD<CMatrix> svd(h, Eigen::ComputeFullV);
  return svd.matrixV();
}

SolveOutcome single_pass(ObjectiveMode mode, const SystemConfig& config, const ChannelSet& ch, TransmitBeams tx,
                         ReceiveBeams rx, Clock::time_point t0) {
  const SystemConfig report_cfg = scoring_config(mode, config);
  SolveOutcome out;
  out.tx = std::move(tx);
  out.rx = std::move(rx);
  TraceRecord rec;
  rec.iteration = 1;
  rec.objective = score(mode, config, ch, out.tx, out.rx);
  rec.report = constraint_report(out.rx, out.tx, ch, report_cfg);
  out.objective = rec.objective;
  out.report = rec.report;
  out.trace.records.push_back(std::move(rec));
  out.status = out.report.feasible ? OutcomeStatus::converged : OutcomeStatus::infeasible;
  if (!out.report.feasible) out.message = "fixed design violates a constraint";
  out.converged = out.status == OutcomeStatus::converged;
  out.wall_ms = ms_since(t0);
  return out;
}

SolveOutcome run_ufbf(ObjectiveMode mode, const SystemConfig& config, const ChannelSet& ch,
                      const OptimizerOptions& opts, Clock::time_point t_start) {
  const double s2 = config.noise_power;
  const SystemConfig report_cfg = scoring_config(mode, config);
  SolveOutcome out;
  out.tx = initial_transmit_beams(config);
  out.objective = score(mode, config, ch, out.tx, mmse_receivers(out.tx, ch, s2));
  out.status = OutcomeStatus::max_iterations;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const ReceiveBeams rx = mmse_receivers(out.tx, ch, s2);
    const auto t0 = Clock::now();
    out.tx = uniform_forcing_transmit(config, ch, rx);
    const double sub_ms = ms_since(t0);
    const ReceiveBeams rx_next = mmse_receivers(out.tx, ch, s2);
    TraceRecord rec;
    rec.iteration = it;
    rec.objective = score(mode, config, ch, out.tx, rx_next);
    rec.report = constraint_report(rx_next, out.tx, ch, report_cfg);
    rec.subproblem_ms = sub_ms;
    const double prev = out.objective;
    out.objective = rec.objective;
    out.trace.records.push_back(std::move(rec));
    if (it >= 2 && std::abs(out.objective - prev) < opts.rel_tol * std::max(std::abs(prev), 1e-300)) {
      out.status = OutcomeStatus::converged;
      break;
    }
  }
  out.rx = mmse_receivers(out.tx, ch, s2);
  out.report = constraint_report(out.rx, out.tx, ch, report_cfg);
  if (out.status == OutcomeStatus::converged && !out.report.feasible) {
    out.status = OutcomeStatus::max_iterations;
    out.message = "stationary point violates a constraint";
  }
  out.converged = out.status == OutcomeStatus::converged;
  out.wall_ms = ms_since(t_start);
  return out;
}

}  // namespace

const char* to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::fixed_mmse:
      return "fixed-mmse";
    case BaselineKind::zfbf:
      return "zfbf";
    case BaselineKind::mfbf:
      return "mfbf";
    case BaselineKind::ufbf:
      return "ufbf";
  }
  return "unknown";
}

const char* to_string(ObjectiveMode mode) { return mode == ObjectiveMode::cem ? "cem" : "wsr"; }

BaselineKind parse_baseline_kind(std::string_view name) {
  if (name == "fixed-mmse" || name == "fixed_mmse") return BaselineKind::fixed_mmse;
  if (name == "zfbf") return BaselineKind::zfbf;
  if (name == "mfbf") return BaselineKind::mfbf;
  if (name == "ufbf") return BaselineKind::ufbf;
  throw ConfigError("unknown baseline '" + std::string(name) + "'");
}

TransmitBeams singular_vector_transmit(const SystemConfig& config, const ChannelSet& ch) {
  const int kn = config.n_ues;
  const int m = config.n_ue_antennas;
  const int l = config.n_comp_streams;
  const int jn = config.n_sense_streams;
  if (l + jn > m) {
    std::ostringstream os;
    os << "zero-forcing transmit needs L + J <= M, got L + J = " << l + jn << " and M = " << m;
    throw DimensionError(os.str());
  }
  TransmitBeams tx = TransmitBeams::zeros(kn, m, l, jn);
  for (int k = 0; k < kn; ++k) {
    const CMatrix v = right_singular_vectors(ch.matrices[k]);
    const double p = config.power_budget[k];
    for (int c = 0; c < l; ++c) tx.comp[k].col(c) = std::sqrt(p / (2.0 * l)) * v.col(c);
    for (int j = 0; j < jn; ++j) tx.sense[k][j] = std::sqrt(p / (2.0 * jn)) * v.col(l + j);
  }
  return tx;
}

ReceiveBeams zero_forcing_receivers(const TransmitBeams& tx, const ChannelSet& ch) {
  check_shapes(tx, ch);
  const int kn = ch.n_ues();
  const int n = ch.n_rows();
  const int l = static_cast<int>(tx.comp.front().cols());
  const int jn = static_cast<int>(tx.sense.front().size());
  const int streams = kn * (l + jn);
  if (n < streams) {
    std::ostringstream os;
    os << "zero-forcing receivers need N >= K (L + J), got N = " << n << " for " << streams << " streams";
    throw DimensionError(os.str());
  }
  CMatrix s(n, streams);
  for (int k = 0; k < kn; ++k) {
    const int base = k * (l + jn);
    s.middleCols(base, l) = ch.matrices[k] * tx.comp[k];
    for (int j = 0; j < jn; ++j) s.col(base + l + j) = ch.matrices[k] * tx.sense[k][j];
  }
  const CMatrix gram = s.adjoint() * s;
  Eigen::FullPivLU<CMatrix> lu(gram);
  if (!lu.isInvertible()) throw NumericError("stream signatures are linearly dependent");
  const CMatrix r = s * lu.inverse();

  ReceiveBeams rx = ReceiveBeams::zeros(n, kn, l, jn);
  for (int k = 0; k < kn; ++k) {
    const int base = k * (l + jn);
    rx.comp += r.middleCols(base, l);
    for (int j = 0; j < jn; ++j) rx.sense[k][j] = r.col(base + l + j);
  }
  return rx;
}

TransmitBeams uniform_forcing_transmit(const SystemConfig& config, const ChannelSet& ch, const ReceiveBeams& rx) {
  const int kn = config.n_ues;
  const int m = config.n_ue_antennas;
  const int l = config.n_comp_streams;
  const int jn = config.n_sense_streams;
  std::vector<CVector> first;
  std::vector<CVector> second;
  for (int k = 0; k < kn; ++k) {
    const CMatrix v = right_singular_vectors(ch.matrices[k]);
    first.push_back(v.col(0));
    second.push_back(v.col(m >= 2 ? 1 : 0));
  }

  // Each stream index gets the largest common gain every UE can reach.
  TransmitBeams tx = TransmitBeams::zeros(kn, m, l, jn);
  const auto force = [&](auto gain_of, double share, auto assign) {
    std::vector<cplx> g(kn);
    double common = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kn; ++k) {
      g[k] = gain_of(k);
      common = std::min(common, std::abs(g[k]) * std::sqrt(config.power_budget[k] * share));
    }
    for (int k = 0; k < kn; ++k) {
      const double a = std::abs(g[k]);
      assign(k, a > 0.0 ? common / a * std::conj(g[k]) / a : cplx(0.0));
    }
  };
  for (int c = 0; c < l; ++c) {
    force([&](int k) { return rx.comp.col(c).dot(ch.matrices[k] * second[k]); }, 0.5 / l,
          [&](int k, cplx s) { tx.comp[k].col(c) = s * second[k]; });
  }
  for (int j = 0; j < jn; ++j) {
    force([&](int k) { return rx.sense[k][j].dot(ch.matrices[k] * first[k]); }, 0.5 / jn,
          [&](int k, cplx s) { tx.sense[k][j] = s * first[k]; });
  }
  return tx;
}

SolveOutcome run_baseline(const BaselineVariant& variant, const SystemConfig& config, const ChannelSet& ch,
                          const OptimizerOptions& opts) {
  config.validate();
  opts.validate();
  if (ch.n_ues() != config.n_ues || ch.n_rows() != config.n_bs_antennas || ch.n_cols() != config.n_ue_antennas) {
    throw ContractError("channel set does not match the system configuration");
  }
  const auto t0 = Clock::now();
  const ObjectiveMode mode = variant.objective_mode;
  switch (variant.kind) {
    case BaselineKind::fixed_mmse: {
      TransmitBeams tx = initial_transmit_beams(config);
      ReceiveBeams rx = mmse_receivers(tx, ch, config.noise_power);
      return single_pass(mode, config, ch, std::move(tx), std::move(rx), t0);
    }
    case BaselineKind::zfbf: {
      TransmitBeams tx = singular_vector_transmit(config, ch);
      ReceiveBeams rx = zero_forcing_receivers(tx, ch);
      return single_pass(mode, config, ch, std::move(tx), std::move(rx), t0);
    }
    case BaselineKind::mfbf:
      return mode == ObjectiveMode::cem ? run_cem_with(config, ch, opts, ReceiverRule::matched_filter)
                                        : run_wsr_with(config, ch, opts, ReceiverRule::matched_filter);
    case BaselineKind::ufbf:
      return run_ufbf(mode, config, ch, opts, t0);
  }
  throw ContractError("unknown baseline kind");
}

}  // namespace scc
