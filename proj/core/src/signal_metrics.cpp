#include "scc/signal_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scc/errors.hpp"

namespace scc {

namespace {

Eigen::LLT<CMatrix> factor_covariance(const TransmitBeams& tx, const ChannelSet& ch,
                                      double noise_power) {
  if (!(noise_power > 0.0)) {
    throw NumericError("MMSE receiver needs a positive noise power");
  }
  Eigen::LLT<CMatrix> llt(interference_covariance(0, 0, tx, ch, noise_power));
  if (llt.info() != Eigen::Success) throw NumericError("received covariance is not positive definite");
  return llt;
}

}  // namespace

double ConstraintReport::min_power_slack() const {
  double s = std::numeric_limits<double>::infinity();
  for (double v : per_ue_power_slack) s = std::min(s, v);
  return s;
}

void check_shapes(const TransmitBeams& tx, const ChannelSet& ch) {
  const auto k_count = static_cast<std::size_t>(ch.n_ues());
  if (tx.comp.size() != k_count || tx.sense.size() != k_count) {
    throw ContractError("transmit beams must cover all K UEs");
  }
  const Eigen::Index m = ch.n_cols();
  const Eigen::Index l = k_count ? tx.comp.front().cols() : 0;
  const std::size_t j = k_count ? tx.sense.front().size() : 0;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (tx.comp[k].rows() != m || tx.comp[k].cols() != l) {
      throw ContractError("W_" + std::to_string(k) + " must be M x L");
    }
    if (tx.sense[k].size() != j) throw ContractError("every UE needs J sensing beams");
    for (const auto& v : tx.sense[k]) {
      if (v.size() != m) throw ContractError("sensing beams must have length M");
    }
  }
}

void check_shapes(const ReceiveBeams& rx, const TransmitBeams& tx, const ChannelSet& ch) {
  check_shapes(tx, ch);
  const Eigen::Index n = ch.n_rows();
  const Eigen::Index l = tx.comp.empty() ? 0 : tx.comp.front().cols();
  if (rx.comp.rows() != n || rx.comp.cols() != l) throw ContractError("Z must be N x L");
  if (rx.sense.size() != tx.sense.size()) throw ContractError("receivers must cover all K UEs");
  for (std::size_t k = 0; k < rx.sense.size(); ++k) {
    if (rx.sense[k].size() != tx.sense[k].size()) throw ContractError("every UE needs J sensing receivers");
    for (const auto& u : rx.sense[k]) {
      if (u.size() != n) throw ContractError("sensing receivers must have length N");
    }
  }
}

double aircomp_mse(const ReceiveBeams& rx, const TransmitBeams& tx, const ChannelSet& ch,
                   double noise_power) {
  check_shapes(rx, tx, ch);
  const CMatrix zh = rx.comp.adjoint();
  const auto l = rx.comp.cols();
  const CMatrix eye = CMatrix::Identity(l, l);
  double mse = noise_power * rx.comp.squaredNorm();
  for (int k = 0; k < ch.n_ues(); ++k) {
    const CMatrix zh_h = zh * ch.matrices[k];
    mse += (zh_h * tx.comp[k] - eye).squaredNorm();
    for (const auto& v : tx.sense[k]) mse += (zh_h * v).squaredNorm();
  }
  return mse;
}

double sensing_sinr(int k, int j, const ReceiveBeams& rx, const TransmitBeams& tx,
                    const ChannelSet& ch, double noise_power, InterferenceModel model) {
  check_shapes(rx, tx, ch);
  const CVector& u = rx.sense[k][j];
  const double u_norm2 = u.squaredNorm();
  if (u_norm2 == 0.0) return 0.0;
  const double signal = std::norm(u.dot(ch.matrices[k] * tx.sense[k][j]));
  double denom = noise_power * u_norm2;
  for (int i = 0; i < ch.n_ues(); ++i) {
    const Eigen::RowVectorXcd uh_h = u.adjoint() * ch.matrices[i];
    denom += (uh_h * tx.comp[i]).squaredNorm();
    for (int m = 0; m < static_cast<int>(tx.sense[i].size()); ++m) {
      if (interferes(i, m, k, j, model)) denom += std::norm((uh_h * tx.sense[i][m]).value());
    }
  }
  return signal / denom;
}

double weighted_sum_rate(const ReceiveBeams& rx, const TransmitBeams& tx, const ChannelSet& ch,
                         double noise_power, const Eigen::MatrixXd& priorities,
                         InterferenceModel model) {
  check_shapes(rx, tx, ch);
  double total = 0.0;
  for (int k = 0; k < ch.n_ues(); ++k) {
    for (int j = 0; j < static_cast<int>(tx.sense[k].size()); ++j) {
      const double theta = priorities(k, j);
      if (theta == 0.0) continue;
      total += theta * std::log2(1.0 + sensing_sinr(k, j, rx, tx, ch, noise_power, model));
    }
  }
  return total;
}

CMatrix interference_covariance(int /*k*/, int /*j*/, const TransmitBeams& tx, const ChannelSet& ch,
                                double noise_power) {
  check_shapes(tx, ch);
  const auto n = ch.n_rows();
  CMatrix omega = CMatrix::Identity(n, n) * noise_power;
  for (int i = 0; i < ch.n_ues(); ++i) {
    const CMatrix hw = ch.matrices[i] * tx.comp[i];
    omega.noalias() += hw * hw.adjoint();
    for (const auto& v : tx.sense[i]) {
      const CVector hv = ch.matrices[i] * v;
      omega.noalias() += hv * hv.adjoint();
    }
  }
  // Force exact Hermitian symmetry.
  return (omega + omega.adjoint()) * 0.5;
}

CMatrix mmse_computation_receiver(const TransmitBeams& tx, const ChannelSet& ch,
                                  double noise_power) {
  const auto llt = factor_covariance(tx, ch, noise_power);
  CMatrix rhs = CMatrix::Zero(ch.n_rows(), tx.comp.front().cols());
  for (int k = 0; k < ch.n_ues(); ++k) rhs.noalias() += ch.matrices[k] * tx.comp[k];
  return llt.solve(rhs);
}

CVector mmse_sensing_receiver(int k, int j, const TransmitBeams& tx, const ChannelSet& ch,
                              double noise_power) {
  const auto llt = factor_covariance(tx, ch, noise_power);
  return llt.solve(ch.matrices[k] * tx.sense[k][j]);
}

ReceiveBeams mmse_receivers(const TransmitBeams& tx, const ChannelSet& ch, double noise_power) {
  const auto llt = factor_covariance(tx, ch, noise_power);
  ReceiveBeams rx;
  CMatrix rhs = CMatrix::Zero(ch.n_rows(), tx.comp.front().cols());
  for (int k = 0; k < ch.n_ues(); ++k) rhs.noalias() += ch.matrices[k] * tx.comp[k];
  rx.comp = llt.solve(rhs);
  rx.sense.resize(tx.sense.size());
  for (int k = 0; k < ch.n_ues(); ++k) {
    for (const auto& v : tx.sense[k]) rx.sense[k].push_back(llt.solve(ch.matrices[k] * v));
  }
  return rx;
}

double per_stream_mse(int k, int j, const ReceiveBeams& rx, const TransmitBeams& tx,
                      const ChannelSet& ch, double noise_power) {
  check_shapes(rx, tx, ch);
  const CVector& u = rx.sense[k][j];
  double quad = noise_power * u.squaredNorm();
  for (int i = 0; i < ch.n_ues(); ++i) {
    const Eigen::RowVectorXcd uh_h = u.adjoint() * ch.matrices[i];
    quad += (uh_h * tx.comp[i]).squaredNorm();
    for (const auto& v : tx.sense[i]) quad += std::norm((uh_h * v).value());
  }
  const cplx cross = u.dot(ch.matrices[k] * tx.sense[k][j]);
  return quad - 2.0 * cross.real() + 1.0;
}

double theorem2_identity_gap(int k, int j, const TransmitBeams& tx, const ChannelSet& ch,
                             double noise_power) {
  if (tx.sense.at(k).at(j).squaredNorm() == 0.0) {
    throw DomainError("theorem2_identity_gap: sensing beam is zero");
  }
  ReceiveBeams rx = mmse_receivers(tx, ch, noise_power);
  const double sinr = sensing_sinr(k, j, rx, tx, ch, noise_power, InterferenceModel::all_cross_streams);
  const double e = per_stream_mse(k, j, rx, tx, ch, noise_power);
  return std::abs((1.0 + sinr) * e - 1.0);
}

ConstraintReport constraint_report(const ReceiveBeams& rx, const TransmitBeams& tx,
                                   const ChannelSet& ch, const SystemConfig& config) {
  check_shapes(rx, tx, ch);
  ConstraintReport rep;
  bool feasible = true;
  for (int k = 0; k < ch.n_ues(); ++k) {
    const double p_max = config.power_budget[k];
    const double slack = p_max - tx.power(k);
    rep.per_ue_power_slack.push_back(slack);
    if (slack < -kFeasibilityTolerance * p_max) feasible = false;
  }
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < ch.n_ues(); ++k) {
    for (int j = 0; j < static_cast<int>(tx.sense[k].size()); ++j) {
      const double r = config.rate_thresholds(k, j);
      const double rate =
          std::log2(1.0 + sensing_sinr(k, j, rx, tx, ch, config.noise_power, config.interference_model));
      const double m = rate - r;
      margin = std::min(margin, m);
      if (m < -kFeasibilityTolerance * std::max(1.0, r)) feasible = false;
    }
  }
  rep.min_rate_margin = margin;
  if (std::isinf(config.mse_budget)) {
    rep.mse_budget_slack = std::numeric_limits<double>::infinity();
  } else {
    rep.mse_budget_slack = config.mse_budget - aircomp_mse(rx, tx, ch, config.noise_power);
    if (rep.mse_budget_slack < -kFeasibilityTolerance * std::max(1.0, config.mse_budget)) feasible = false;
  }
  rep.feasible = feasible;
  return rep;
}

}  // namespace scc
