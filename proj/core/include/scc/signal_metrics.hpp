#pragma once

#include <vector>

#include "scc/system_model.hpp"

namespace scc {

/// Slack of each constraint family at a beam pair. Negative slack means the
/// constraint is violated.
struct ConstraintReport {
  std::vector<double> per_ue_power_slack;  ///< P_max,k - used_k
  double min_rate_margin = 0.0;            ///< min_kj log2(1 + SINR) - r_kj
  double mse_budget_slack = 0.0;           ///< rho - MSE (+inf when rho = inf)
  bool feasible = false;

  double min_power_slack() const;
};

inline constexpr double kFeasibilityTolerance = 1e-6;

/// Whether stream (i, m) interferes with the desired stream (k, j).
constexpr bool interferes(int i, int m, int k, int j, InterferenceModel model) {
  return model == InterferenceModel::all_cross_streams ? (i != k || m != j) : (i != k && m != j);
}

/// AirComp distortion: sum_k ||Z^H H_k W_k - I||_F^2 + s2 ||Z||_F^2
/// + sum_kj ||Z^H H_k v_kj||^2.
double aircomp_mse(const ReceiveBeams& rx, const TransmitBeams& tx, const ChannelSet& ch,
                   double noise_power);

/// SINR of sensing stream (k, j). A zero receiver yields 0.
double sensing_sinr(int k, int j, const ReceiveBeams& rx, const TransmitBeams& tx,
                    const ChannelSet& ch, double noise_power, InterferenceModel model);

/// sum_kj theta_kj log2(1 + SINR_kj).
double weighted_sum_rate(const ReceiveBeams& rx, const TransmitBeams& tx, const ChannelSet& ch,
                         double noise_power, const Eigen::MatrixXd& priorities,
                         InterferenceModel model);

/// Covariance of the received signal, s2 I + sum_i H_i Xi_i H_i^H with
/// Xi_i = W_i W_i^H + sum_m v_im v_im^H. Identical for every (k, j); the
/// desired stream is included.
CMatrix interference_covariance(int k, int j, const TransmitBeams& tx, const ChannelSet& ch,
                                double noise_power);

/// Z = Omega^{-1} sum_k H_k W_k.
CMatrix mmse_computation_receiver(const TransmitBeams& tx, const ChannelSet& ch,
                                  double noise_power);

/// u_kj = Omega^{-1} H_k v_kj.
CVector mmse_sensing_receiver(int k, int j, const TransmitBeams& tx, const ChannelSet& ch,
                              double noise_power);

/// All MMSE receivers, sharing one factorization of Omega.
ReceiveBeams mmse_receivers(const TransmitBeams& tx, const ChannelSet& ch, double noise_power);

/// E|u^H y - s'_kj|^2 for an arbitrary receiver u_kj.
double per_stream_mse(int k, int j, const ReceiveBeams& rx, const TransmitBeams& tx,
                      const ChannelSet& ch, double noise_power);

/// |(1 + SINR) e - 1| at the MMSE sensing receiver, SINR under
/// all_cross_streams. Throws DomainError for a zero sensing beam.
double theorem2_identity_gap(int k, int j, const TransmitBeams& tx, const ChannelSet& ch,
                             double noise_power);

/// Power, rate and MSE-budget slacks under the configured interference model.
ConstraintReport constraint_report(const ReceiveBeams& rx, const TransmitBeams& tx,
                                   const ChannelSet& ch, const SystemConfig& config);

/// Throws ContractError unless tx/rx shapes agree with the channel set.
void check_shapes(const TransmitBeams& tx, const ChannelSet& ch);
void check_shapes(const ReceiveBeams& rx, const TransmitBeams& tx, const ChannelSet& ch);

}  // namespace scc
