#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "scc/random.hpp"

namespace scc {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Which streams count as interference in a sensing SINR.
enum class InterferenceModel {
  all_cross_streams,  ///< every stream except the desired one
  paper_literal,      ///< only streams (i, m) with i != k and m != j
};

enum class ChannelMode {
  normalized,  ///< unit average gain per entry
  geometric,   ///< 128.1 + 37.6 log10(d_km) path loss on top of Rayleigh fading
};

/// Scalar system parameters of the uplink.
struct SystemConfig {
  int n_bs_antennas = 16;   // N
  int n_ues = 8;            // K
  int n_ue_antennas = 2;    // M
  int n_comp_streams = 1;   // L
  int n_sense_streams = 1;  // J
  double noise_power = 1e-8;
  std::vector<double> power_budget;  // length K
  Eigen::MatrixXd rate_thresholds;   // K x J, bits/s/Hz
  Eigen::MatrixXd priorities;        // K x J
  double mse_budget = std::numeric_limits<double>::infinity();
  double cell_radius = 500.0;
  double min_ue_distance = 10.0;
  InterferenceModel interference_model = InterferenceModel::all_cross_streams;
  ChannelMode channel_mode = ChannelMode::normalized;

  /// Homogeneous configuration: every UE gets the same budget, threshold and
  /// priority.
  static SystemConfig uniform(int n, int k, int m, int l, int j, double noise_power,
                              double power, double rate, double priority = 1.0,
                              double mse_budget = std::numeric_limits<double>::infinity());

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;

  /// 2^r - 1 for stream (k, j).
  double sinr_target(int k, int j) const;
};

struct Topology {
  std::vector<double> distances_km;
  std::uint64_t placement_seed = 0;
};

struct ChannelSet {
  std::vector<CMatrix> matrices;  // K matrices, N x M
  std::uint64_t fading_seed = 0;
  Topology topology;
  ChannelMode mode = ChannelMode::normalized;

  int n_ues() const { return static_cast<int>(matrices.size()); }
  int n_rows() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows()); }
  int n_cols() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().cols()); }
};

struct TransmitBeams {
  std::vector<CMatrix> comp;                // K matrices, M x L
  std::vector<std::vector<CVector>> sense;  // K x J vectors, length M

  static TransmitBeams zeros(int k, int m, int l, int j);
  double power(int k) const;
};

struct ReceiveBeams {
  CMatrix comp;                             // N x L
  std::vector<std::vector<CVector>> sense;  // K x J vectors, length N

  static ReceiveBeams zeros(int n, int k, int l, int j);
};

enum class NomographicKind { arithmetic_mean, weighted_sum, geometric_mean, polynomial, euclidean_norm };

struct NomographicSpec {
  NomographicKind kind = NomographicKind::arithmetic_mean;
  std::vector<double> weights;    // weighted_sum, polynomial
  std::vector<double> exponents;  // polynomial
};

/// Area-uniform UE placement over the annulus [min_ue_distance, cell_radius].
Topology place_ues(const SystemConfig& config, std::uint64_t seed);

/// 128.1 + 37.6 log10(d), d in km. Throws DomainError for d <= 0.
double path_loss_db(double distance_km);

/// Rayleigh block fading H_k = sqrt(g_k) G_k, G_k with i.i.d. CN(0, 1) entries.
ChannelSet generate_channels(const SystemConfig& config, const Topology& topology,
                             std::uint64_t seed);

/// Power split between computation and sensing used to start both
/// alternating loops: W_k = sqrt(P/2) e1 e1^T, v_kj = sqrt(P/(2J)) e1.
TransmitBeams initial_transmit_beams(const SystemConfig& config);

std::vector<double> preprocess(const NomographicSpec& spec, std::span<const double> data);
double postprocess(const NomographicSpec& spec, double fused, std::size_t n_sources);

/// y = sum_k H_k (W_k s_k + sum_j v_kj s'_kj) + n, n ~ CN(0, noise_power I).
CVector simulate_uplink(const ChannelSet& channels, const TransmitBeams& tx,
                        std::span<const CVector> comp_symbols,
                        const std::vector<std::vector<cplx>>& sense_symbols,
                        double noise_power, std::uint64_t noise_seed);

/// Same as above, drawing the noise from a caller-owned generator.
CVector simulate_uplink(const ChannelSet& channels, const TransmitBeams& tx,
                        std::span<const CVector> comp_symbols,
                        const std::vector<std::vector<cplx>>& sense_symbols,
                        double noise_power, Rng& noise);

}  // namespace scc
