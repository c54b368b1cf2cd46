#include "scc/system_model.hpp"

#include <cmath>
#include <string>

#include "scc/errors.hpp"

namespace scc {

SystemConfig SystemConfig::uniform(int n, int k, int m, int l, int j, double noise_power,
                                   double power, double rate, double priority,
                                   double mse_budget) {
  SystemConfig c;
  c.n_bs_antennas = n;
  c.n_ues = k;
  c.n_ue_antennas = m;
  c.n_comp_streams = l;
  c.n_sense_streams = j;
  c.noise_power = noise_power;
  c.power_budget.assign(static_cast<std::size_t>(k), power);
  c.rate_thresholds = Eigen::MatrixXd::Constant(k, j, rate);
  c.priorities = Eigen::MatrixXd::Constant(k, j, priority);
  c.mse_budget = mse_budget;
  return c;
}

void SystemConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid system config: " + what); };
  if (n_bs_antennas < 1 || n_ues < 1 || n_ue_antennas < 1 || n_comp_streams < 1 ||
      n_sense_streams < 1) {
    fail("all antenna and stream counts must be >= 1");
  }
  if (!(noise_power > 0.0) || !std::isfinite(noise_power)) fail("noise_power must be positive");
  if (power_budget.size() != static_cast<std::size_t>(n_ues)) fail("power_budget needs K entries");
  for (double p : power_budget) {
    if (!(p > 0.0) || !std::isfinite(p)) fail("every power budget must be positive");
  }
  if (rate_thresholds.rows() != n_ues || rate_thresholds.cols() != n_sense_streams) {
    fail("rate_thresholds must be K x J");
  }
  if (priorities.rows() != n_ues || priorities.cols() != n_sense_streams) {
    fail("priorities must be K x J");
  }
  for (int k = 0; k < n_ues; ++k) {
    for (int j = 0; j < n_sense_streams; ++j) {
      if (!(priorities(k, j) > 0.0)) fail("priorities must be positive");
      const double r = rate_thresholds(k, j);
      if (!(r >= 0.0) || !std::isfinite(std::exp2(r))) fail("rate thresholds must be >= 0 and finite");
    }
  }
  if (!(mse_budget >= 0.0)) fail("mse_budget must be >= 0");
  if (!(min_ue_distance > 0.0) || !(min_ue_distance < cell_radius)) {
    fail("need 0 < min_ue_distance < cell_radius");
  }
}

double SystemConfig::sinr_target(int k, int j) const {
  return std::exp2(rate_thresholds(k, j)) - 1.0;
}

TransmitBeams TransmitBeams::zeros(int k, int m, int l, int j) {
  TransmitBeams tx;
  tx.comp.assign(static_cast<std::size_t>(k), CMatrix::Zero(m, l));
  tx.sense.assign(static_cast<std::size_t>(k),
                  std::vector<CVector>(static_cast<std::size_t>(j), CVector::Zero(m)));
  return tx;
}

double TransmitBeams::power(int k) const {
  double p = comp[k].squaredNorm();
  for (const auto& v : sense[k]) p += v.squaredNorm();
  return p;
}

ReceiveBeams ReceiveBeams::zeros(int n, int k, int l, int j) {
  ReceiveBeams rx;
  rx.comp = CMatrix::Zero(n, l);
  rx.sense.assign(static_cast<std::size_t>(k),
                  std::vector<CVector>(static_cast<std::size_t>(j), CVector::Zero(n)));
  return rx;
}

Topology place_ues(const SystemConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  const double r_max2 = config.cell_radius * config.cell_radius;
  const double r_min2 = config.min_ue_distance * config.min_ue_distance;
  Topology topo;
  topo.placement_seed = seed;
  topo.distances_km.reserve(static_cast<std::size_t>(config.n_ues));
  for (int k = 0; k < config.n_ues; ++k) {
    const double r = std::sqrt(r_min2 + rng.uniform() * (r_max2 - r_min2));
    topo.distances_km.push_back(r / 1000.0);
  }
  return topo;
}

double path_loss_db(double distance_km) {
  if (!(distance_km > 0.0)) {
    throw DomainError("path_loss_db: distance must be positive, got " + std::to_string(distance_km));
  }
  return 128.1 + 37.6 * std::log10(distance_km);
}

ChannelSet generate_channels(const SystemConfig& config, const Topology& topology,
                             std::uint64_t seed) {
  if (topology.distances_km.size() != static_cast<std::size_t>(config.n_ues)) {
    throw ContractError("generate_channels: topology has wrong number of UEs");
  }
  Rng rng(seed);
  ChannelSet ch;
  ch.fading_seed = seed;
  ch.topology = topology;
  ch.mode = config.channel_mode;
  ch.matrices.reserve(static_cast<std::size_t>(config.n_ues));
  for (int k = 0; k < config.n_ues; ++k) {
    double gain = 1.0;
    if (config.channel_mode == ChannelMode::geometric) {
      gain = std::pow(10.0, -path_loss_db(topology.distances_km[k]) / 10.0);
    }
    CMatrix h(config.n_bs_antennas, config.n_ue_antennas);
    for (int c = 0; c < h.cols(); ++c) {
      for (int r = 0; r < h.rows(); ++r) h(r, c) = rng.cscg(gain);
    }
    ch.matrices.push_back(std::move(h));
  }
  return ch;
}

TransmitBeams initial_transmit_beams(const SystemConfig& config) {
  const int k_count = config.n_ues;
  const int j_count = config.n_sense_streams;
  TransmitBeams tx = TransmitBeams::zeros(k_count, config.n_ue_antennas, config.n_comp_streams, j_count);
  for (int k = 0; k < k_count; ++k) {
    const double p = config.power_budget[k];
    tx.comp[k](0, 0) = std::sqrt(p / 2.0);
    for (int j = 0; j < j_count; ++j) tx.sense[k][j](0) = std::sqrt(p / (2.0 * j_count));
  }
  return tx;
}

std::vector<double> preprocess(const NomographicSpec& spec, std::span<const double> data) {
  const std::size_t k_count = data.size();
  const bool needs_weights =
      spec.kind == NomographicKind::weighted_sum || spec.kind == NomographicKind::polynomial;
  if (needs_weights && spec.weights.size() != k_count) {
    throw ContractError("preprocess: weights must have one entry per source");
  }
  if (spec.kind == NomographicKind::polynomial && spec.exponents.size() != k_count) {
    throw ContractError("preprocess: exponents must have one entry per source");
  }
  std::vector<double> out(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const double d = data[k];
    switch (spec.kind) {
      case NomographicKind::arithmetic_mean:
        out[k] = d;
        break;
      case NomographicKind::weighted_sum:
        out[k] = spec.weights[k] * d;
        break;
      case NomographicKind::geometric_mean:
        if (!(d > 0.0)) throw DomainError("preprocess: geometric mean needs positive data");
        out[k] = std::log(d);
        break;
      case NomographicKind::polynomial:
        out[k] = spec.weights[k] * std::pow(d, spec.exponents[k]);
        break;
      case NomographicKind::euclidean_norm:
        out[k] = d * d;
        break;
    }
  }
  return out;
}

double postprocess(const NomographicSpec& spec, double fused, std::size_t n_sources) {
  switch (spec.kind) {
    case NomographicKind::arithmetic_mean:
      if (n_sources == 0) throw DomainError("postprocess: arithmetic mean of zero sources");
      return fused / static_cast<double>(n_sources);
    case NomographicKind::weighted_sum:
    case NomographicKind::polynomial:
      return fused;
    case NomographicKind::geometric_mean:
      if (n_sources == 0) throw DomainError("postprocess: geometric mean of zero sources");
      return std::exp(fused / static_cast<double>(n_sources));
    case NomographicKind::euclidean_norm:
      if (fused < 0.0) throw DomainError("postprocess: norm of a negative sum of squares");
      return std::sqrt(fused);
  }
  return fused;
}

CVector simulate_uplink(const ChannelSet& channels, const TransmitBeams& tx,
                        std::span<const CVector> comp_symbols,
                        const std::vector<std::vector<cplx>>& sense_symbols,
                        double noise_power, Rng& noise) {
  const int k_count = channels.n_ues();
  if (tx.comp.size() != static_cast<std::size_t>(k_count) ||
      tx.sense.size() != static_cast<std::size_t>(k_count) ||
      comp_symbols.size() != static_cast<std::size_t>(k_count) ||
      sense_symbols.size() != static_cast<std::size_t>(k_count)) {
    throw ContractError("simulate_uplink: per-UE inputs must have K entries");
  }
  const int n = channels.n_rows();
  CVector x(channels.n_cols());
  CVector y(n);
  for (int r = 0; r < n; ++r) y(r) = noise.cscg(noise_power);
  for (int k = 0; k < k_count; ++k) {
    const CMatrix& w = tx.comp[k];
    if (w.rows() != channels.n_cols() || w.cols() != comp_symbols[k].size() ||
        tx.sense[k].size() != sense_symbols[k].size()) {
      throw ContractError("simulate_uplink: beam/symbol shape mismatch for UE " + std::to_string(k));
    }
    x.noalias() = w * comp_symbols[k];
    for (std::size_t j = 0; j < tx.sense[k].size(); ++j) {
      if (tx.sense[k][j].size() != x.size()) throw ContractError("simulate_uplink: sense beam length");
      x += tx.sense[k][j] * sense_symbols[k][j];
    }
    y.noalias() += channels.matrices[k] * x;
  }
  return y;
}

CVector simulate_uplink(const ChannelSet& channels, const TransmitBeams& tx,
                        std::span<const CVector> comp_symbols,
                        const std::vector<std::vector<cplx>>& sense_symbols,
                        double noise_power, std::uint64_t noise_seed) {
  Rng rng(noise_seed);
  return simulate_uplink(channels, tx, comp_symbols, sense_symbols, noise_power, rng);
}

}  // namespace scc
