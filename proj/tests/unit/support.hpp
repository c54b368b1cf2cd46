#pragma once

#include <vector>

#include "scc/random.hpp"
#include "scc/system_model.hpp"

namespace scc::test {

inline ChannelSet scalar_channels(std::vector<double> gains) {
  ChannelSet ch;
  for (double h : gains) ch.matrices.push_back(CMatrix::Constant(1, 1, cplx(h, 0.0)));
  return ch;
}

inline CMatrix random_matrix(Rng& rng, int rows, int cols, double variance = 1.0) {
  CMatrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = rng.cscg(variance);
  }
  return m;
}

inline CVector random_vector(Rng& rng, int n, double variance = 1.0) { return random_matrix(rng, n, 1, variance).col(0); }

struct Instance {
  ChannelSet ch;
  TransmitBeams tx;
  ReceiveBeams rx;
  double noise_power = 1.0;
};

/// Random channels, transmit beams and (non-MMSE) receivers.
inline Instance random_instance(Rng& rng, int k, int n, int m, int l, int j, double noise_power) {
  Instance in;
  in.noise_power = noise_power;
  for (int i = 0; i < k; ++i) in.ch.matrices.push_back(random_matrix(rng, n, m));
  in.tx = TransmitBeams::zeros(k, m, l, j);
  in.rx = ReceiveBeams::zeros(n, k, l, j);
  for (int i = 0; i < k; ++i) {
    in.tx.comp[i] = random_matrix(rng, m, l, 0.5);
    for (int s = 0; s < j; ++s) in.tx.sense[i][s] = random_vector(rng, m, 0.5);
  }
  in.rx.comp = random_matrix(rng, n, l, 0.3);
  for (int i = 0; i < k; ++i) {
    for (int s = 0; s < j; ++s) in.rx.sense[i][s] = random_vector(rng, n, 0.3);
  }
  return in;
}

inline int draw_int(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.uniform() * (hi - lo + 1)); }

/// Channels of a homogeneous configuration from one seed.
inline ChannelSet channels_for(const SystemConfig& cfg, std::uint64_t seed) {
  return generate_channels(cfg, place_ues(cfg, derive_seed(seed, 1)), derive_seed(seed, 2));
}

}  // namespace scc::test
