#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "scc/errors.hpp"
#include "scc/system_model.hpp"

namespace scc {
namespace {

SystemConfig desk_config(int k = 8) { return SystemConfig::uniform(16, k, 2, 1, 1, 1e-8, 1e-8 * 3.0, 0.5); }

TEST(PlaceUes, DistancesInsideTheCell) {
  SystemConfig cfg = SystemConfig::uniform(64, 32, 2, 1, 1, 1e-8, 1.0, 0.5);
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const Topology t = place_ues(cfg, seed);
    ASSERT_EQ(t.distances_km.size(), 32u);
    for (double d : t.distances_km) {
      EXPECT_LE(d, 0.5);
      EXPECT_GE(d, 0.01);
    }
  }
}

TEST(PlaceUes, Deterministic) {
  const SystemConfig cfg = desk_config();
  EXPECT_EQ(place_ues(cfg, 7).distances_km, place_ues(cfg, 7).distances_km);
  EXPECT_NE(place_ues(cfg, 7).distances_km, place_ues(cfg, 8).distances_km);
}

TEST(PlaceUes, AreaUniformSecondMoment) {
  const SystemConfig cfg = SystemConfig::uniform(1, 100000, 1, 1, 1, 1.0, 1.0, 0.0);
  const Topology t = place_ues(cfg, 12345);
  double sum = 0.0;
  for (double d : t.distances_km) sum += d * d;
  const double mean = sum / t.distances_km.size();
  const double r = 0.5;
  const double dmin = 0.01;
  EXPECT_NEAR(mean, (r * r + dmin * dmin) / 2.0, 0.01 * (r * r + dmin * dmin) / 2.0);
}

TEST(PathLoss, KnownDistances) {
  EXPECT_NEAR(path_loss_db(0.1), 90.5, 1e-12);
  EXPECT_NEAR(path_loss_db(1.0), 128.1, 1e-12);
  // 128.1 - 37.6 * 0.301029995663981195...
  EXPECT_NEAR(path_loss_db(0.5), 116.781, 1e-3);
  EXPECT_NEAR(path_loss_db(0.5), 116.78127216303426, 1e-10);
}

TEST(PathLoss, NonPositiveDistanceIsDomainError) {
  EXPECT_THROW(path_loss_db(0.0), DomainError);
  EXPECT_THROW(path_loss_db(-1.0), DomainError);
}

TEST(GenerateChannels, Shapes) {
  const SystemConfig cfg = SystemConfig::uniform(5, 3, 2, 1, 1, 1e-8, 1.0, 0.5);
  const ChannelSet ch = generate_channels(cfg, place_ues(cfg, 1), 2);
  ASSERT_EQ(ch.matrices.size(), 3u);
  for (const CMatrix& h : ch.matrices) {
    EXPECT_EQ(h.rows(), 5);
    EXPECT_EQ(h.cols(), 2);
    EXPECT_TRUE(h.allFinite());
  }
}

TEST(GenerateChannels, BitIdenticalRegeneration) {
  const SystemConfig cfg = desk_config();
  const ChannelSet a = generate_channels(cfg, place_ues(cfg, 3), 4);
  const ChannelSet b = generate_channels(cfg, place_ues(cfg, 3), 4);
  for (std::size_t k = 0; k < a.matrices.size(); ++k) {
    EXPECT_EQ(0, std::memcmp(a.matrices[k].data(), b.matrices[k].data(), sizeof(cplx) * a.matrices[k].size()));
  }
}

double second_moment(const ChannelSet& ch) {
  double s = 0.0;
  std::size_t n = 0;
  for (const CMatrix& h : ch.matrices) {
    s += h.squaredNorm();
    n += h.size();
  }
  return s / n;
}

TEST(GenerateChannels, NormalizedSecondMoment) {
  const SystemConfig cfg = SystemConfig::uniform(100, 10, 100, 1, 1, 1e-8, 1.0, 0.5);
  const ChannelSet ch = generate_channels(cfg, place_ues(cfg, 5), 6);
  EXPECT_NEAR(second_moment(ch), 1.0, 0.02);
}

TEST(GenerateChannels, GeometricSecondMoment) {
  SystemConfig cfg = SystemConfig::uniform(100, 10, 100, 1, 1, 1e-8, 1.0, 0.5);
  cfg.channel_mode = ChannelMode::geometric;
  Topology topo;
  topo.distances_km.assign(10, 0.1);
  const ChannelSet ch = generate_channels(cfg, topo, 6);
  const double expected = std::pow(10.0, -9.05);
  EXPECT_NEAR(second_moment(ch) / expected, 1.0, 0.02);
}

TEST(InitialBeams, SaturatesBudget) {
  SystemConfig cfg = SystemConfig::uniform(4, 3, 2, 2, 3, 1e-8, 1.0, 0.5);
  cfg.power_budget = {1.0, 2.5, 0.3};
  const TransmitBeams tx = initial_transmit_beams(cfg);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(tx.power(k), cfg.power_budget[k], 1e-12 * cfg.power_budget[k]);
}

TEST(InitialBeams, UnitBudgetValues) {
  const SystemConfig cfg = SystemConfig::uniform(4, 1, 2, 1, 1, 1e-8, 1.0, 0.5);
  const TransmitBeams tx = initial_transmit_beams(cfg);
  EXPECT_NEAR(tx.comp[0](0, 0).real(), std::sqrt(0.5), 1e-15);
  EXPECT_EQ(tx.comp[0](1, 0), cplx(0.0));
  EXPECT_NEAR(tx.sense[0][0](0).real(), std::sqrt(0.5), 1e-15);
  EXPECT_EQ(tx.sense[0][0](1), cplx(0.0));
}

TEST(Nomographic, TableExamples) {
  const auto q = [](NomographicKind kind, std::vector<double> d) {
    NomographicSpec s{kind, {}, {}};
    const auto g = preprocess(s, d);
    return postprocess(s, std::accumulate(g.begin(), g.end(), 0.0), d.size());
  };
  EXPECT_DOUBLE_EQ(q(NomographicKind::arithmetic_mean, {1, 3}), 2.0);
  EXPECT_NEAR(q(NomographicKind::geometric_mean, {2, 8}), 4.0, 1e-12);
  EXPECT_NEAR(q(NomographicKind::euclidean_norm, {3, 4}), 5.0, 1e-12);
}

TEST(Nomographic, RoundTripMatchesDirectFunction) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * 10);
    std::vector<double> d(k), w(k), b(k);
    for (std::size_t i = 0; i < k; ++i) {
      d[i] = 0.1 + 5.0 * rng.uniform();
      w[i] = rng.normal();
      b[i] = 3.0 * rng.uniform();
    }
    double mean = 0, wsum = 0, logsum = 0, poly = 0, sq = 0;
    for (std::size_t i = 0; i < k; ++i) {
      mean += d[i] / k;
      wsum += w[i] * d[i];
      logsum += std::log(d[i]);
      poly += w[i] * std::pow(d[i], b[i]);
      sq += d[i] * d[i];
    }
    const std::vector<std::pair<NomographicSpec, double>> cases = {
        {{NomographicKind::arithmetic_mean, {}, {}}, mean},
        {{NomographicKind::weighted_sum, w, {}}, wsum},
        {{NomographicKind::geometric_mean, {}, {}}, std::exp(logsum / k)},
        {{NomographicKind::polynomial, w, b}, poly},
        {{NomographicKind::euclidean_norm, {}, {}}, std::sqrt(sq)},
    };
    for (const auto& [spec, direct] : cases) {
      const auto g = preprocess(spec, d);
      const double got = postprocess(spec, std::accumulate(g.begin(), g.end(), 0.0), k);
      EXPECT_LE(std::abs(got - direct), 1e-10 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST(Nomographic, DomainAndShapeErrors) {
  const std::vector<double> bad = {1.0, -2.0};
  EXPECT_THROW(preprocess({NomographicKind::geometric_mean, {}, {}}, bad), DomainError);
  EXPECT_THROW(preprocess({NomographicKind::weighted_sum, {1.0}, {}}, bad), ContractError);
  EXPECT_THROW(preprocess({NomographicKind::polynomial, {1.0, 1.0}, {1.0}}, bad), ContractError);
}

ChannelSet unit_channel() {
  ChannelSet ch;
  ch.matrices = {CMatrix::Ones(1, 1)};
  return ch;
}

TEST(SimulateUplink, NoiselessIdentityChain) {
  TransmitBeams tx = TransmitBeams::zeros(1, 1, 1, 1);
  tx.comp[0](0, 0) = 1.0;
  const std::vector<CVector> s = {CVector::Ones(1)};
  const std::vector<std::vector<cplx>> sp = {{cplx(0.0)}};
  const CVector y = simulate_uplink(unit_channel(), tx, s, sp, 0.0, 1);
  EXPECT_NEAR(std::abs(y(0) - 1.0), 0.0, 1e-15);
}

TEST(SimulateUplink, ZeroBeamsLeaveOnlyNoise) {
  const SystemConfig cfg = SystemConfig::uniform(4, 2, 2, 1, 1, 0.3, 1.0, 0.5);
  const ChannelSet ch = generate_channels(cfg, place_ues(cfg, 1), 2);
  const TransmitBeams zero = TransmitBeams::zeros(2, 2, 1, 1);
  TransmitBeams some = initial_transmit_beams(cfg);
  const std::vector<CVector> s(2, CVector::Ones(1));
  const std::vector<std::vector<cplx>> sp(2, {cplx(1.0)});
  const CVector noise = simulate_uplink(ch, zero, s, sp, 0.3, 42);
  const CVector full = simulate_uplink(ch, some, s, sp, 0.3, 42);
  CVector signal = CVector::Zero(4);
  for (int k = 0; k < 2; ++k) signal += ch.matrices[k] * (some.comp[k] * s[k] + some.sense[k][0] * sp[k][0]);
  EXPECT_LE((full - signal - noise).norm(), 1e-12);
  EXPECT_GT(noise.norm(), 0.0);
}

TEST(SimulateUplink, NoiseCovariance) {
  const SystemConfig cfg = SystemConfig::uniform(3, 2, 2, 1, 1, 0.5, 1.0, 0.5);
  const ChannelSet ch = generate_channels(cfg, place_ues(cfg, 1), 2);
  const TransmitBeams tx = initial_transmit_beams(cfg);
  const std::vector<CVector> s(2, CVector::Ones(1));
  const std::vector<std::vector<cplx>> sp(2, {cplx(0.5, -0.5)});
  CVector mean = CVector::Zero(3);
  for (int k = 0; k < 2; ++k) mean += ch.matrices[k] * (tx.comp[k] * s[k] + tx.sense[k][0] * sp[k][0]);
  Rng rng(9);
  CMatrix cov = CMatrix::Zero(3, 3);
  const int draws = 100000;
  for (int d = 0; d < draws; ++d) {
    const CVector e = simulate_uplink(ch, tx, s, sp, 0.5, rng) - mean;
    cov += e * e.adjoint();
  }
  cov /= draws;
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(cov(i, i).real(), 0.5, 0.02 * 0.5);
    for (int j = 0; j < 3; ++j) {
      if (i != j) EXPECT_LE(std::abs(cov(i, j)), 0.02 * 0.5);
    }
  }
}

TEST(SimulateUplink, ShapeMismatchIsContractError) {
  TransmitBeams tx = TransmitBeams::zeros(1, 1, 1, 1);
  const std::vector<CVector> s = {CVector::Ones(2)};
  const std::vector<std::vector<cplx>> sp = {{cplx(0.0)}};
  EXPECT_THROW(simulate_uplink(unit_channel(), tx, s, sp, 1.0, 1), ContractError);
  const std::vector<CVector> none;
  EXPECT_THROW(simulate_uplink(unit_channel(), tx, none, sp, 1.0, 1), ContractError);
}

TEST(SystemConfig, ValidateRejectsBadValues) {
  SystemConfig ok = desk_config();
  EXPECT_NO_THROW(ok.validate());
  const auto expect_bad = [&](auto mutate) {
    SystemConfig c = ok;
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  expect_bad([](SystemConfig& c) { c.n_ues = 0; });
  expect_bad([](SystemConfig& c) { c.noise_power = 0.0; });
  expect_bad([](SystemConfig& c) { c.power_budget[0] = -1.0; });
  expect_bad([](SystemConfig& c) { c.priorities(0, 0) = 0.0; });
  expect_bad([](SystemConfig& c) { c.rate_thresholds(0, 0) = -0.1; });
  expect_bad([](SystemConfig& c) { c.mse_budget = -1.0; });
  expect_bad([](SystemConfig& c) { c.min_ue_distance = 600.0; });
  expect_bad([](SystemConfig& c) { c.power_budget.pop_back(); });
}

TEST(SystemConfig, SinrTargets) {
  SystemConfig c = desk_config(2);
  c.rate_thresholds(1, 0) = 1.0;
  EXPECT_NEAR(c.sinr_target(0, 0), std::sqrt(2.0) - 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(c.sinr_target(1, 0), 1.0);
}

}  // namespace
}  // namespace scc
