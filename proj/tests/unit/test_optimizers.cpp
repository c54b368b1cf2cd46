#include <gtest/gtest.h>

#include <cmath>

#include "scc/errors.hpp"
#include "scc/optimizers.hpp"
#include "support.hpp"

namespace scc {
namespace {

constexpr double kNoise = 1e-8;

SystemConfig desk(double snr_db = 5.0, double rate = 0.5, double per_ue_budget = INFINITY) {
  const double p0 = kNoise * std::pow(10.0, snr_db / 10.0);
  return SystemConfig::uniform(8, 4, 2, 1, 1, kNoise, p0, rate, 1.0, per_ue_budget * 4);
}

SystemConfig desk_wsr() { return desk(5.0, 0.5, 0.3); }

double traced_increase(const ConvergenceTrace& t) {
  double worst = 0.0;
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    worst = std::max(worst, t.records[i].objective - t.records[i - 1].objective);
  }
  return worst;
}

TEST(OptimizerOptions, Validation) {
  OptimizerOptions o;
  EXPECT_NO_THROW(o.validate());
  o.rel_tol = 1.0;
  EXPECT_THROW(o.validate(), ConfigError);
  o = OptimizerOptions{};
  o.max_iterations = 0;
  EXPECT_THROW(o.validate(), ConfigError);
  o = OptimizerOptions{};
  o.subproblem_tol = -1e-7;
  EXPECT_THROW(o.validate(), ConfigError);
}

TEST(ConvergenceTrace, MonotoneAndRankGap) {
  ConvergenceTrace t;
  for (double v : {3.0, 2.0, 2.0 + 5e-8, 1.0}) {
    TraceRecord r;
    r.objective = v;
    r.max_rank_gap = v * 1e-6;
    t.records.push_back(r);
  }
  EXPECT_TRUE(t.monotone(false, 1e-7));
  EXPECT_FALSE(t.monotone(false, 1e-8));
  EXPECT_FALSE(t.monotone(true, 1e-7));
  EXPECT_DOUBLE_EQ(t.max_rank_gap(), 3e-6);
}

TEST(RunCem, TracesAreNonIncreasing) {
  const SystemConfig cfg = desk();
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const SolveOutcome out = run_cem(cfg, test::channels_for(cfg, seed), OptimizerOptions{});
    EXPECT_LE(traced_increase(out.trace), 1e-7) << "seed " << seed;
    for (const TraceRecord& r : out.trace.records) EXPECT_GE(r.objective, 0.0);
  }
}

TEST(RunWsr, TracesAreNonDecreasing) {
  const SystemConfig cfg = desk_wsr();
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const SolveOutcome out = run_wsr(cfg, test::channels_for(cfg, seed), OptimizerOptions{});
    EXPECT_TRUE(out.trace.monotone(true, 1e-7)) << "seed " << seed;
  }
}

TEST(RunCem, DeskInstanceConvergesWithinFiftyIterations) {
  const SystemConfig cfg = desk();
  const SolveOutcome out = run_cem(cfg, test::channels_for(cfg, 7), OptimizerOptions{});
  EXPECT_TRUE(out.converged);
  EXPECT_LE(out.iterations(), 50);
  EXPECT_GE(out.report.min_rate_margin, -1e-4);
}

TEST(RunWsr, DeskInstanceConvergesWithinThirtyIterations) {
  const SystemConfig cfg = desk_wsr();
  const SolveOutcome out = run_wsr(cfg, test::channels_for(cfg, 7), OptimizerOptions{});
  EXPECT_TRUE(out.converged);
  EXPECT_LE(out.iterations(), 30);
}

TEST(RunCem, UnreachableRateIsInfeasible) {
  const SystemConfig cfg = desk(0.0, 20.0);
  const SolveOutcome out = run_cem(cfg, test::channels_for(cfg, 3), OptimizerOptions{});
  EXPECT_EQ(out.status, OutcomeStatus::infeasible);
  EXPECT_FALSE(out.converged);
}

TEST(RunCem, ConvergedOutcomesAreFeasibleAndRankOne) {
  const SystemConfig cfg = desk();
  OptimizerOptions opts;
  opts.max_iterations = 200;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ChannelSet ch = test::channels_for(cfg, seed);
    const SolveOutcome out = run_cem(cfg, ch, opts);
    ASSERT_EQ(out.status, OutcomeStatus::converged) << "seed " << seed;
    EXPECT_TRUE(out.report.feasible);
    EXPECT_GE(out.report.min_rate_margin, -1e-4);
    EXPECT_GE(out.report.min_power_slack(), -1e-6 * cfg.power_budget[0]);
    EXPECT_LE(out.trace.max_rank_gap(), 1e-4);
    EXPECT_NEAR(out.objective, aircomp_mse(out.rx, out.tx, ch, cfg.noise_power), 1e-9 * out.objective);
  }
}

TEST(RunWsr, WeightsAreSelfConsistentAtConvergence) {
  const SystemConfig cfg = desk_wsr();
  OptimizerOptions opts;
  opts.max_iterations = 200;
  const ChannelSet ch = test::channels_for(cfg, 4);
  const SolveOutcome out = run_wsr(cfg, ch, opts);
  ASSERT_EQ(out.status, OutcomeStatus::converged);
  const ReceiveBeams rx = mmse_receivers(out.tx, ch, cfg.noise_power);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(out.weights(k, 0) * per_stream_mse(k, 0, rx, out.tx, ch, cfg.noise_power), 1.0, 1e-3);
  }
  EXPECT_GE(out.report.mse_budget_slack, -1e-4 * cfg.mse_budget);
  EXPECT_GE(out.report.min_power_slack(), -1e-6 * cfg.power_budget[0]);
}

TEST(RunWsr, BelowMseFloorIsInfeasible) {
  const SystemConfig base = desk();
  const ChannelSet ch = test::channels_for(base, 5);
  const double floor = min_achievable_mse(base, ch, OptimizerOptions{});
  SystemConfig cfg = base;
  cfg.mse_budget = 0.5 * floor;
  const SolveOutcome out = run_wsr(cfg, ch, OptimizerOptions{});
  EXPECT_EQ(out.status, OutcomeStatus::infeasible);
  EXPECT_FALSE(out.message.empty());
}

TEST(RunWsr, BelowCrudeUpperBound) {
  const SystemConfig cfg = desk_wsr();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ChannelSet ch = test::channels_for(cfg, seed);
    const SolveOutcome out = run_wsr(cfg, ch, OptimizerOptions{});
    double max_gain = 0.0;
    for (const CMatrix& h : ch.matrices) max_gain = std::max(max_gain, h.squaredNorm());
    const double bound = cfg.priorities.sum() * std::log2(1.0 + cfg.power_budget[0] * max_gain / cfg.noise_power);
    EXPECT_LE(out.objective, bound);
    EXPECT_GE(out.objective, 0.0);
  }
}

TEST(Optimizers, Deterministic) {
  const SystemConfig cfg = desk_wsr();
  const ChannelSet ch = test::channels_for(cfg, 11);
  for (int algo = 0; algo < 2; ++algo) {
    const SolveOutcome a = algo ? run_wsr(cfg, ch, OptimizerOptions{}) : run_cem(cfg, ch, OptimizerOptions{});
    const SolveOutcome b = algo ? run_wsr(cfg, ch, OptimizerOptions{}) : run_cem(cfg, ch, OptimizerOptions{});
    ASSERT_EQ(a.iterations(), b.iterations());
    for (int i = 0; i < a.iterations(); ++i) EXPECT_EQ(a.trace.records[i].objective, b.trace.records[i].objective);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(a.tx.comp[k], b.tx.comp[k]);
  }
}

TEST(MinAchievableMse, ZeroChannelsLeaveEveryTerm) {
  const SystemConfig cfg = SystemConfig::uniform(4, 3, 2, 2, 1, 1e-2, 1.0, 0.0);
  ChannelSet ch;
  for (int k = 0; k < 3; ++k) ch.matrices.push_back(CMatrix::Zero(4, 2));
  EXPECT_NEAR(min_achievable_mse(cfg, ch, OptimizerOptions{}), 6.0, 1e-9);
}

TEST(MinAchievableMse, BelowRandomFeasibleBeams) {
  const SystemConfig cfg = desk();
  const ChannelSet ch = test::channels_for(cfg, 6);
  const double floor = min_achievable_mse(cfg, ch, OptimizerOptions{});
  Rng rng(60);
  for (int t = 0; t < 10; ++t) {
    TransmitBeams tx = TransmitBeams::zeros(4, 2, 1, 1);
    for (int k = 0; k < 4; ++k) {
      tx.comp[k] = test::random_matrix(rng, 2, 1);
      tx.sense[k][0] = test::random_vector(rng, 2);
      const double used = tx.comp[k].squaredNorm() + tx.sense[k][0].squaredNorm();
      const double scale = std::sqrt(cfg.power_budget[k] * rng.uniform() / used);
      tx.comp[k] *= scale;
      tx.sense[k][0] *= scale;
    }
    EXPECT_LE(floor, aircomp_mse(mmse_receivers(tx, ch, cfg.noise_power), tx, ch, cfg.noise_power));
  }
}

TEST(MinAchievableMse, GrowsWithNoise) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SystemConfig quiet = SystemConfig::uniform(4, 2, 2, 1, 1, 0.01, 1.0, 0.0);
    SystemConfig loud = quiet;
    loud.noise_power = 1.0;
    const ChannelSet ch = test::channels_for(quiet, seed);
    EXPECT_GE(min_achievable_mse(loud, ch, OptimizerOptions{}), min_achievable_mse(quiet, ch, OptimizerOptions{}))
        << "seed " << seed;
  }
}

TEST(ComputeReceivers, MatchedFilterDirectionsAndGains) {
  Rng rng(70);
  const test::Instance in = test::random_instance(rng, 3, 5, 2, 2, 1, 0.4);
  const ReceiveBeams rx = compute_receivers(ReceiverRule::matched_filter, in.tx, in.ch, in.noise_power);
  CMatrix b = CMatrix::Zero(5, 2);
  for (int k = 0; k < 3; ++k) b += in.ch.matrices[k] * in.tx.comp[k];
  for (int l = 0; l < 2; ++l) {
    const CVector z = rx.comp.col(l);
    EXPECT_NEAR(std::abs(z.normalized().dot(b.col(l).normalized())), 1.0, 1e-12);
  }
  for (int k = 0; k < 3; ++k) {
    const CVector& u = rx.sense[k][0];
    const CVector hv = in.ch.matrices[k] * in.tx.sense[k][0];
    EXPECT_NEAR(std::abs(u.normalized().dot(hv.normalized())), 1.0, 1e-12);
    const double best = per_stream_mse(k, 0, rx, in.tx, in.ch, in.noise_power);
    for (double f : {0.9, 1.1, 0.5}) {
      ReceiveBeams scaled = rx;
      scaled.sense[k][0] *= f;
      EXPECT_LE(best, per_stream_mse(k, 0, scaled, in.tx, in.ch, in.noise_power));
    }
  }
}

TEST(ComputeReceivers, MmseRuleMatchesClosedForm) {
  Rng rng(71);
  const test::Instance in = test::random_instance(rng, 2, 4, 2, 1, 2, 0.4);
  const ReceiveBeams a = compute_receivers(ReceiverRule::mmse, in.tx, in.ch, in.noise_power);
  const ReceiveBeams b = mmse_receivers(in.tx, in.ch, in.noise_power);
  EXPECT_LE((a.comp - b.comp).norm(), 1e-14);
}

}  // namespace
}  // namespace scc
