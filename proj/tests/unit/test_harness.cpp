#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scc/errors.hpp"
#include "scc/harness.hpp"
#include "support.hpp"

namespace scc {
namespace {

ExperimentSpec small_spec(Algorithm algo = Algorithm::cem) {
  ExperimentSpec spec;
  spec.base.n_bs_antennas = 6;
  spec.base.n_ues = 2;
  spec.algorithm = algo;
  spec.sweep_param = SweepParam::snr_db;
  spec.sweep_values = {-5.0, 0.0, 5.0, 10.0};
  spec.trials = 5;
  spec.master_seed = 99;
  spec.opts.max_iterations = 20;
  return spec;
}

std::string results_text(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  write_results_csv(os, rows);
  return os.str();
}

TEST(Names, AlgorithmsAndSweepParams) {
  for (Algorithm a : {Algorithm::cem, Algorithm::wsr, Algorithm::fixed_mmse, Algorithm::zfbf, Algorithm::mfbf,
                      Algorithm::ufbf}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  EXPECT_EQ(parse_sweep_param("SNR"), SweepParam::snr_db);
  EXPECT_EQ(parse_sweep_param("snr_db"), SweepParam::snr_db);
  EXPECT_EQ(parse_sweep_param("K"), SweepParam::k);
  EXPECT_EQ(parse_sweep_param("rho"), SweepParam::rho);
  EXPECT_THROW(parse_sweep_param("M"), ConfigError);
  EXPECT_THROW(parse_algorithm("sdr"), ConfigError);
}

TEST(Scenario, PowerFromSnr) {
  Scenario s;
  s.noise_power = 1e-8;
  s.snr_db = 10.0;
  EXPECT_NEAR(s.power_per_ue(), 1e-7, 1e-20);
  const SystemConfig cfg = s.system_config();
  ASSERT_EQ(cfg.power_budget.size(), 8u);
  EXPECT_NEAR(cfg.power_budget[3], 1e-7, 1e-20);
  EXPECT_TRUE(std::isinf(cfg.mse_budget));
  s.rho = 0.3;
  EXPECT_NEAR(s.system_config().mse_budget, 0.3 * 8, 1e-15);
  s.mse_budget = 1.5;
  EXPECT_EQ(s.system_config().mse_budget, 1.5);
}

TEST(Scenario, WithResizesUeCount) {
  Scenario s;
  const Scenario t = s.with(SweepParam::k, 12);
  EXPECT_EQ(t.n_ues, 12);
  EXPECT_EQ(t.system_config().power_budget.size(), 12u);
  EXPECT_EQ(s.with(SweepParam::n, 32).n_bs_antennas, 32);
  EXPECT_EQ(s.with(SweepParam::r0, 1.0).value_of(SweepParam::r0), 1.0);
  EXPECT_THROW(s.with(SweepParam::k, 2.5), ConfigError);
}

TEST(ExperimentSpec, Validation) {
  ExperimentSpec spec = small_spec();
  EXPECT_NO_THROW(spec.validate());
  spec.trials = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = small_spec();
  spec.opts.rel_tol = 0.0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(TrialSeed, DocumentedSplitting) {
  EXPECT_EQ(trial_seed(5, 2, 3), derive_seed(derive_seed(5, 3), 4));
  EXPECT_NE(trial_seed(5, 0, 0), trial_seed(5, 0, 1));
  EXPECT_NE(trial_seed(5, 0, 0), trial_seed(5, 1, 0));
}

TEST(RunExperiment, OneRowPerPointAndTrial) {
  const ExperimentSpec spec = small_spec();
  const ExperimentResult res = run_experiment_detailed(spec);
  ASSERT_EQ(res.rows.size(), 20u);
  ASSERT_EQ(res.traces.size(), 20u);
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const ResultRow& r = res.rows[i];
    EXPECT_EQ(r.scenario_id, static_cast<int>(i / 5));
    EXPECT_EQ(r.trial, static_cast<int>(i % 5));
    EXPECT_EQ(r.snr_db, spec.sweep_values[i / 5]);
    EXPECT_EQ(r.seed, trial_seed(99, r.scenario_id, r.trial));
    EXPECT_EQ(r.k, 2);
    EXPECT_EQ(r.n, 6);
    EXPECT_EQ(r.algorithm, "cem");
    EXPECT_GE(r.nmse, 0.0);
    EXPECT_EQ(r.wall_ms, 0.0);
    EXPECT_EQ(static_cast<int>(res.traces[i].objective.size()), r.iterations);
  }
}

TEST(RunExperiment, NmseMatchesStoredBeams) {
  for (Algorithm algo : {Algorithm::cem, Algorithm::wsr, Algorithm::ufbf}) {
    ExperimentSpec spec = small_spec(algo);
    spec.base.rho = 0.5;
    const ExperimentResult res = run_experiment_detailed(spec);
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const ResultRow& r = res.rows[i];
      ASSERT_NE(r.status, "error");
      const SystemConfig cfg = spec.base.with(spec.sweep_param, spec.sweep_values[r.scenario_id]).system_config();
      const ChannelSet ch = generate_channels(cfg, place_ues(cfg, derive_seed(r.seed, 1)), derive_seed(r.seed, 2));
      const SolveOutcome& out = res.outcomes[i];
      EXPECT_NEAR(r.nmse, aircomp_mse(out.rx, out.tx, ch, cfg.noise_power) / cfg.n_ues, 1e-10);
      EXPECT_NEAR(r.wsr,
                  weighted_sum_rate(out.rx, out.tx, ch, cfg.noise_power, cfg.priorities, cfg.interference_model),
                  1e-10 * std::max(1.0, r.wsr));
    }
  }
}

TEST(RunExperiment, ByteIdenticalAcrossRunsAndThreads) {
  ExperimentSpec spec = small_spec(Algorithm::wsr);
  spec.base.rho = 0.5;
  const std::string serial = results_text(run_experiment(spec));
  EXPECT_EQ(serial, results_text(run_experiment(spec)));
  spec.threads = 3;
  EXPECT_EQ(serial, results_text(run_experiment(spec)));
}

TEST(RunExperiment, TrialFailuresBecomeRows) {
  ExperimentSpec spec = small_spec(Algorithm::zfbf);
  spec.base.n_bs_antennas = 3;
  spec.trials = 2;
  spec.sweep_values = {0.0};
  const std::vector<ResultRow> rows = run_experiment(spec);
  ASSERT_EQ(rows.size(), 2u);
  for (const ResultRow& r : rows) {
    EXPECT_EQ(r.status, "error");
    EXPECT_TRUE(std::isnan(r.nmse));
  }
}

TEST(RunExperiment, SameChannelsAcrossAlgorithms) {
  const ExperimentSpec a = small_spec(Algorithm::cem);
  const ExperimentSpec b = small_spec(Algorithm::fixed_mmse);
  const auto ra = run_experiment_detailed(a);
  const auto rb = run_experiment_detailed(b);
  for (std::size_t i = 0; i < ra.rows.size(); ++i) {
    EXPECT_EQ(ra.rows[i].seed, rb.rows[i].seed);
    EXPECT_LE(ra.rows[i].nmse, rb.rows[i].nmse * (1.0 + 1e-9));
  }
}

TEST(NumberFormat, RoundTripAndSpecials) {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const double x = std::ldexp(rng.normal(), test::draw_int(rng, -60, 60));
    EXPECT_EQ(parse_number(format_number(x)), x);
  }
  EXPECT_EQ(format_number(INFINITY), "inf");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
  EXPECT_EQ(format_number(NAN), "nan");
  EXPECT_TRUE(std::isnan(parse_number("nan")));
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(parse_number("1.2345678901234"), 1.2345678901234);
  EXPECT_THROW(parse_number("1.5x"), std::exception);
}

ResultRow random_row(Rng& rng) {
  ResultRow r;
  r.scenario_id = test::draw_int(rng, 0, 9);
  r.algorithm = rng.uniform() < 0.5 ? "cem" : "fixed-mmse";
  r.seed = mix64(static_cast<std::uint64_t>(rng.uniform() * 0x1.0p53));
  r.trial = test::draw_int(rng, 0, 99);
  r.k = test::draw_int(rng, 1, 32);
  r.n = test::draw_int(rng, 1, 64);
  r.m = 2;
  r.l = 1;
  r.j = test::draw_int(rng, 1, 3);
  r.snr_db = rng.normal() * 10.0;
  r.r0 = rng.uniform();
  r.rho = rng.uniform() < 0.3 ? INFINITY : rng.uniform();
  r.iterations = test::draw_int(rng, 1, 100);
  r.wall_ms = rng.uniform() * 1e3;
  r.nmse = std::ldexp(rng.uniform(), -test::draw_int(rng, 0, 30));
  r.wsr = rng.uniform() * 50;
  r.min_rate_margin = rng.normal();
  r.power_slack_min = rng.normal() * 1e-9;
  r.mse_budget_slack = rng.uniform() < 0.3 ? INFINITY : rng.normal();
  r.status = rng.uniform() < 0.5 ? "converged" : "max_iterations";
  return r;
}

TEST(ResultsCsv, RoundTrip) {
  Rng rng(2);
  std::vector<ResultRow> rows;
  for (int i = 0; i < 100; ++i) rows.push_back(random_row(rng));
  std::istringstream in(results_text(rows));
  EXPECT_EQ(read_results_csv(in), rows);
}

TEST(ResultsCsv, HeaderOnlyWhenEmpty) {
  EXPECT_EQ(results_text({}),
            "scenario_id,algorithm,seed,trial,K,N,M,L,J,snr_db,r0,rho,iterations,wall_ms,nmse,wsr,"
            "min_rate_margin,power_slack_min,mse_budget_slack,status\n");
}

TEST(ResultsCsv, SignificantDigits) {
  ResultRow r;
  r.nmse = 0.123456789012345;
  const std::string text = results_text({r});
  EXPECT_NE(text.find("0.123456789012345"), std::string::npos);
}

TEST(ResultsCsv, RejectsBadHeader) {
  std::istringstream in("a,b,c\n");
  EXPECT_THROW(read_results_csv(in), std::exception);
}

TEST(TracesCsv, Columns) {
  TrialTrace t;
  t.scenario_id = 1;
  t.trial = 2;
  t.objective = {0.5, 0.25};
  t.constraint_margin = {0.0, 0.1};
  t.wall_ms = {0.0, 0.0};
  std::ostringstream os;
  write_traces_csv(os, {t});
  EXPECT_EQ(os.str(),
            "scenario_id,trial,iteration,objective,constraint_margin,wall_ms\n"
            "1,2,1,0.5,0,0\n"
            "1,2,2,0.25,0.1,0\n");
}

TEST(EmitCsv, IoFailureNamesPath) {
  try {
    emit_csv({}, "/nonexistent_dir_scc/results.csv");
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir_scc/results.csv"), std::string::npos);
  }
}

TEST(Summary, MeansAndMedians) {
  ExperimentSpec spec = small_spec();
  spec.sweep_values = {0.0};
  std::vector<ResultRow> rows(3);
  const double nmse[] = {0.3, 0.1, 0.2};
  for (int i = 0; i < 3; ++i) {
    rows[i].algorithm = "cem";
    rows[i].trial = i;
    rows[i].nmse = nmse[i];
    rows[i].wsr = i;
    rows[i].iterations = 10 * (i + 1);
    rows[i].status = i == 2 ? "max_iterations" : "converged";
  }
  const auto s = summarize(spec, rows);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(s[0].mean_nmse, 0.2, 1e-15);
  EXPECT_NEAR(s[0].median_nmse, 0.2, 1e-15);
  EXPECT_NEAR(s[0].mean_wsr, 1.0, 1e-15);
  EXPECT_NEAR(s[0].converged_fraction, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[0].mean_iterations, 20.0, 1e-15);
  EXPECT_EQ(s[0].trials, 3);
}

TEST(Config, ParsesEverySection) {
  std::istringstream in(
      "[system]\n"
      "n_bs_antennas = 12\n"
      "n_ues = 3\n"
      "snr_db = 7.5\n"
      "rho = 0.4\n"
      "interference_model = paper_literal\n"
      "[algorithm]\n"
      "name = wsr\n"
      "[sweep]\n"
      "param = n\n"
      "values = 8, 16\n"
      "trials = 4\n"
      "master_seed = 17\n"
      "threads = 2\n"
      "[solver]\n"
      "max_iterations = 30\n"
      "rel_tol = 1e-3\n"
      "[output]\n"
      "dir = out\n"
      "timings = true\n");
  const ExperimentSpec spec = parse_experiment_config(in);
  EXPECT_EQ(spec.base.n_bs_antennas, 12);
  EXPECT_EQ(spec.base.n_ues, 3);
  EXPECT_EQ(spec.base.snr_db, 7.5);
  EXPECT_EQ(spec.base.rho, 0.4);
  EXPECT_EQ(spec.base.interference_model, InterferenceModel::paper_literal);
  EXPECT_EQ(spec.algorithm, Algorithm::wsr);
  EXPECT_EQ(spec.sweep_param, SweepParam::n);
  EXPECT_EQ(spec.sweep_values, (std::vector<double>{8.0, 16.0}));
  EXPECT_EQ(spec.trials, 4);
  EXPECT_EQ(spec.master_seed, 17u);
  EXPECT_EQ(spec.threads, 2);
  EXPECT_EQ(spec.opts.max_iterations, 30);
  EXPECT_EQ(spec.opts.rel_tol, 1e-3);
  EXPECT_EQ(spec.output_dir, "out");
  EXPECT_TRUE(spec.timings);
}

TEST(Config, RejectsUnknownKeysAndSections) {
  const char* bad[] = {
      "[system]\nn_bs_antenas = 4\n",
      "[systems]\nn_ues = 4\n",
      "n_ues = 4\n",
      "[sweep]\nparam = m\n",
      "[system]\nn_ues = four\n",
      "[system]\nrho = 0.3\nmse_budget = 1\n",
      "[algorithm]\nname = sdr\n",
      "[sweep]\ntrials = 0\n",
  };
  for (const char* text : bad) {
    std::istringstream in(text);
    EXPECT_THROW(parse_experiment_config(in), ConfigError) << text;
  }
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(load_experiment_config("/nonexistent_dir_scc/x.ini"), ConfigError);
}

}  // namespace
}  // namespace scc
