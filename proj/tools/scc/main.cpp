#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scc/errors.hpp"
#include "scc/harness.hpp"
#include "scc/verify.hpp"

namespace fs = std::filesystem;

namespace {

void write_outputs(const scc::ExperimentSpec& spec, const scc::ExperimentResult& res) {
  const fs::path dir(spec.output_dir);
  fs::create_directories(dir);
  scc::emit_csv(res.rows, (dir / "results.csv").string());
  scc::emit_traces(res.traces, (dir / "traces.csv").string());
  const auto summary = scc::summarize(spec, res.rows);
  scc::emit_summary(summary, (dir / "summary.csv").string());
  scc::write_summary_csv(std::cout, summary);
}

int run_spec(scc::ExperimentSpec& spec) {
  spec.validate();
  const scc::ExperimentResult res = scc::run_experiment_detailed(spec);
  write_outputs(spec, res);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint sensing, computation and communication uplink beamforming simulator"};
  app.set_version_flag("--version", std::string("scc ") + SCC_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config", config_path, "INI experiment file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Master seed (overrides the config)");
  run->add_option("--threads", threads, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);

  std::string param;
  std::vector<std::string> values;
  std::string algo;
  std::string baseline_objective;
  int trials = 0;
  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter for one algorithm");
  sweep->add_option("--param", param, "snr, k, n, r0 or rho")
      ->required()
      ->check(CLI::IsMember({"snr", "snr_db", "k", "n", "r0", "rho"}, CLI::ignore_case));
  sweep->add_option("--values", values, "Comma-separated sweep values")->required()->delimiter(',');
  sweep->add_option("--algo", algo, "Algorithm")
      ->required()
      ->check(CLI::IsMember({"cem", "wsr", "fixed-mmse", "zfbf", "mfbf", "ufbf"}));
  sweep->add_option("--config", config_path, "Base INI experiment file")->check(CLI::ExistingFile);
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_option("--trials", trials, "Trials per sweep value")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", seed, "Master seed");
  sweep->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--baseline-objective", baseline_objective, "Objective the baselines are scored against")
      ->check(CLI::IsMember({"cem", "wsr"}));

  long long draws = 0;
  auto* verify = app.add_subcommand("verify", "Run the property verification battery");
  verify->add_option("--seed", seed, "Seed of the battery");
  verify->add_option("--out", out_dir, "Directory for report.txt and verify.csv");
  verify->add_option("--draws", draws, "Monte-Carlo draws per oracle instance")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      scc::ExperimentSpec spec = scc::load_experiment_config(config_path);
      spec.output_dir = out_dir;
      if (run->count("--seed")) spec.master_seed = seed;
      if (threads > 0) spec.threads = threads;
      return run_spec(spec);
    }
    if (*sweep) {
      scc::ExperimentSpec spec = config_path.empty() ? scc::ExperimentSpec{} : scc::load_experiment_config(config_path);
      spec.sweep_param = scc::parse_sweep_param(param);
      spec.sweep_values.clear();
      for (const std::string& v : values) {
        try {
          spec.sweep_values.push_back(scc::parse_number(v));
        } catch (const std::exception&) {
          throw scc::ConfigError("--values: '" + v + "' is not a number");
        }
      }
      spec.algorithm = scc::parse_algorithm(algo);
      if (!baseline_objective.empty()) {
        spec.baseline_mode = baseline_objective == "wsr" ? scc::ObjectiveMode::wsr : scc::ObjectiveMode::cem;
      }
      if (!out_dir.empty()) spec.output_dir = out_dir;
      if (trials > 0) spec.trials = trials;
      if (sweep->count("--seed")) spec.master_seed = seed;
      if (threads > 0) spec.threads = threads;
      return run_spec(spec);
    }
    if (*verify) {
      scc::VerifyOptions opts;
      if (verify->count("--seed")) opts.seed = seed;
      if (draws > 0) opts.mc_draws = draws;
      const scc::VerifyReport report = scc::verify_suite(opts);
      scc::write_verify_text(std::cout, report);
      const fs::path dir(out_dir.empty() ? "." : out_dir);
      fs::create_directories(dir);
      std::ofstream txt(dir / "report.txt", std::ios::binary);
      std::ofstream csv(dir / "verify.csv", std::ios::binary);
      if (!txt || !csv) throw std::runtime_error("cannot write verification outputs under '" + dir.string() + "'");
      scc::write_verify_text(txt, report);
      scc::write_verify_csv(csv, report);
      return report.all_passed() ? 0 : 1;
    }
  } catch (const scc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
