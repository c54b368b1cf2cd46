#include "scc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "scc/errors.hpp"
#include "scc/random.hpp"
#include "scc/signal_metrics.hpp"

namespace scc {

namespace {

constexpr const char* kResultHeader =
    "scenario_id,algorithm,seed,trial,K,N,M,L,J,snr_db,r0,rho,iterations,wall_ms,nmse,wsr,"
    "min_rate_margin,power_slack_min,mse_budget_slack,status";
constexpr const char* kTraceHeader = "scenario_id,trial,iteration,objective,constraint_margin,wall_ms";
constexpr const char* kSummaryHeader =
    "scenario_id,algorithm,param,value,trials,mean_nmse,median_nmse,mean_wsr,median_wsr,"
    "converged_fraction,mean_iterations";

int as_count(SweepParam p, double v) {
  const double r = std::round(v);
  if (!(r >= 1.0) || r != v || r > 1e6) {
    throw ConfigError(std::string("sweep value for ") + to_string(p) + " must be a positive integer");
  }
  return static_cast<int>(r);
}

bool cem_scored(Algorithm a, ObjectiveMode mode) {
  if (a == Algorithm::cem) return true;
  if (a == Algorithm::wsr) return false;
  return mode == ObjectiveMode::cem;
}

SolveOutcome run_algorithm(const ExperimentSpec& spec, const SystemConfig& cfg, const ChannelSet& ch) {
  switch (spec.algorithm) {
    case Algorithm::cem:
      return run_cem(cfg, ch, spec.opts);
    case Algorithm::wsr:
      return run_wsr(cfg, ch, spec.opts);
    case Algorithm::fixed_mmse:
      return run_baseline({BaselineKind::fixed_mmse, spec.baseline_mode}, cfg, ch, spec.opts);
    case Algorithm::zfbf:
      return run_baseline({BaselineKind::zfbf, spec.baseline_mode}, cfg, ch, spec.opts);
    case Algorithm::mfbf:
      return run_baseline({BaselineKind::mfbf, spec.baseline_mode}, cfg, ch, spec.opts);
    case Algorithm::ufbf:
      return run_baseline({BaselineKind::ufbf, spec.baseline_mode}, cfg, ch, spec.opts);
  }
  throw ContractError("unknown algorithm");
}

struct TrialResult {
  ResultRow row;
  TrialTrace trace;
  SolveOutcome outcome;
};

TrialResult run_trial(const ExperimentSpec& spec, int point, double value, int trial) {
  const Scenario sc = spec.base.with(spec.sweep_param, value);
  TrialResult r;
  ResultRow& row = r.row;
  row.scenario_id = point;
  row.algorithm = to_string(spec.algorithm);
  row.seed = trial_seed(spec.master_seed, point, trial);
  row.trial = trial;
  row.k = sc.n_ues;
  row.n = sc.n_bs_antennas;
  row.m = sc.n_ue_antennas;
  row.l = sc.n_comp_streams;
  row.j = sc.n_sense_streams;
  row.snr_db = sc.snr_db;
  row.r0 = sc.r0;
  row.rho = sc.absolute_mse_budget() / sc.n_ues;
  r.trace.scenario_id = point;
  r.trace.trial = trial;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    const SystemConfig cfg = sc.system_config();
    const Topology topo = place_ues(cfg, derive_seed(row.seed, 1));
    const ChannelSet ch = generate_channels(cfg, topo, derive_seed(row.seed, 2));
    r.outcome = run_algorithm(spec, cfg, ch);
    const SolveOutcome& out = r.outcome;
    const double s2 = cfg.noise_power;
    const ConstraintReport rep = constraint_report(out.rx, out.tx, ch, cfg);
    row.iterations = out.iterations();
    row.wall_ms = spec.timings ? out.wall_ms : 0.0;
    row.nmse = aircomp_mse(out.rx, out.tx, ch, s2) / cfg.n_ues;
    row.wsr = weighted_sum_rate(out.rx, out.tx, ch, s2, cfg.priorities, cfg.interference_model);
    row.min_rate_margin = rep.min_rate_margin;
    row.power_slack_min = rep.min_power_slack();
    row.mse_budget_slack = rep.mse_budget_slack;
    row.status = to_string(out.status);
    for (const TraceRecord& rec : out.trace.records) {
      r.trace.objective.push_back(rec.objective);
      r.trace.constraint_margin.push_back(constraint_margin(rec.report, cfg, spec.algorithm, spec.baseline_mode));
      r.trace.wall_ms.push_back(spec.timings ? rec.subproblem_ms : 0.0);
    }
  } catch (const std::exception&) {
    row.iterations = 0;
    row.wall_ms = 0.0;
    row.nmse = row.wsr = row.min_rate_margin = row.power_slack_min = row.mse_budget_slack = nan;
    row.status = "error";
    r.outcome = SolveOutcome{};
  }
  return r;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class Int>
Int parse_int(std::string_view text) {
  Int v{};
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw std::runtime_error("malformed integer '" + std::string(text) + "'");
  }
  return v;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  return f;
}

void check_written(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::cem:
      return "cem";
    case Algorithm::wsr:
      return "wsr";
    case Algorithm::fixed_mmse:
      return "fixed-mmse";
    case Algorithm::zfbf:
      return "zfbf";
    case Algorithm::mfbf:
      return "mfbf";
    case Algorithm::ufbf:
      return "ufbf";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "cem") return Algorithm::cem;
  if (name == "wsr") return Algorithm::wsr;
  if (name == "fixed-mmse" || name == "fixed_mmse") return Algorithm::fixed_mmse;
  if (name == "zfbf") return Algorithm::zfbf;
  if (name == "mfbf") return Algorithm::mfbf;
  if (name == "ufbf") return Algorithm::ufbf;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

const char* to_string(SweepParam p) {
  switch (p) {
    case SweepParam::snr_db:
      return "snr_db";
    case SweepParam::k:
      return "K";
    case SweepParam::n:
      return "N";
    case SweepParam::r0:
      return "r0";
    case SweepParam::rho:
      return "rho";
  }
  return "unknown";
}

SweepParam parse_sweep_param(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "snr" || s == "snr_db") return SweepParam::snr_db;
  if (s == "k") return SweepParam::k;
  if (s == "n") return SweepParam::n;
  if (s == "r0") return SweepParam::r0;
  if (s == "rho") return SweepParam::rho;
  throw ConfigError("invalid sweep parameter '" + std::string(name) + "'");
}

double Scenario::power_per_ue() const { return noise_power * std::pow(10.0, snr_db / 10.0); }

double Scenario::absolute_mse_budget() const { return std::isnan(mse_budget) ? rho * n_ues : mse_budget; }

SystemConfig Scenario::system_config() const {
  SystemConfig c = SystemConfig::uniform(n_bs_antennas, n_ues, n_ue_antennas, n_comp_streams, n_sense_streams,
                                         noise_power, power_per_ue(), r0, priority, absolute_mse_budget());
  const auto fill = [&](const std::vector<double>& src, Eigen::MatrixXd& dst, const char* what) {
    if (src.empty()) return;
    if (static_cast<Eigen::Index>(src.size()) != dst.size()) {
      throw ConfigError(std::string(what) + " needs K x J = " + std::to_string(dst.size()) + " entries");
    }
    for (Eigen::Index k = 0; k < dst.rows(); ++k) {
      for (Eigen::Index j = 0; j < dst.cols(); ++j) dst(k, j) = src[k * dst.cols() + j];
    }
  };
  if (!power_budget.empty()) {
    if (static_cast<int>(power_budget.size()) != n_ues) {
      throw ConfigError("power_budget_per_ue needs K = " + std::to_string(n_ues) + " entries");
    }
    c.power_budget = power_budget;
  }
  fill(rate_thresholds, c.rate_thresholds, "rate_thresholds");
  fill(priorities, c.priorities, "priorities");
  c.cell_radius = cell_radius;
  c.min_ue_distance = min_ue_distance;
  c.interference_model = interference_model;
  c.channel_mode = channel_mode;
  c.validate();
  return c;
}

Scenario Scenario::with(SweepParam p, double value) const {
  Scenario s = *this;
  switch (p) {
    case SweepParam::snr_db:
      s.snr_db = value;
      break;
    case SweepParam::k:
      s.n_ues = as_count(p, value);
      break;
    case SweepParam::n:
      s.n_bs_antennas = as_count(p, value);
      break;
    case SweepParam::r0:
      s.r0 = value;
      break;
    case SweepParam::rho:
      s.rho = value;
      s.mse_budget = std::numeric_limits<double>::quiet_NaN();
      break;
  }
  return s;
}

double Scenario::value_of(SweepParam p) const {
  switch (p) {
    case SweepParam::snr_db:
      return snr_db;
    case SweepParam::k:
      return n_ues;
    case SweepParam::n:
      return n_bs_antennas;
    case SweepParam::r0:
      return r0;
    case SweepParam::rho:
      return absolute_mse_budget() / n_ues;
  }
  return 0.0;
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  opts.validate();
  for (double v : points()) base.with(sweep_param, v).system_config();
}

std::vector<double> ExperimentSpec::points() const {
  if (!sweep_values.empty()) return sweep_values;
  return {base.value_of(sweep_param)};
}

std::uint64_t trial_seed(std::uint64_t master_seed, int point, int trial) {
  return derive_seed(derive_seed(master_seed, static_cast<std::uint64_t>(point) + 1),
                     static_cast<std::uint64_t>(trial) + 1);
}

double constraint_margin(const ConstraintReport& report, const SystemConfig& config, Algorithm algorithm,
                         ObjectiveMode baseline_mode) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < report.per_ue_power_slack.size(); ++k) {
    m = std::min(m, report.per_ue_power_slack[k] / config.power_budget[k]);
  }
  if (cem_scored(algorithm, baseline_mode)) {
    m = std::min(m, report.min_rate_margin);
  } else if (std::isfinite(config.mse_budget) && config.mse_budget > 0.0) {
    m = std::min(m, report.mse_budget_slack / config.mse_budget);
  }
  return m;
}

ExperimentResult run_experiment_detailed(const ExperimentSpec& spec) {
  spec.validate();
  const std::vector<double> values = spec.points();
  const std::size_t n_jobs = values.size() * static_cast<std::size_t>(spec.trials);
  std::vector<TrialResult> slots(n_jobs);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n_jobs; i = next++) {
      const int point = static_cast<int>(i / spec.trials);
      const int trial = static_cast<int>(i % spec.trials);
      slots[i] = run_trial(spec, point, values[point], trial);
    }
  };
  const int n_threads = static_cast<int>(std::min<std::size_t>(spec.threads, std::max<std::size_t>(n_jobs, 1)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult res;
  res.rows.reserve(n_jobs);
  res.traces.reserve(n_jobs);
  res.outcomes.reserve(n_jobs);
  for (TrialResult& s : slots) {
    res.rows.push_back(std::move(s.row));
    res.traces.push_back(std::move(s.trace));
    res.outcomes.push_back(std::move(s.outcome));
  }
  return res;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) { return run_experiment_detailed(spec).rows; }

std::vector<SummaryRow> summarize(const ExperimentSpec& spec, const std::vector<ResultRow>& rows) {
  const std::vector<double> values = spec.points();
  std::vector<SummaryRow> out;
  for (std::size_t p = 0; p < values.size(); ++p) {
    SummaryRow s;
    s.scenario_id = static_cast<int>(p);
    s.algorithm = to_string(spec.algorithm);
    s.param = to_string(spec.sweep_param);
    s.value = values[p];
    std::vector<double> nmse;
    std::vector<double> wsr;
    double its = 0.0;
    int converged = 0;
    for (const ResultRow& r : rows) {
      if (r.scenario_id != s.scenario_id) continue;
      ++s.trials;
      if (r.status == "error") continue;
      nmse.push_back(r.nmse);
      wsr.push_back(r.wsr);
      its += r.iterations;
      converged += r.status == "converged";
    }
    s.mean_nmse = mean(nmse);
    s.median_nmse = median(nmse);
    s.mean_wsr = mean(wsr);
    s.median_wsr = median(wsr);
    s.converged_fraction = s.trials ? static_cast<double>(converged) / s.trials : 0.0;
    s.mean_iterations = nmse.empty() ? 0.0 : its / static_cast<double>(nmse.size());
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

double parse_number(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw std::runtime_error("malformed number '" + std::string(text) + "'");
  }
  return v;
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kResultHeader << '\n';
  for (const ResultRow& r : rows) {
    os << r.scenario_id << ',' << r.algorithm << ',' << r.seed << ',' << r.trial << ',' << r.k << ',' << r.n << ','
       << r.m << ',' << r.l << ',' << r.j << ',' << format_number(r.snr_db) << ',' << format_number(r.r0) << ','
       << format_number(r.rho) << ',' << r.iterations << ',' << format_number(r.wall_ms) << ','
       << format_number(r.nmse) << ',' << format_number(r.wsr) << ',' << format_number(r.min_rate_margin) << ','
       << format_number(r.power_slack_min) << ',' << format_number(r.mse_budget_slack) << ',' << r.status << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kResultHeader) throw std::runtime_error("results CSV header mismatch");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 20) throw std::runtime_error("results CSV row has " + std::to_string(f.size()) + " fields");
    ResultRow r;
    r.scenario_id = parse_int<int>(f[0]);
    r.algorithm = f[1];
    r.seed = parse_int<std::uint64_t>(f[2]);
    r.trial = parse_int<int>(f[3]);
    r.k = parse_int<int>(f[4]);
    r.n = parse_int<int>(f[5]);
    r.m = parse_int<int>(f[6]);
    r.l = parse_int<int>(f[7]);
    r.j = parse_int<int>(f[8]);
    r.snr_db = parse_number(f[9]);
    r.r0 = parse_number(f[10]);
    r.rho = parse_number(f[11]);
    r.iterations = parse_int<int>(f[12]);
    r.wall_ms = parse_number(f[13]);
    r.nmse = parse_number(f[14]);
    r.wsr = parse_number(f[15]);
    r.min_rate_margin = parse_number(f[16]);
    r.power_slack_min = parse_number(f[17]);
    r.mse_budget_slack = parse_number(f[18]);
    r.status = f[19];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_traces_csv(std::ostream& os, const std::vector<TrialTrace>& traces) {
  os << kTraceHeader << '\n';
  for (const TrialTrace& t : traces) {
    for (std::size_t i = 0; i < t.objective.size(); ++i) {
      os << t.scenario_id << ',' << t.trial << ',' << i + 1 << ',' << format_number(t.objective[i]) << ','
         << format_number(t.constraint_margin[i]) << ',' << format_number(t.wall_ms[i]) << '\n';
    }
  }
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << kSummaryHeader << '\n';
  for (const SummaryRow& s : rows) {
    os << s.scenario_id << ',' << s.algorithm << ',' << s.param << ',' << format_number(s.value) << ',' << s.trials
       << ',' << format_number(s.mean_nmse) << ',' << format_number(s.median_nmse) << ','
       << format_number(s.mean_wsr) << ',' << format_number(s.median_wsr) << ','
       << format_number(s.converged_fraction) << ',' << format_number(s.mean_iterations) << '\n';
  }
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream f = open_for_write(path);
  write_results_csv(f, rows);
  check_written(f, path);
}

void emit_traces(const std::vector<TrialTrace>& traces, const std::string& path) {
  std::ofstream f = open_for_write(path);
  write_traces_csv(f, traces);
  check_written(f, path);
}

void emit_summary(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::ofstream f = open_for_write(path);
  write_summary_csv(f, rows);
  check_written(f, path);
}

}  // namespace scc
