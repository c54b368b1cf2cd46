#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "scc/errors.hpp"
#include "scc/harness.hpp"

namespace scc {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Field {
  std::string section;
  std::string key;
  std::string value;

  std::string where() const { return "[" + section + "] " + key; }

  [[noreturn]] void fail(const std::string& why) const { throw ConfigError(where() + ": " + why); }

  double number() const {
    const std::string v = trim(value);
    try {
      return parse_number(v);
    } catch (const std::exception&) {
      fail("expected a number, got '" + v + "'");
    }
  }

  template <class Int>
  Int integer() const {
    const std::string v = trim(value);
    Int out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) fail("expected an integer, got '" + v + "'");
    return out;
  }

  bool boolean() const {
    const std::string v = trim(value);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail("expected true or false, got '" + v + "'");
  }

  std::vector<double> list() const {
    std::vector<double> out;
    std::string v = trim(value);
    std::size_t start = 0;
    while (start <= v.size()) {
      const std::size_t pos = std::min(v.find(',', start), v.size());
      Field item{section, key, v.substr(start, pos - start)};
      out.push_back(item.number());
      start = pos + 1;
    }
    return out;
  }

  std::string text() const { return trim(value); }
};

using Setter = std::function<void(ExperimentSpec&, const Field&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"system",
       {
           {"n_bs_antennas", [](ExperimentSpec& e, const Field& f) { e.base.n_bs_antennas = f.integer<int>(); }},
           {"n_ues", [](ExperimentSpec& e, const Field& f) { e.base.n_ues = f.integer<int>(); }},
           {"n_ue_antennas", [](ExperimentSpec& e, const Field& f) { e.base.n_ue_antennas = f.integer<int>(); }},
           {"n_comp_streams", [](ExperimentSpec& e, const Field& f) { e.base.n_comp_streams = f.integer<int>(); }},
           {"n_sense_streams",
            [](ExperimentSpec& e, const Field& f) { e.base.n_sense_streams = f.integer<int>(); }},
           {"noise_power", [](ExperimentSpec& e, const Field& f) { e.base.noise_power = f.number(); }},
           {"snr_db", [](ExperimentSpec& e, const Field& f) { e.base.snr_db = f.number(); }},
           {"power_budget_per_ue", [](ExperimentSpec& e, const Field& f) { e.base.power_budget = f.list(); }},
           {"r0", [](ExperimentSpec& e, const Field& f) { e.base.r0 = f.number(); }},
           {"rate_thresholds", [](ExperimentSpec& e, const Field& f) { e.base.rate_thresholds = f.list(); }},
           {"priority", [](ExperimentSpec& e, const Field& f) { e.base.priority = f.number(); }},
           {"priorities", [](ExperimentSpec& e, const Field& f) { e.base.priorities = f.list(); }},
           {"rho", [](ExperimentSpec& e, const Field& f) { e.base.rho = f.number(); }},
           {"mse_budget", [](ExperimentSpec& e, const Field& f) { e.base.mse_budget = f.number(); }},
           {"cell_radius", [](ExperimentSpec& e, const Field& f) { e.base.cell_radius = f.number(); }},
           {"min_ue_distance", [](ExperimentSpec& e, const Field& f) { e.base.min_ue_distance = f.number(); }},
           {"interference_model",
            [](ExperimentSpec& e, const Field& f) {
              const std::string v = f.text();
              if (v == "all_cross_streams") {
                e.base.interference_model = InterferenceModel::all_cross_streams;
              } else if (v == "paper_literal") {
                e.base.interference_model = InterferenceModel::paper_literal;
              } else {
                f.fail("expected all_cross_streams or paper_literal");
              }
            }},
           {"channel_mode",
            [](ExperimentSpec& e, const Field& f) {
              const std::string v = f.text();
              if (v == "normalized") {
                e.base.channel_mode = ChannelMode::normalized;
              } else if (v == "geometric") {
                e.base.channel_mode = ChannelMode::geometric;
              } else {
                f.fail("expected normalized or geometric");
              }
            }},
       }},
      {"algorithm",
       {
           {"name",
            [](ExperimentSpec& e, const Field& f) {
              try {
                e.algorithm = parse_algorithm(f.text());
              } catch (const ConfigError& err) {
                f.fail(err.what());
              }
            }},
           {"baseline_objective",
            [](ExperimentSpec& e, const Field& f) {
              const std::string v = f.text();
              if (v == "cem") {
                e.baseline_mode = ObjectiveMode::cem;
              } else if (v == "wsr") {
                e.baseline_mode = ObjectiveMode::wsr;
              } else {
                f.fail("expected cem or wsr");
              }
            }},
       }},
      {"sweep",
       {
           {"param",
            [](ExperimentSpec& e, const Field& f) {
              try {
                e.sweep_param = parse_sweep_param(f.text());
              } catch (const ConfigError& err) {
                f.fail(err.what());
              }
            }},
           {"values", [](ExperimentSpec& e, const Field& f) { e.sweep_values = f.list(); }},
           {"trials", [](ExperimentSpec& e, const Field& f) { e.trials = f.integer<int>(); }},
           {"master_seed", [](ExperimentSpec& e, const Field& f) { e.master_seed = f.integer<std::uint64_t>(); }},
           {"threads", [](ExperimentSpec& e, const Field& f) { e.threads = f.integer<int>(); }},
       }},
      {"solver",
       {
           {"max_iterations", [](ExperimentSpec& e, const Field& f) { e.opts.max_iterations = f.integer<int>(); }},
           {"rel_tol", [](ExperimentSpec& e, const Field& f) { e.opts.rel_tol = f.number(); }},
           {"subproblem_tol", [](ExperimentSpec& e, const Field& f) { e.opts.subproblem_tol = f.number(); }},
           {"monotonicity_slack",
            [](ExperimentSpec& e, const Field& f) { e.opts.monotonicity_slack = f.number(); }},
       }},
      {"output",
       {
           {"dir", [](ExperimentSpec& e, const Field& f) { e.output_dir = f.text(); }},
           {"timings", [](ExperimentSpec& e, const Field& f) { e.timings = f.boolean(); }},
       }},
  };
  return s;
}

}  // namespace

ExperimentSpec parse_experiment_config(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& err) {
    throw ConfigError(std::string("malformed config: ") + err.message() + " at line " +
                      std::to_string(err.line()));
  }
  ExperimentSpec spec;
  bool has_rho = false;
  bool has_budget = false;
  for (const auto& [section, body] : tree) {
    const auto sec = schema().find(section);
    if (sec == schema().end()) {
      if (!body.data().empty()) throw ConfigError("key '" + section + "' outside of any section");
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      setter->second(spec, Field{section, key, node.data()});
      has_rho |= section == "system" && key == "rho";
      has_budget |= section == "system" && key == "mse_budget";
    }
  }
  if (has_rho && has_budget) throw ConfigError("[system] rho and mse_budget are mutually exclusive");
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return parse_experiment_config(f);
  } catch (const ConfigError& err) {
    throw ConfigError(path + ": " + err.what());
  }
}

}  // namespace scc
