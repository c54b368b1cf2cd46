#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace scc {

struct VerifyOptions {
  std::uint64_t seed = 2024;
  int identity_instances = 100;
  int rank_one_subproblems = 50;
  int monotone_runs = 10;     ///< per algorithm
  int oracle_instances = 10;  ///< per Monte-Carlo property
  long long mc_draws = 1000000;
  /// Mutation hook: the analytic MSE fed to the Monte-Carlo comparison
  /// subtracts the noise term instead of adding it.
  bool flip_noise_sign = false;
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;  ///< measured extreme, compared against tolerance
  double tolerance = 0.0;
  int samples = 0;
  std::string detail;
};

struct VerifyReport {
  std::vector<PropertyResult> properties;

  bool all_passed() const;
};

/// Property battery: rate/MSE identity gaps, rank-one gaps of solved
/// relaxations, monotone outer traces, Monte-Carlo MSE oracles and the
/// scalar subproblem oracles.
VerifyReport verify_suite(const VerifyOptions& opts = {});

void write_verify_text(std::ostream& os, const VerifyReport& report);
void write_verify_csv(std::ostream& os, const VerifyReport& report);

}  // namespace scc
