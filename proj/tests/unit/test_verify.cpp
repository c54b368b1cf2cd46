#include <gtest/gtest.h>

#include <sstream>

#include "scc/verify.hpp"

namespace scc {
namespace {

const PropertyResult& find(const VerifyReport& r, const std::string& name) {
  for (const PropertyResult& p : r.properties) {
    if (p.name == name) return p;
  }
  throw std::runtime_error("missing property " + name);
}

TEST(VerifySuite, DefaultSeedPasses) {
  const VerifyReport r = verify_suite();
  for (const PropertyResult& p : r.properties) {
    EXPECT_TRUE(p.passed) << p.name << " worst=" << p.worst << " " << p.detail;
    EXPECT_LE(p.worst, p.tolerance) << p.name;
    EXPECT_GT(p.samples, 0) << p.name;
  }
  EXPECT_TRUE(r.all_passed());
  EXPECT_EQ(find(r, "rate_mse_identity").samples, 100);
  EXPECT_GE(find(r, "rank_one_relaxation").samples, 50);
  EXPECT_EQ(find(r, "mse_monte_carlo").samples, 10);
}

TEST(VerifySuite, FlippedNoiseSignFailsTheMseOracle) {
  VerifyOptions opts;
  opts.identity_instances = 5;
  opts.rank_one_subproblems = 2;
  opts.monotone_runs = 1;
  opts.oracle_instances = 3;
  opts.mc_draws = 200000;
  opts.flip_noise_sign = true;
  const VerifyReport r = verify_suite(opts);
  EXPECT_FALSE(find(r, "mse_monte_carlo").passed);
  EXPECT_GT(find(r, "mse_monte_carlo").worst, 0.01);
  EXPECT_TRUE(find(r, "rate_mse_identity").passed);
  EXPECT_FALSE(r.all_passed());
}

TEST(VerifyReport, TextAndCsvCarryWorstValues) {
  VerifyReport r;
  r.properties.push_back({"alpha", true, 0.25, 0.5, 3, ""});
  r.properties.push_back({"beta", false, 2.0, 1.0, 1, "too big"});
  std::ostringstream text, csv;
  write_verify_text(text, r);
  write_verify_csv(csv, r);
  EXPECT_NE(text.str().find("PASS alpha worst=0.25 tol=0.5 samples=3"), std::string::npos);
  EXPECT_NE(text.str().find("FAIL beta worst=2"), std::string::npos);
  EXPECT_EQ(csv.str(), "property,passed,worst,tolerance,samples\nalpha,1,0.25,0.5,3\nbeta,0,2,1,1\n");
}

TEST(VerifySuite, DeterministicForSeed) {
  VerifyOptions opts;
  opts.identity_instances = 10;
  opts.rank_one_subproblems = 3;
  opts.monotone_runs = 1;
  opts.oracle_instances = 2;
  opts.mc_draws = 20000;
  std::ostringstream a, b;
  write_verify_csv(a, verify_suite(opts));
  write_verify_csv(b, verify_suite(opts));
  EXPECT_EQ(a.str(), b.str());
}

}  // namespace
}  // namespace scc
