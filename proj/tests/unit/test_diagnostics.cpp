#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "svypost/core/error.hpp"
#include "svypost/sampler/diagnostics.hpp"

namespace svypost {
namespace {

DrawsMatrix iid_normal(int chains, int per_chain, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  DrawsMatrix d;
  d.values.resize(chains * per_chain, 1);
  d.names = {"x"};
  for (int c = 0; c < chains; ++c) {
    for (int t = 0; t < per_chain; ++t) {
      d.values(c * per_chain + t, 0) = normal(rng);
      d.chain_id.push_back(c + 1);
    }
  }
  return d;
}

TEST(Diagnostics, IidNormalRhatNearOne) {
  const auto diag = mcmc_diagnostics(iid_normal(4, 1000, 42));
  ASSERT_EQ(diag.size(), 1u);
  EXPECT_GE(diag[0].rhat, 0.99);
  EXPECT_LE(diag[0].rhat, 1.01);
  EXPECT_GT(diag[0].ess, 3000.0);
  EXPECT_LT(diag[0].ess, 5000.0);
  EXPECT_FALSE(diag[0].degenerate);
}

TEST(Diagnostics, AutocorrelatedChainHasSmallerEss) {
  // AR(1) with phi = 0.9: ESS/M is about (1 - phi)/(1 + phi) ~ 0.053.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  DrawsMatrix d;
  d.values.resize(8000, 1);
  double x = 0.0;
  for (int t = 0; t < 8000; ++t) {
    x = 0.9 * x + normal(rng);
    d.values(t, 0) = x;
  }
  const auto diag = mcmc_diagnostics(d);
  EXPECT_GT(diag[0].ess, 250.0);
  EXPECT_LT(diag[0].ess, 650.0);
}

TEST(Diagnostics, ConstantChainIsFlagged) {
  DrawsMatrix d;
  d.values = Eigen::MatrixXd::Constant(100, 1, 3.0);
  const auto diag = mcmc_diagnostics(d);
  EXPECT_TRUE(diag[0].degenerate);
  EXPECT_EQ(diag[0].ess, 0.0);
  EXPECT_FALSE(std::isnan(diag[0].rhat));
}

TEST(Diagnostics, DisjointChainsHaveLargeRhat) {
  DrawsMatrix d;
  d.values.resize(200, 1);
  for (int r = 0; r < 200; ++r) {
    d.values(r, 0) = r < 100 ? 0.0 : 1.0;
    d.chain_id.push_back(r < 100 ? 1 : 2);
  }
  EXPECT_GT(mcmc_diagnostics(d)[0].rhat, 1.1);
}

TEST(Diagnostics, ShiftedChainsHaveLargeRhat) {
  auto d = iid_normal(2, 500, 3);
  for (int r = 500; r < 1000; ++r) d.values(r, 0) += 3.0;
  EXPECT_GT(mcmc_diagnostics(d)[0].rhat, 1.1);
}

TEST(Diagnostics, TooFewDraws) {
  DrawsMatrix d;
  d.values = Eigen::MatrixXd::Zero(3, 2);
  try {
    mcmc_diagnostics(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInsufficientDraws);
  }
}

}  // namespace
}  // namespace svypost
