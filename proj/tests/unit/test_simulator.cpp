#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "svypost/core/error.hpp"
#include "svypost/sim/simulator.hpp"

namespace svypost {
namespace {

SimScenario bernoulli_scenario(std::size_t N, std::size_t n) {
  SimScenario s;
  s.model.family = FamilyKind::kBernoulliLogit;
  s.model.theta0 = {0.0};
  s.N = N;
  s.scheme.n = n;
  return s;
}

TEST(Population, InterceptOnlyBernoulliMeanNearHalf) {
  const SimScenario s = bernoulli_scenario(10000, 100);
  const DataTable pop = generate_population(s, 17);
  ASSERT_EQ(pop.rows(), 10000u);
  const double mean = pop.numeric("y").mean();
  EXPECT_GE(mean, 0.49);
  EXPECT_LE(mean, 0.51);
}

TEST(Population, SameSeedSameTable) {
  SimScenario s = bernoulli_scenario(500, 50);
  s.model.predictors = 2;
  s.model.theta0 = {0.5, 1.0, -1.0};
  const DataTable a = generate_population(s, 3);
  const DataTable b = generate_population(s, 3);
  const DataTable c = generate_population(s, 4);
  for (const char* col : {"x1", "x2", "y"}) {
    EXPECT_EQ(a.numeric(col), b.numeric(col)) << col;
  }
  EXPECT_NE(a.numeric("x1"), c.numeric("x1"));
}

TEST(Population, MultinomialLabels) {
  SimScenario s;
  s.model.family = FamilyKind::kMultinomialGamma;
  s.model.theta0 = {0.7, 0.2, 0.1};
  s.N = 3000;
  const DataTable pop = generate_population(s, 9);
  std::size_t first = 0;
  for (const auto& label : pop.text("y")) {
    ASSERT_TRUE(label == "k1" || label == "k2" || label == "k3") << label;
    first += label == "k1";
  }
  EXPECT_NEAR(static_cast<double>(first) / 3000.0, 0.7, 0.03);
  EXPECT_EQ(s.target_names(), (std::vector<std::string>{"theta1", "theta2", "theta3"}));
}

TEST(Population, NormalResidualScale) {
  SimScenario s;
  s.model.family = FamilyKind::kNormalLinear;
  s.model.predictors = 1;
  s.model.theta0 = {1.0, 2.0, 0.5};
  s.N = 20000;
  const DataTable pop = generate_population(s, 5);
  const Eigen::VectorXd resid = pop.numeric("y") - (Eigen::VectorXd::Ones(20000) + 2.0 * pop.numeric("x1"));
  EXPECT_NEAR(std::sqrt(resid.squaredNorm() / 20000.0), 0.5, 0.01);
  EXPECT_EQ(s.target_names(), (std::vector<std::string>{"Intercept", "x1", "sigma"}));
}

TEST(Scenario, InvalidValuesRejected) {
  SimScenario s = bernoulli_scenario(0, 10);
  EXPECT_THROW(
      try { s.validate(); } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::kInvalidScenario);
        throw;
      },
      Error);
  s = bernoulli_scenario(100, 10);
  s.replications = 0;
  EXPECT_THROW(s.validate(), Error);
  s = bernoulli_scenario(100, 200);
  EXPECT_THROW(s.validate(), Error);
  s = bernoulli_scenario(100, 10);
  s.level = 1.0;
  EXPECT_THROW(s.validate(), Error);
  s = bernoulli_scenario(100, 10);
  s.model.theta0 = {0.0, 1.0};
  EXPECT_THROW(s.validate(), Error);
}

TEST(Scenario, KeyValuesParse) {
  const SimScenario s = SimScenario::from_key_values({{"model.family", "bernoulli_logit"},
                                                       {"model.predictors", "1"},
                                                       {"model.theta", "-1, 0.5"},
                                                       {"population.N", "2000"},
                                                       {"scheme.kind", "pps_systematic"},
                                                       {"scheme.n", "200"},
                                                       {"scheme.size_y", "1.5"},
                                                       {"study.replications", "20"},
                                                       {"study.level", "0.8"},
                                                       {"seed", "11"},
                                                       {"sampler.iter", "400"},
                                                       {"sampler.warmup", "200"},
                                                       {"replicates.count", "50"}});
  EXPECT_EQ(s.scheme.kind, SchemeKind::kPpsSystematic);
  EXPECT_EQ(s.model.theta0, (std::vector<double>{-1.0, 0.5}));
  EXPECT_EQ(s.N, 2000u);
  EXPECT_DOUBLE_EQ(s.scheme.size_y, 1.5);
  EXPECT_EQ(s.replications, 20u);
  EXPECT_EQ(s.seed, 11u);
  EXPECT_EQ(s.fit.sampler.iter, 400);
  EXPECT_EQ(s.fit.sampler.warmup, 200);
  EXPECT_EQ(s.fit.replication.replicates, 50u);
  EXPECT_THROW(SimScenario::from_key_values({{"scheme.bogus", "1"}}), Error);
  EXPECT_THROW(SimScenario::from_key_values({{"study.replications", "0"}}), Error);
}

TEST(Scenario, StudyDefaultsAreReduced) {
  const SimScenario s;
  EXPECT_EQ(s.fit.sampler.iter, 1000);
  EXPECT_EQ(s.fit.sampler.warmup, 500);
}

TEST(Sample, SrsWeightsAreNOverN) {
  SimScenario s = bernoulli_scenario(1000, 80);
  const DataTable pop = generate_population(s, 1);
  const SurveyDesign d = draw_sample(pop, s, 2);
  ASSERT_EQ(d.size(), 80u);
  for (Eigen::Index i = 0; i < 80; ++i) EXPECT_DOUBLE_EQ(d.weights()[i], 1000.0 / 80.0);
  EXPECT_DOUBLE_EQ(d.weights().sum(), 1000.0);
  // No unit twice.
  auto units = d.rows().text("unit");
  std::sort(units.begin(), units.end());
  EXPECT_EQ(std::adjacent_find(units.begin(), units.end()), units.end());
}

TEST(Sample, ClusterArithmetic) {
  SimScenario s = bernoulli_scenario(200, 10);
  s.model.clusters = 10;
  s.scheme.kind = SchemeKind::kOneStageCluster;
  s.scheme.clusters_selected = 4;
  const DataTable pop = generate_population(s, 1);
  const SurveyDesign d = draw_sample(pop, s, 8);
  ASSERT_EQ(d.size(), 80u);
  EXPECT_EQ(d.psu_count(), 4u);
  for (Eigen::Index i = 0; i < 80; ++i) EXPECT_DOUBLE_EQ(d.weights()[i], 10.0 / 4.0);
}

TEST(Sample, StratifiedProportionalAllocation) {
  SimScenario s = bernoulli_scenario(1000, 100);
  s.model.predictors = 1;
  s.model.theta0 = {0.0, 1.0};
  s.scheme.kind = SchemeKind::kStratifiedSrs;
  s.scheme.strata = 4;
  s.scheme.stratify_on = "x1";
  const DataTable pop = generate_population(s, 1);
  const SurveyDesign d = draw_sample(pop, s, 3);
  EXPECT_EQ(d.size(), 100u);
  EXPECT_EQ(d.strata().size(), 4u);
  EXPECT_NEAR(d.weights().sum(), 1000.0, 1e-9);
}

TEST(Sample, PpsInclusionProbabilitiesSumToN) {
  SimScenario s = bernoulli_scenario(5000, 400);
  s.model.predictors = 1;
  s.model.theta0 = {-1.0, 1.0};
  s.scheme.kind = SchemeKind::kPpsSystematic;
  s.scheme.size_y = 1.0;
  s.scheme.size_x = 0.5;
  const DataTable pop = generate_population(s, 21);
  Eigen::VectorXd size = (pop.numeric("y") + 0.5 * pop.numeric("x1")).array().exp();
  const Eigen::VectorXd pi = pps_inclusion_probabilities(size, 400);
  EXPECT_NEAR(pi.sum(), 400.0, 1e-9);
  EXPECT_LE(pi.maxCoeff(), 1.0);

  const SurveyDesign d = draw_sample(pop, s, 22);
  EXPECT_EQ(d.size(), 400u);
  // Horvitz-Thompson estimate of N.
  EXPECT_NEAR(d.weights().sum() / 5000.0, 1.0, 0.02);
}

TEST(Sample, PpsCertaintyUnits) {
  const Eigen::VectorXd size = (Eigen::VectorXd(5) << 100.0, 1.0, 1.0, 1.0, 1.0).finished();
  const Eigen::VectorXd pi = pps_inclusion_probabilities(size, 3);
  EXPECT_DOUBLE_EQ(pi[0], 1.0);
  for (int i = 1; i < 5; ++i) EXPECT_DOUBLE_EQ(pi[i], 0.5);
}

TEST(Sample, PpsRejectsNonPositiveSize) {
  const Eigen::VectorXd size = (Eigen::VectorXd(3) << 1.0, 0.0, 2.0).finished();
  try {
    pps_inclusion_probabilities(size, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kScheme);
  }
  const Eigen::VectorXd tiny = (Eigen::VectorXd(3) << 1e308, 1e-320, 1e308).finished();
  EXPECT_THROW(pps_inclusion_probabilities(tiny, 2), Error);
}

SimScenario small_study() {
  SimScenario s = bernoulli_scenario(2000, 150);
  s.model.predictors = 1;
  s.model.theta0 = {-0.5, 1.0};
  s.replications = 6;
  s.seed = 99;
  s.fit.sampler.iter = 300;
  s.fit.sampler.warmup = 150;
  s.fit.replication.replicates = 40;
  s.fit.threads = 2;
  return s;
}

TEST(Coverage, SmallStudyRunsAndIsDeterministic) {
  const SimScenario s = small_study();
  const CoverageResult a = coverage_study(s);
  EXPECT_EQ(a.completed, 6u);
  EXPECT_EQ(a.failures, 0u);
  ASSERT_EQ(a.rows.size(), 12u);
  ASSERT_EQ(a.summary.size(), 2u);
  EXPECT_EQ(a.summary[0].parameter, "Intercept");
  EXPECT_DOUBLE_EQ(a.summary[1].truth, 1.0);
  for (const auto& row : a.rows) {
    EXPECT_TRUE(std::isfinite(row.deff));
    EXPECT_GT(row.deff, 0.0);
  }
  const CoverageResult b = coverage_study(s);
  ASSERT_EQ(b.rows.size(), a.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].covered_adjusted, b.rows[i].covered_adjusted);
    EXPECT_EQ(a.rows[i].deff, b.rows[i].deff);
  }
}

TEST(Coverage, OutputFiles) {
  SimScenario s = small_study();
  s.replications = 2;
  const CoverageResult r = coverage_study(s);
  const auto dir = std::filesystem::temp_directory_path() / "svypost_cov_test";
  std::filesystem::create_directories(dir);
  write_coverage_csv(r, (dir / "coverage.csv").string());
  write_coverage_summary_json(r, s, (dir / "summary.json").string());
  std::ifstream in(dir / "coverage.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "replication,parameter,covered_adjusted,covered_unadjusted,deff");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 4u);
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.json"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace svypost
