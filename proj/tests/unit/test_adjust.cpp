#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/gaussian_target.hpp"
#include "svypost/adjust/adjust.hpp"
#include "svypost/core/error.hpp"

namespace svypost {
namespace {

using testing::GaussianTarget;

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Eigen::MatrixXd random_spd(Eigen::Index d, std::mt19937_64& rng) {
  const Eigen::MatrixXd b = random_matrix(d, d, rng);
  return b.transpose() * b + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

DrawsMatrix random_draws(Eigen::Index m, Eigen::Index d, std::mt19937_64& rng) {
  DrawsMatrix draws;
  draws.values = random_matrix(m, d, rng) * random_matrix(d, d, rng);
  draws.values.rowwise() += Eigen::RowVectorXd::LinSpaced(d, 1.0, 3.0);
  for (Eigen::Index j = 0; j < d; ++j) draws.names.push_back("p" + std::to_string(j));
  return draws;
}

double relative(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / b.norm();
}

struct LogisticData {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
};

LogisticData logistic_data(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  LogisticData data{Eigen::MatrixXd(n, 3), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    data.x(i, 0) = 1.0;
    data.x(i, 1) = normal(rng);
    data.x(i, 2) = normal(rng);
    const double eta = -0.3 + 0.8 * data.x(i, 1) - 0.5 * data.x(i, 2);
    data.y[i] = std::bernoulli_distribution(1.0 / (1.0 + std::exp(-eta)))(rng) ? 1.0 : 0.0;
    data.w[i] = unif(rng);
  }
  return data;
}

TEST(EstimateH, QuadraticGivesPrecision) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd p = random_spd(4, rng);
  const GaussianTarget target(Eigen::VectorXd::Ones(4), p);
  const DrawsMatrix draws = random_draws(50, 4, rng);
  for (auto method : {HessianMethod::kMcmc, HessianMethod::kPlugin}) {
    const auto est = estimate_H(target, draws, method);
    EXPECT_LT((est.H - p).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_TRUE(est.positive_definite);
  }
}

TEST(EstimateH, McmcSubsampleIsCapped) {
  std::mt19937_64 rng(2);
  const GaussianTarget target(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const DrawsMatrix draws = random_draws(1000, 2, rng);
  EXPECT_EQ(estimate_H(target, draws, HessianMethod::kMcmc).draws_used, 200u);
  EXPECT_EQ(estimate_H(target, draws, HessianMethod::kMcmc, 37).draws_used, 37u);
  EXPECT_EQ(estimate_H(target, draws, HessianMethod::kPlugin).draws_used, 0u);
}

TEST(EstimateH, PluginMatchesClosedFormLogisticHessian) {
  std::mt19937_64 rng(3);
  const auto data = logistic_data(300, rng);
  const auto family = ModelFamily::bernoulli_logit(data.x, data.y, data.w);
  DrawsMatrix draws = random_draws(20, 3, rng);
  draws.values *= 0.1;
  const Eigen::VectorXd theta = draws.column_mean();
  const Eigen::ArrayXd p = 1.0 / (1.0 + (-(data.x * theta).array()).exp());
  const Eigen::VectorXd v = data.w.array() * p * (1.0 - p);
  const Eigen::MatrixXd oracle = data.x.transpose() * v.asDiagonal() * data.x;
  EXPECT_LT(relative(estimate_H(family, draws, HessianMethod::kPlugin).H, oracle), 1e-4);
}

TEST(EstimateH, PluginMatchesLeastSquaresBlock) {
  std::mt19937_64 rng(4);
  const int n = 120;
  const Eigen::MatrixXd x = random_matrix(n, 2, rng);
  const Eigen::VectorXd y = random_matrix(n, 1, rng);
  const auto family = ModelFamily::normal_linear(x, y, Eigen::VectorXd::Ones(n));
  DrawsMatrix draws;
  draws.values = Eigen::MatrixXd::Zero(2, 3);
  draws.values.col(2).setConstant(std::log(0.7));
  const Eigen::MatrixXd h = estimate_H(family, draws, HessianMethod::kPlugin).H;
  const Eigen::MatrixXd oracle = x.transpose() * x / (0.7 * 0.7);
  EXPECT_LT((h.topLeftCorner(2, 2) - oracle).cwiseAbs().maxCoeff(), 1e-6 * oracle.norm());
}

TEST(EstimateH, NonFiniteHessianNamesTheDraw) {
  const auto family = ModelFamily::multinomial_gamma(
      (Eigen::MatrixXd(2, 2) << 1, 0, 0, 1).finished(), Eigen::VectorXd::Ones(2),
      Eigen::VectorXd::Ones(2));
  DrawsMatrix draws;
  draws.values = Eigen::MatrixXd::Zero(3, 2);
  draws.values(1, 0) = 800.0;  // exp overflows
  try {
    estimate_H(family, draws, HessianMethod::kMcmc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("draw 2"), std::string::npos);
  }
}

TEST(ScoreAt, BaseWeightsGiveFullGradient) {
  std::mt19937_64 rng(5);
  const auto data = logistic_data(40, rng);
  const auto family = ModelFamily::bernoulli_logit(data.x, data.y, data.w);
  const Eigen::VectorXd theta = Eigen::Vector3d(0.1, -0.2, 0.3);
  EXPECT_TRUE(score_at(family, theta, data.w) == family.gradient(theta));
}

TEST(ScoreAt, ZeroWeightsLeavePriorAndJacobian) {
  const auto family = ModelFamily::multinomial_gamma(
      (Eigen::MatrixXd(3, 2) << 1, 0, 0, 1, 1, 0).finished(), Eigen::Vector2d(2.0, 3.0),
      Eigen::VectorXd::Ones(3));
  const Eigen::Vector2d u(0.4, -0.1);
  // d/du [alpha u - e^u] = alpha - e^u
  const Eigen::Vector2d expected(2.0 - std::exp(0.4), 3.0 - std::exp(-0.1));
  EXPECT_LT((score_at(family, u, Eigen::VectorXd::Zero(3)) - expected).norm(), 1e-12);
}

TEST(ScoreAt, HandComputedLogistic) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 0.5, 1, -1.0, 1, 2.0, 1, 0.0;
  const Eigen::Vector4d y(1, 0, 1, 0);
  const auto family = ModelFamily::bernoulli_logit(x, y, Eigen::VectorXd::Ones(4));
  const Eigen::Vector2d beta(0.2, -0.4);
  const Eigen::Vector4d wstar(2.0, 0.0, 1.0, 1.0);
  Eigen::Vector2d hand = Eigen::Vector2d::Zero();
  for (int i = 0; i < 4; ++i) {
    const double eta = beta[0] + beta[1] * x(i, 1);
    const double p = 1.0 / (1.0 + std::exp(-eta));
    hand += wstar[i] * (y[i] - p) * x.row(i).transpose();
  }
  EXPECT_LT((score_at(family, beta, wstar) - hand).cwiseAbs().maxCoeff(), 1e-10);
}

SurveyDesign unit_design(int n, const Eigen::VectorXd& w) {
  std::vector<std::string> psu;
  for (int i = 0; i < n; ++i) psu.push_back(std::to_string(i));
  return SurveyDesign(DataTable(), psu, std::vector<std::string>(n, "1"), w);
}

TEST(EstimateJ, IdenticalColumnsGiveZero) {
  std::mt19937_64 rng(6);
  const auto data = logistic_data(30, rng);
  const auto family = ModelFamily::bernoulli_logit(data.x, data.y, data.w);
  ReplicateDesign reps{unit_design(30, data.w), data.w.replicate(1, 5), ReplicateMethod::kCustom,
                       {0.2, Eigen::VectorXd::Ones(5)}, std::nullopt};
  const auto j = estimate_J(family, reps, Eigen::Vector3d(0.1, 0.2, 0.3));
  EXPECT_EQ(j.J.cwiseAbs().maxCoeff(), 0.0);
}

TEST(EstimateJ, TwoReplicateHandCalculation) {
  // Intercept-only logistic at beta = 0: score = sum_i w_i (y_i - 1/2).
  const Eigen::Vector4d y(1, 0, 1, 1);
  const Eigen::Vector4d w = Eigen::Vector4d::Ones();
  const auto family = ModelFamily::bernoulli_logit(Eigen::MatrixXd::Ones(4, 1), y, w);
  Eigen::MatrixXd rep(4, 2);
  rep << 2, 0, 0, 2, 2, 0, 0, 2;
  ReplicateDesign reps{unit_design(4, w), rep, ReplicateMethod::kCustom,
                       {0.5, Eigen::VectorXd::Ones(2)}, std::nullopt};
  const auto j = estimate_J(family, reps, Eigen::VectorXd::Zero(1));
  // center 1.0, scores (2*0.5 + 2*0.5, 2*(-0.5) + 2*0.5) = (2, 0): (1/2)(1 + 1) = 1
  EXPECT_DOUBLE_EQ(j.center[0], 1.0);
  EXPECT_DOUBLE_EQ(j.scores(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(j.scores(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(j.J(0, 0), 1.0);
}

TEST(EstimateJ, ConstantShiftLeavesJUnchanged) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd scores = random_matrix(10, 3, rng);
  const Eigen::VectorXd center = random_matrix(3, 1, rng);
  const Eigen::VectorXd shift = Eigen::Vector3d(5.0, -2.0, 0.25);
  const ReplicateScaling scaling{0.1, Eigen::VectorXd::Ones(10)};
  const Eigen::MatrixXd a = replicate_covariance(scores, center, scaling);
  const Eigen::MatrixXd b =
      replicate_covariance(scores.rowwise() + shift.transpose(), center + shift, scaling);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12 * a.norm());
}

TEST(EstimateJ, WarnsWhenFewerReplicatesThanParameters) {
  std::mt19937_64 rng(8);
  const auto data = logistic_data(20, rng);
  const auto family = ModelFamily::bernoulli_logit(data.x, data.y, data.w);
  ReplicateDesign reps{unit_design(20, data.w), data.w.replicate(1, 2), ReplicateMethod::kCustom,
                       {0.5, Eigen::VectorXd::Ones(2)}, std::nullopt};
  EXPECT_FALSE(estimate_J(family, reps, Eigen::Vector3d::Zero()).warnings.empty());
  reps.rep_weights = data.w;
  reps.scaling.rep_scales = Eigen::VectorXd::Ones(1);
  try {
    estimate_J(family, reps, Eigen::Vector3d::Zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInsufficientReplicates);
  }
}

TEST(SqrtSpd, IdentityAndDiagonal) {
  EXPECT_TRUE(sqrt_spd(Eigen::MatrixXd::Identity(3, 3), SqrtMethod::kEigen)
                  .isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-14));
  const Eigen::MatrixXd a = Eigen::Vector2d(4.0, 9.0).asDiagonal();
  const Eigen::MatrixXd chol = sqrt_spd(a, SqrtMethod::kCholesky);
  EXPECT_TRUE(chol.isApprox(Eigen::MatrixXd(Eigen::Vector2d(2.0, 3.0).asDiagonal()), 1e-14));
  const Eigen::MatrixXd eig = sqrt_spd(a, SqrtMethod::kEigen);
  EXPECT_LT((eig.transpose() * eig - a).norm(), 1e-12);
}

TEST(SqrtSpd, RandomSpdReconstruction) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd a = random_spd(5, rng);
    for (auto method : {SqrtMethod::kEigen, SqrtMethod::kCholesky}) {
      const Eigen::MatrixXd r = sqrt_spd(a, method);
      EXPECT_LT((r.transpose() * r - a).norm(), 1e-10 * a.norm());
    }
  }
}

TEST(SqrtSpd, CholeskyRejectsIndefinite) {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 2.0, 2.0, 1.0;
  try {
    sqrt_spd(a, SqrtMethod::kCholesky);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDecomposition);
    EXPECT_NE(std::string(e.what()).find("eigen"), std::string::npos);
  }
}

TEST(SqrtSpd, EigenClipsTinyNegativeEigenvalues) {
  Eigen::MatrixXd a = Eigen::Vector3d(1.0, 0.5, -1e-14).asDiagonal();
  const Eigen::MatrixXd r = sqrt_spd(a, SqrtMethod::kEigen);
  EXPECT_TRUE(r.allFinite());
  EXPECT_LT((r.transpose() * r - a).norm(), 1e-9);
}

class AdjustLaws : public ::testing::TestWithParam<SqrtMethod> {};

TEST_P(AdjustLaws, MeanAndCovariancePreservedByTheMap) {
  std::mt19937_64 rng(10);
  const DrawsMatrix draws = random_draws(500, 4, rng);
  const Eigen::MatrixXd h = random_spd(4, rng);
  const Eigen::MatrixXd j = random_spd(4, rng);
  const auto res = adjust_draws(draws, h, j, GetParam());
  EXPECT_LT((res.adjusted.column_mean() - draws.column_mean()).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::MatrixXd law = res.transform.transpose() * draws.covariance() * res.transform;
  EXPECT_LT(relative(res.adjusted.covariance(), law), 1e-8);
  EXPECT_LT(relative(res.R1.transpose() * res.R1, res.sandwich), 1e-10);
  EXPECT_LT(relative(res.R2.transpose() * res.R2, res.H_inverse), 1e-10);
}

TEST_P(AdjustLaws, CorrectSpecificationIsIdentity) {
  std::mt19937_64 rng(11);
  const DrawsMatrix draws = random_draws(200, 3, rng);
  const Eigen::MatrixXd h = random_spd(3, rng);
  const auto res = adjust_draws(draws, h, h, GetParam());
  EXPECT_LT((res.adjusted.values - draws.values).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((res.deff.array() - 1.0).abs().maxCoeff(), 1e-10);
}

TEST_P(AdjustLaws, FourfoldJDoublesDeviations) {
  std::mt19937_64 rng(12);
  const DrawsMatrix draws = random_draws(200, 3, rng);
  const Eigen::MatrixXd h = random_spd(3, rng);
  const auto res = adjust_draws(draws, h, 4.0 * h, GetParam());
  const Eigen::MatrixXd before = draws.values.rowwise() - draws.column_mean().transpose();
  const Eigen::MatrixXd after = res.adjusted.values.rowwise() - res.theta_bar.transpose();
  EXPECT_LT((after - 2.0 * before).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((res.deff.array() - 4.0).abs().maxCoeff(), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(BothRoots, AdjustLaws,
                         ::testing::Values(SqrtMethod::kEigen, SqrtMethod::kCholesky));

TEST(AdjustDraws, ZeroJCollapsesWithWarning) {
  std::mt19937_64 rng(13);
  const DrawsMatrix draws = random_draws(50, 2, rng);
  const auto res = adjust_draws(draws, random_spd(2, rng), Eigen::MatrixXd::Zero(2, 2),
                                SqrtMethod::kEigen);
  EXPECT_FALSE(res.warnings.empty());
  for (Eigen::Index m = 0; m < 50; ++m) {
    EXPECT_LT((res.adjusted.values.row(m).transpose() - res.theta_bar).norm(), 1e-12);
  }
}

TEST(AdjustDraws, IndefiniteHIsAnAdjustmentError) {
  std::mt19937_64 rng(14);
  const DrawsMatrix draws = random_draws(50, 2, rng);
  Eigen::MatrixXd h(2, 2);
  h << 1.0, 0.0, 0.0, -0.5;
  try {
    adjust_draws(draws, h, Eigen::MatrixXd::Identity(2, 2), SqrtMethod::kEigen);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAdjustment);
    EXPECT_NE(std::string(e.what()).find("condition"), std::string::npos);
  }
}

TEST(AdjustDraws, NearlySingularHIsClippedAndReported) {
  std::mt19937_64 rng(15);
  const DrawsMatrix draws = random_draws(50, 2, rng);
  const Eigen::MatrixXd h = Eigen::Vector2d(1.0, 1e-13).asDiagonal();
  const auto res = adjust_draws(draws, h, h, SqrtMethod::kEigen);
  EXPECT_EQ(res.h_clipped, 1u);
  EXPECT_GT(res.h_condition, 1e12);
  EXPECT_TRUE(res.adjusted.values.allFinite());
}

TEST(AdjustDraws, DerivedQuantitiesRecomputedFromAdjustedDraws) {
  const auto family = ModelFamily::multinomial_gamma(
      (Eigen::MatrixXd(3, 3) << 1, 0, 0, 0, 1, 0, 0, 0, 1).finished(), Eigen::VectorXd::Ones(3),
      Eigen::VectorXd::Ones(3));
  std::mt19937_64 rng(16);
  DrawsMatrix draws = random_draws(40, 3, rng);
  const Eigen::MatrixXd h = random_spd(3, rng);
  const auto res = adjust_draws(draws, h, 2.0 * h, SqrtMethod::kEigen, &family.space());
  const Eigen::MatrixXd expected = family.space().to_constrained_rows(res.adjusted.values);
  EXPECT_TRUE(res.adjusted_constrained.values == expected);
  EXPECT_EQ(res.adjusted_constrained.names, family.space().constrained_names());
  for (Eigen::Index m = 0; m < 40; ++m) {
    EXPECT_NEAR(res.adjusted_constrained.values.row(m).segment(3, 3).sum(), 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace svypost
