#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "svypost/core/error.hpp"
#include "svypost/design/estimators.hpp"
#include "svypost/design/replicates.hpp"
#include "svypost/design/survey_design.hpp"

namespace svypost {
namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kStudy;
}

std::vector<std::string> labels(std::initializer_list<int> ids) {
  std::vector<std::string> out;
  for (int id : ids) out.push_back(std::to_string(id));
  return out;
}

// Frozen from tests/oracles/design_toys.py.
struct Toy {
  SurveyDesign design;
  VariableMatrix y;
};

Toy toy(bool with_fpc = false) {
  Eigen::VectorXd w(8), y(8);
  w << 1.0, 2.0, 1.5, 1.0, 3.0, 2.0, 2.5, 0.5;
  y << 0.3, 1.1, 2.0, 0.7, 1.4, 0.2, 0.9, 3.1;
  std::optional<std::vector<double>> fpc;
  if (with_fpc) fpc = std::vector<double>{10, 10, 10, 10, 6, 6, 6, 6};
  SurveyDesign design(DataTable(), labels({1, 1, 2, 2, 3, 3, 4, 4}),
                      labels({1, 1, 1, 1, 2, 2, 2, 2}), w, fpc);
  return {design, VariableMatrix{{"y"}, y}};
}

TEST(NormalizeWeights, Examples) {
  EXPECT_TRUE(normalize_weights(Eigen::Vector4d(5, 5, 5, 5)) == Eigen::Vector4d::Ones());
  const Eigen::VectorXd out = normalize_weights(Eigen::Vector3d(2, 4, 6));
  EXPECT_TRUE(out.isApprox(Eigen::Vector3d(0.5, 1.0, 1.5), 1e-15));
}

TEST(NormalizeWeights, MeanIsOne) {
  Eigen::VectorXd raw = Eigen::VectorXd::LinSpaced(200, 3.7, 912.4).array().square();
  const Eigen::VectorXd out = normalize_weights(raw);
  EXPECT_NEAR(out.mean(), 1.0, 1e-12);
  EXPECT_NEAR(out.sum(), 200.0, 1e-10);
  for (Eigen::Index i = 1; i < out.size(); ++i) EXPECT_LT(out[i - 1], out[i]);
}

TEST(NormalizeWeights, RejectsBadWeights) {
  EXPECT_EQ(kind_of([] { normalize_weights(Eigen::Vector2d(1.0, 0.0)); }),
            ErrorKind::kInvalidWeights);
  EXPECT_EQ(kind_of([] { normalize_weights(Eigen::Vector2d(1.0, -2.0)); }),
            ErrorKind::kInvalidWeights);
  EXPECT_EQ(kind_of([] { normalize_weights(Eigen::Vector2d(1.0, std::nan(""))); }),
            ErrorKind::kInvalidWeights);
}

TEST(SurveyDesign, NestedLabelsAreWithinStratum) {
  const auto psu = labels({1, 2, 1, 2});
  const auto strata = labels({1, 1, 2, 2});
  EXPECT_EQ(kind_of([&] { SurveyDesign(DataTable(), psu, strata, Eigen::Vector4d::Ones()); }),
            ErrorKind::kData);
  SurveyDesign nested(DataTable(), psu, strata, Eigen::Vector4d::Ones(), std::nullopt, true);
  EXPECT_EQ(nested.psu_count(), 4u);
  EXPECT_EQ(nested.strata().size(), 2u);
}

TEST(SurveyDesign, FpcMustCoverSampledPsus) {
  EXPECT_EQ(kind_of([] {
              SurveyDesign(DataTable(), labels({1, 2, 3}), labels({1, 1, 1}),
                           Eigen::Vector3d::Ones(), std::vector<double>{2, 2, 2});
            }),
            ErrorKind::kData);
}

TEST(SurveyDesign, MissingWeightColumnNamesIt) {
  DataTable table;
  table.add_column("x", Eigen::Vector2d(1, 2));
  try {
    SurveyDesign::from_table(table, DesignColumns{"", "", "pw", "", false});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
    EXPECT_NE(std::string(e.what()).find("pw"), std::string::npos);
  }
}

TEST(BuildReplicates, TwoPsuBootstrapHalves) {
  Eigen::VectorXd w(4);
  w << 1.0, 3.0, 2.0, 2.0;  // equal PSU totals
  SurveyDesign design(DataTable(), labels({1, 1, 2, 2}), labels({1, 1, 1, 1}), w);
  const auto reps = build_replicates(design, ReplicateMethod::kMrbBootstrap, 20, 7);
  ASSERT_EQ(reps.replicates(), 20u);
  EXPECT_DOUBLE_EQ(reps.scaling.overall_scale, 1.0 / 20.0);
  for (Eigen::Index k = 0; k < 20; ++k) {
    const auto col = reps.rep_weights.col(k);
    const bool first = col[0] > 0.0;
    const Eigen::Vector4d doubled = first ? Eigen::Vector4d(2, 6, 0, 0) : Eigen::Vector4d(0, 0, 4, 4);
    EXPECT_TRUE(col == doubled);
    EXPECT_DOUBLE_EQ(col.sum(), w.sum());
    EXPECT_EQ(reps.scaling.rep_scales[k], 1.0);
  }
}

TEST(BuildReplicates, DefaultsAreBootstrapWithOneHundred) {
  EXPECT_EQ(kDefaultReplicateMethod, ReplicateMethod::kMrbBootstrap);
  EXPECT_EQ(kDefaultReplicates, 100u);
}

SurveyDesign ten_psu_design(bool equal_psu_totals) {
  std::vector<std::string> psu, strata;
  Eigen::VectorXd w(30);
  for (int i = 0; i < 30; ++i) {
    psu.push_back(std::to_string(i / 3));  // 10 PSUs of 3 rows
    strata.push_back(i < 12 ? "a" : "b");  // 4 PSUs in a, 6 in b
    w[i] = equal_psu_totals ? (i < 12 ? 1.5 : 4.0) + 0.25 * (i % 3) : 1.0 + 0.1 * i;
  }
  return SurveyDesign(DataTable(), psu, strata, w);
}

TEST(BuildReplicates, BootstrapPreservesEvenStratumTotals) {
  // Exact preservation needs equal PSU weight totals within each stratum.
  const SurveyDesign design = ten_psu_design(true);
  const Eigen::VectorXd& w = design.weights();
  const auto reps = build_replicates(design, ReplicateMethod::kMrbBootstrap, 50, 123);
  for (Eigen::Index k = 0; k < 50; ++k) {
    const auto col = reps.rep_weights.col(k);
    EXPECT_NEAR(col.head(12).sum(), w.head(12).sum(), 1e-10 * w.sum());
    EXPECT_NEAR(col.tail(18).sum(), w.tail(18).sum(), 1e-10 * w.sum());
  }
}

TEST(BuildReplicates, BootstrapMultipliersPerPsu) {
  const SurveyDesign design = ten_psu_design(false);
  const Eigen::VectorXd& w = design.weights();
  const auto reps = build_replicates(design, ReplicateMethod::kMrbBootstrap, 4000, 5);
  for (Eigen::Index k = 0; k < 50; ++k) {
    const auto col = reps.rep_weights.col(k);
    int selected_a = 0;
    for (std::size_t p = 0; p < design.psu_count(); ++p) {
      std::set<double> ratios;
      for (auto r : design.rows_of_psu(p)) ratios.insert(col[r] / w[r]);
      ASSERT_EQ(ratios.size(), 1u);
      const double ratio = *ratios.begin();
      EXPECT_TRUE(ratio == 0.0 || ratio == 2.0);
      if (p < 4 && ratio > 0.0) ++selected_a;
    }
    EXPECT_EQ(selected_a, 2);
  }
  // Unequal PSU totals are preserved on average over replicates.
  const Eigen::VectorXd mean_col = reps.rep_weights.rowwise().mean();
  EXPECT_NEAR(mean_col.head(12).sum() / w.head(12).sum(), 1.0, 0.02);
  EXPECT_NEAR(mean_col.tail(18).sum() / w.tail(18).sum(), 1.0, 0.02);
}

TEST(BuildReplicates, BootstrapIsSeeded) {
  const SurveyDesign design = ten_psu_design(false);
  const auto reps = build_replicates(design, ReplicateMethod::kMrbBootstrap, 50, 123);
  const auto again = build_replicates(design, ReplicateMethod::kMrbBootstrap, 50, 123);
  EXPECT_TRUE(again.rep_weights == reps.rep_weights);
  const auto other = build_replicates(design, ReplicateMethod::kMrbBootstrap, 50, 124);
  EXPECT_FALSE(other.rep_weights == reps.rep_weights);
  EXPECT_EQ(kind_of([&] { build_replicates(design, ReplicateMethod::kMrbBootstrap, 50, {}); }),
            ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([&] { build_replicates(design, ReplicateMethod::kMrbBootstrap, 0, 1); }),
            ErrorKind::kInvalidArgument);
}

TEST(BuildReplicates, JknEnumeration) {
  // Stratum 1 has PSUs 1-3, stratum 2 has PSUs 4-7; one row per PSU.
  const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(7, 1.0, 7.0);
  SurveyDesign design(DataTable(), labels({1, 2, 3, 4, 5, 6, 7}), labels({1, 1, 1, 2, 2, 2, 2}), w);
  const auto reps = build_replicates(design, ReplicateMethod::kJkn, 999, std::nullopt);
  ASSERT_EQ(reps.replicates(), 7u);
  EXPECT_EQ(reps.scaling.overall_scale, 1.0);
  for (Eigen::Index k = 0; k < 7; ++k) {
    const bool first = k < 3;
    Eigen::VectorXd expected = w;
    for (Eigen::Index i = 0; i < 7; ++i) {
      const bool same = (i < 3) == first;
      if (i == k) expected[i] = 0.0;
      else if (same) expected[i] *= first ? 1.5 : 4.0 / 3.0;
    }
    EXPECT_TRUE(reps.rep_weights.col(k).isApprox(expected, 1e-15)) << "replicate " << k;
    EXPECT_DOUBLE_EQ(reps.scaling.rep_scales[k], first ? 2.0 / 3.0 : 0.75);
  }
}

TEST(BuildReplicates, Jk1DropsOnePsuEach) {
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
  SurveyDesign design(DataTable(), labels({1, 2, 3, 4}), labels({1, 1, 1, 1}), w);
  const auto reps = build_replicates(design, ReplicateMethod::kJk1, 1, std::nullopt);
  ASSERT_EQ(reps.replicates(), 4u);
  EXPECT_DOUBLE_EQ(reps.scaling.overall_scale, 0.75);
  for (Eigen::Index k = 0; k < 4; ++k) {
    EXPECT_EQ(reps.rep_weights(k, k), 0.0);
    EXPECT_DOUBLE_EQ(reps.rep_weights.col(k).sum(), 4.0);
  }
}

TEST(BuildReplicates, SinglePsuStratumIsDegenerate) {
  SurveyDesign design(DataTable(), labels({1, 2, 3}), labels({1, 1, 2}), Eigen::Vector3d::Ones());
  EXPECT_EQ(kind_of([&] { build_replicates(design, ReplicateMethod::kJkn, 1, {}); }),
            ErrorKind::kDegenerateStratum);
  EXPECT_EQ(kind_of([&] { build_replicates(design, ReplicateMethod::kMrbBootstrap, 10, 1); }),
            ErrorKind::kDegenerateStratum);
}

TEST(ReplicateCovariance, Examples) {
  const ReplicateScaling half{0.5, Eigen::Vector2d::Ones()};
  const Eigen::MatrixXd v = replicate_covariance(Eigen::Vector2d(1.0, 3.0), Eigen::VectorXd::Constant(1, 2.0), half);
  EXPECT_DOUBLE_EQ(v(0, 0), 1.0);

  Eigen::MatrixXd same(5, 2);
  same.rowwise() = Eigen::RowVector2d(0.1, 0.7);
  const ReplicateScaling fifth{0.2, Eigen::VectorXd::Ones(5)};
  EXPECT_TRUE(replicate_covariance(same, Eigen::Vector2d(0.1, 0.7), fifth).isZero(0.0));
  ReplicateScaling around_mean = fifth;
  around_mean.centering = Centering::kReplicateMean;
  EXPECT_TRUE(replicate_covariance(same, Eigen::Vector2d::Zero(), around_mean).isZero(0.0));

  EXPECT_EQ(kind_of([&] { replicate_covariance(same, Eigen::Vector3d::Zero(), fifth); }),
            ErrorKind::kInvalidArgument);
}

TEST(ReplicateCovariance, DimensionDenominatorOverride) {
  ReplicateScaling s{0.25, Eigen::VectorXd::Ones(4)};
  Eigen::MatrixXd t(4, 1);
  t << 1, 2, 3, 4;
  const double plain = replicate_covariance(t, Eigen::VectorXd::Constant(1, 2.5), s)(0, 0);
  s.dimension_denominator = 1;
  EXPECT_DOUBLE_EQ(replicate_covariance(t, Eigen::VectorXd::Constant(1, 2.5), s)(0, 0),
                   plain * 4.0 / 3.0);
}

TEST(ReplicateCovariance, JknTotalMatchesCollapsedStratumFormula) {
  const Toy t = toy();
  const auto reps = build_replicates(t.design, ReplicateMethod::kJkn, 1, {});
  const Eigen::VectorXd wy = t.design.weights().cwiseProduct(t.y.values.col(0));
  const Eigen::MatrixXd stats = reps.rep_weights.transpose() * t.y.values;
  const Eigen::VectorXd center = Eigen::VectorXd::Constant(1, wy.sum());
  EXPECT_NEAR(replicate_covariance(stats, center, reps.scaling)(0, 0), 2.08, 1e-12);
}

TEST(HtMean, Examples) {
  EXPECT_DOUBLE_EQ(ht_mean(Eigen::Vector3d(1, 1, 2), Eigen::Vector3d(0, 1, 1))[0], 0.75);
  EXPECT_DOUBLE_EQ(ht_mean(Eigen::Vector3d(1, 5, 2), Eigen::Vector3d(4, 4, 4))[0], 4.0);
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(11, -3.0, 8.0);
  EXPECT_NEAR(ht_mean(Eigen::VectorXd::Ones(11), y)[0], y.mean(), 1e-12);
}

TEST(HtMean, CategoricalExpansionIsSorted) {
  DataTable table;
  table.add_column("stype", std::vector<std::string>{"M", "E", "H", "E"});
  const auto v = expand_variable(table, "stype");
  EXPECT_EQ(v.labels, (std::vector<std::string>{"stypeE", "stypeH", "stypeM"}));
  const Eigen::VectorXd m = ht_mean(Eigen::Vector4d(1, 1, 1, 1), v.values);
  EXPECT_TRUE(m.isApprox(Eigen::Vector3d(0.5, 0.25, 0.25)));
  EXPECT_EQ(kind_of([&] { expand_variable(table, "nope"); }), ErrorKind::kNotFound);
}

TEST(TlVariance, HandComputedToy) {
  const Toy t = toy();
  EXPECT_NEAR(ht_mean(t.design, t.y)[0], 1.0814814814814813, 1e-14);
  EXPECT_NEAR(tl_variance_mean(t.design, t.y)[0], 0.16376647639925324, 1e-13);
  const Toy f = toy(true);
  EXPECT_NEAR(tl_variance_mean(f.design, f.y)[0], 0.14176214202490409, 1e-13);
}

TEST(TlVariance, ConstantVariableHasZeroSe) {
  Toy t = toy();
  t.y.values.setConstant(2.5);
  EXPECT_NEAR(tl_variance_mean(t.design, t.y)[0], 0.0, 1e-15);
}

TEST(TlVariance, LonelyPsuHandling) {
  SurveyDesign design(DataTable(), labels({1, 2, 3}), labels({1, 1, 2}), Eigen::Vector3d::Ones());
  const VariableMatrix y{{"y"}, Eigen::Vector3d(1.0, 2.0, 4.0)};
  EXPECT_EQ(kind_of([&] { tl_variance_mean(design, y); }), ErrorKind::kDegenerateStratum);
  const double se = tl_variance_mean(design, y, LonelyPsu::kAdjust)[0];
  EXPECT_TRUE(std::isfinite(se));
  EXPECT_GT(se, 0.0);
}

TEST(ReplicateSe, JknToyMatchesJackknifeByHand) {
  const Toy t = toy();
  const auto reps = build_replicates(t.design, ReplicateMethod::kJkn, 1, {});
  const Eigen::VectorXd w = t.design.weights();
  const double full = ht_mean(w, t.y.values)[0];
  double v = 0.0;
  for (Eigen::Index k = 0; k < 4; ++k) {
    const double rep = ht_mean(reps.rep_weights.col(k), t.y.values)[0];
    v += 0.5 * (rep - full) * (rep - full);
  }
  EXPECT_NEAR(replicate_se_mean(reps, t.y)[0], std::sqrt(v), 1e-14);
}

TEST(ReplicateIo, RoundTrip) {
  const Toy t = toy();
  const auto reps = build_replicates(t.design, ReplicateMethod::kMrbBootstrap, 6, 77);
  const auto dir = std::filesystem::temp_directory_path() / "svypost_rep_io";
  std::filesystem::create_directories(dir);
  const std::string stem = (dir / "reps").string();
  export_replicates(reps, stem);
  const auto back = import_replicates(t.design, stem);
  EXPECT_TRUE(back.rep_weights == reps.rep_weights);
  EXPECT_EQ(back.method, reps.method);
  EXPECT_EQ(back.seed, reps.seed);
  EXPECT_DOUBLE_EQ(back.scaling.overall_scale, reps.scaling.overall_scale);
  EXPECT_TRUE(back.scaling.rep_scales == reps.scaling.rep_scales);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace svypost
