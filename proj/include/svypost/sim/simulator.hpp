#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "svypost/core/keyvalue.hpp"
#include "svypost/core/table.hpp"
#include "svypost/design/survey_design.hpp"
#include "svypost/models/families.hpp"
#include "svypost/report/config.hpp"

namespace svypost {

enum class SchemeKind { kSrs, kStratifiedSrs, kOneStageCluster, kPpsSystematic };
enum class Allocation { kProportional, kEqual };

std::string_view to_string(SchemeKind kind);
SchemeKind parse_scheme(std::string_view text);

/// Population model: covariates x1..xp ~ N(0, 1) (optionally sharing a
/// cluster component) and a response drawn from the family at theta0.
struct PopulationModel {
  FamilyKind family = FamilyKind::kBernoulliLogit;
  /// Constrained truth: normal_linear (β..., σ), bernoulli_logit β,
  /// multinomial_gamma category probabilities θ. β includes the intercept.
  std::vector<double> theta0 = {0.0};
  std::size_t predictors = 0;
  std::size_t clusters = 1;        // population clusters of equal size
  double cluster_icc = 0.0;        // covariate variance share at cluster level
};

struct SamplingScheme {
  SchemeKind kind = SchemeKind::kSrs;
  std::size_t n = 100;
  // stratified_srs: equal-size strata cut on `stratify_on` quantiles.
  std::size_t strata = 2;
  std::string stratify_on = "y";
  Allocation allocation = Allocation::kProportional;
  // one_stage_cluster: clusters selected by SRS, all units kept.
  std::size_t clusters_selected = 0;
  // pps_systematic: size = exp(size_y * y + size_x * x1 + size_noise * u),
  // u ~ N(0, 1) per unit. With size_noise = 0 the size-sorted frame is
  // implicitly stratified on y (and x1), which with-replacement replicate
  // variances do not see.
  double size_y = 1.0;
  double size_x = 0.0;
  double size_noise = 0.0;
};

struct SimScenario {
  PopulationModel model;
  std::size_t N = 10000;
  SamplingScheme scheme;
  std::size_t replications = 200;
  double level = 0.90;
  std::uint64_t seed = 0;
  /// Sampler, replicate and adjustment settings for each fit. Study defaults
  /// are iter = 1000, warmup = 500.
  FitConfig fit;

  SimScenario();
  void validate() const;
  /// Reads model.*, population.*, scheme.*, study.* keys; sampler.*,
  /// replicates.*, adjust.* and threads go to `fit`.
  static SimScenario from_key_values(const KeyValues& values);
  /// Names of the constrained quantities whose coverage is measured.
  std::vector<std::string> target_names() const;
};

/// Columns: unit, cluster, x1..xp, y (multinomial y holds labels k1..kK).
DataTable generate_population(const SimScenario& scenario, std::uint64_t seed);

/// Sampled rows with weight = 1/pi, plus stratum/PSU labels; the table gains
/// `pi` and `weight` columns.
SurveyDesign draw_sample(const DataTable& population, const SimScenario& scenario,
                         std::uint64_t seed);

/// Inclusion probabilities proportional to `size` summing to n; units whose
/// share would exceed 1 are taken with certainty.
Eigen::VectorXd pps_inclusion_probabilities(const Eigen::VectorXd& size, std::size_t n);

struct CoverageRow {
  std::size_t replication = 0;
  std::string parameter;
  bool covered_adjusted = false;
  bool covered_unadjusted = false;
  double deff = 0.0;
};

struct CoverageSummary {
  std::string parameter;
  double truth = 0.0;
  double coverage_adjusted = 0.0;
  double se_adjusted = 0.0;
  double coverage_unadjusted = 0.0;
  double se_unadjusted = 0.0;
  double mean_deff = 0.0;
};

struct CoverageResult {
  std::vector<CoverageRow> rows;
  std::vector<CoverageSummary> summary;
  std::size_t completed = 0;
  std::size_t failures = 0;
  double level = 0.0;
};

/// Runs scenario.replications independent sample-and-fit rounds. Failed
/// rounds are logged and counted; more than 10% failures is a study error.
CoverageResult coverage_study(const SimScenario& scenario);

void write_coverage_csv(const CoverageResult& result, const std::string& path);
void write_coverage_summary_json(const CoverageResult& result, const SimScenario& scenario,
                                 const std::string& path);

}  // namespace svypost
