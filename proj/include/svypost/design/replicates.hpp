#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "svypost/design/survey_design.hpp"

namespace svypost {

enum class ReplicateMethod { kMrbBootstrap, kJk1, kJkn, kCustom };
enum class Centering { kFullSample, kReplicateMean };

std::string_view to_string(ReplicateMethod method);
ReplicateMethod parse_replicate_method(std::string_view text);
std::string_view to_string(Centering centering);
Centering parse_centering(std::string_view text);

/// Scale constants of a replicate variance estimator:
///   V = C * sum_k r_k (t_k - c)(t_k - c)^T.
struct ReplicateScaling {
  double overall_scale = 1.0;
  Eigen::VectorXd rep_scales;
  Centering centering = Centering::kFullSample;
  /// When set to d, C is multiplied by K / (K - d), the parameter-count
  /// denominator some texts use in place of K.
  std::optional<int> dimension_denominator;
};

struct ReplicateDesign {
  SurveyDesign base;
  Eigen::MatrixXd rep_weights;  // n x K
  ReplicateMethod method = ReplicateMethod::kCustom;
  ReplicateScaling scaling;
  std::optional<std::uint64_t> seed;

  std::size_t replicates() const noexcept { return static_cast<std::size_t>(rep_weights.cols()); }

  /// Validates shapes, nonnegativity and scale constants.
  void validate() const;

  /// Multiplies base and replicate weights by `factor` (used when base weights
  /// are normalized after the replicate columns were produced).
  ReplicateDesign rescaled(double factor) const;
};

inline constexpr std::size_t kDefaultReplicates = 100;
inline constexpr ReplicateMethod kDefaultReplicateMethod = ReplicateMethod::kMrbBootstrap;

/// Generates replicate weights. For the jackknife methods K is the PSU count
/// and `replicates` is ignored; mrbbootstrap needs `seed`.
ReplicateDesign build_replicates(const SurveyDesign& design, ReplicateMethod method,
                                 std::size_t replicates, std::optional<std::uint64_t> seed);

/// C * sum_k r_k (t_k - c)(t_k - c)^T with c the given center or the replicate
/// mean, depending on scaling.centering. rep_stats is K x d.
Eigen::MatrixXd replicate_covariance(const Eigen::MatrixXd& rep_stats,
                                     const Eigen::VectorXd& center_stat,
                                     const ReplicateScaling& scaling);

/// Writes `<stem>.csv` (n rows x K columns) and `<stem>.meta` (key = value).
void export_replicates(const ReplicateDesign& design, const std::string& stem);

/// Reads replicate columns written by export_replicates (or any CSV with a
/// header and K numeric columns) and attaches them to `base`.
ReplicateDesign import_replicates(const SurveyDesign& base, const std::string& stem);

}  // namespace svypost
