#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "svypost/design/replicates.hpp"
#include "svypost/design/survey_design.hpp"

namespace svypost {

enum class VariableKind { kAuto, kNumeric, kCategorical };

/// A column expanded for estimation: numeric columns give one column,
/// categorical ones one indicator per level in sorted label order, labelled
/// `<column><level>`.
struct VariableMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;  // n x d
};

VariableMatrix expand_variable(const DataTable& table, const std::string& column,
                               VariableKind kind = VariableKind::kAuto);

/// How strata with a single sampled PSU contribute to linearization variances.
enum class LonelyPsu {
  kError,
  kAdjust,  // center the lone PSU total at the grand mean of PSU totals
};

/// Hajek weighted mean sum_i w_i y_i / sum_i w_i, per column.
Eigen::VectorXd ht_mean(const Eigen::VectorXd& weights, const Eigen::MatrixXd& values);
Eigen::VectorXd ht_mean(const SurveyDesign& design, const VariableMatrix& variable);

/// Taylor-linearization covariance of the Hajek mean: residual scores are
/// aggregated to PSU totals and their between-PSU variance is summed over
/// strata with n_h/(n_h-1) and (1 - n_h/N_h) factors.
Eigen::MatrixXd tl_covariance_mean(const SurveyDesign& design, const VariableMatrix& variable,
                                   LonelyPsu lonely = LonelyPsu::kError);
/// Standard errors: square roots of the diagonal of tl_covariance_mean.
Eigen::VectorXd tl_variance_mean(const SurveyDesign& design, const VariableMatrix& variable,
                                 LonelyPsu lonely = LonelyPsu::kError);

/// Replicate covariance of the Hajek mean (recomputed under every replicate column).
Eigen::MatrixXd replicate_covariance_mean(const ReplicateDesign& design,
                                          const VariableMatrix& variable);
Eigen::VectorXd replicate_se_mean(const ReplicateDesign& design, const VariableMatrix& variable);

}  // namespace svypost
