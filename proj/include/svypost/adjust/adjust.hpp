#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "svypost/design/replicates.hpp"
#include "svypost/models/families.hpp"
#include "svypost/models/log_density.hpp"
#include "svypost/models/parameter_space.hpp"
#include "svypost/sampler/draws.hpp"

namespace svypost {

enum class HessianMethod {
  kMcmc,    // average over a thinned subsample of the draws
  kPlugin,  // single evaluation at the posterior mean
};
enum class SqrtMethod { kEigen, kCholesky };

std::string_view to_string(HessianMethod method);
HessianMethod parse_hessian_method(std::string_view text);
std::string_view to_string(SqrtMethod method);
SqrtMethod parse_sqrt_method(std::string_view text);

inline constexpr std::size_t kDefaultHessianDraws = 200;

/// Negative Hessian of `target` at `theta` by central differences of the
/// analytic gradient, step 1e-5 * max(1, |theta_j|), symmetrized.
Eigen::MatrixXd numerical_hessian(const LogDensity& target, const Eigen::VectorXd& theta);

struct HessianEstimate {
  Eigen::MatrixXd H;
  bool positive_definite = true;
  std::size_t draws_used = 0;
};

HessianEstimate estimate_H(const LogDensity& target, const DrawsMatrix& draws,
                           HessianMethod method, std::size_t max_draws = kDefaultHessianDraws,
                           std::size_t threads = 1);

/// Gradient of the log pseudo-posterior at theta with the likelihood weights
/// replaced by `replicate_weights` (prior and Jacobian terms kept).
Eigen::VectorXd score_at(const ModelFamily& family, const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& replicate_weights);

struct JEstimate {
  Eigen::MatrixXd J;
  Eigen::MatrixXd scores;  // K x d
  Eigen::VectorXd center;  // full-sample score
  std::vector<std::string> warnings;
};

/// Replicate covariance of the scores at theta. The replicate weights must be
/// on the same scale as family.weights().
JEstimate estimate_J(const ModelFamily& family, const ReplicateDesign& replicates,
                     const Eigen::VectorXd& theta, std::size_t threads = 1);

/// R with R^T R = A. Eigen: R = Λ^{1/2} Q^T with eigenvalues below
/// 1e-10 * λ_max raised to that floor. Cholesky: upper-triangular factor.
Eigen::MatrixXd sqrt_spd(const Eigen::MatrixXd& a, SqrtMethod method);

struct AdjustmentResult {
  Eigen::VectorXd theta_bar;
  Eigen::MatrixXd H;
  Eigen::MatrixXd J;
  Eigen::MatrixXd H_inverse;
  Eigen::MatrixXd sandwich;  // H^{-1} J H^{-1}
  Eigen::MatrixXd R1;
  Eigen::MatrixXd R2;
  Eigen::MatrixXd transform;  // R2^{-1} R1; rows are multiplied on the right
  DrawsMatrix unadjusted;
  DrawsMatrix adjusted;
  /// Constrained parameters and derived quantities, one row per draw.
  DrawsMatrix unadjusted_constrained;
  DrawsMatrix adjusted_constrained;
  Eigen::VectorXd deff;
  double h_condition = 1.0;
  std::size_t h_clipped = 0;  // eigenvalues raised to the floor
  bool h_positive_definite = true;
  std::vector<std::string> warnings;
};

/// Applies theta_a = (theta - theta_bar) R2^{-1} R1 + theta_bar to every draw.
/// When `space` is given, constrained draws are recomputed from both sets.
AdjustmentResult adjust_draws(const DrawsMatrix& draws, const Eigen::MatrixXd& H,
                              const Eigen::MatrixXd& J, SqrtMethod method,
                              const ParameterSpace* space = nullptr);

}  // namespace svypost
