#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace svypost {

/// M x d post-warmup draws on the unconstrained scale, one row per draw.
struct DrawsMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::vector<int> chain_id;

  Eigen::Index draws() const noexcept { return values.rows(); }
  Eigen::Index dimension() const noexcept { return values.cols(); }

  Eigen::VectorXd column_mean() const { return values.colwise().mean().transpose(); }
  /// Sample covariance with divisor M - 1.
  Eigen::MatrixXd covariance() const;
};

/// Sample covariance (divisor M - 1) of the rows of `values`.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& values);

/// One row per draw: draw, chain, then one column per name.
void write_draws_csv(const std::string& path, const Eigen::MatrixXd& values,
                     const std::vector<std::string>& names, const std::vector<int>& chain_id);

}  // namespace svypost
