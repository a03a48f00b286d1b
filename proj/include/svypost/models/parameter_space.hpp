#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace svypost {

enum class TransformKind { kIdentity, kLogPositive };

struct TransformBlock {
  TransformKind kind = TransformKind::kIdentity;
  std::vector<std::string> names;  // one per element
  std::size_t dim() const noexcept { return names.size(); }
};

enum class DerivedKind {
  kSimplexOf,  // x_k / sum_j x_j of a block
  kLogOf,      // log x_k of a block
};

struct DerivedQuantity {
  DerivedKind kind = DerivedKind::kSimplexOf;
  std::size_t block = 0;
  std::vector<std::string> names;
};

/// Ordered transform blocks mapping constrained parameters to R^d, plus
/// quantities derived from the constrained values.
class ParameterSpace {
 public:
  ParameterSpace() = default;
  ParameterSpace(std::vector<TransformBlock> blocks, std::vector<DerivedQuantity> derived = {});

  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<TransformBlock>& blocks() const noexcept { return blocks_; }
  const std::vector<DerivedQuantity>& derived() const noexcept { return derived_; }

  /// Names of the d unconstrained coordinates (log blocks get a `log_` prefix).
  std::vector<std::string> unconstrained_names() const;
  /// Constrained parameters followed by derived quantities.
  std::vector<std::string> constrained_names() const;
  std::size_t constrained_size() const;

  /// Maps constrained block values (length d) to R^d. Throws kDomain on a
  /// nonpositive entry of a log block.
  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& constrained) const;
  /// Maps R^d to constrained values followed by derived quantities.
  Eigen::VectorXd to_constrained(const Eigen::VectorXd& unconstrained) const;
  /// Row-wise to_constrained of an M x d matrix.
  Eigen::MatrixXd to_constrained_rows(const Eigen::MatrixXd& unconstrained) const;

  /// Sum of log-Jacobian terms of the constraining map at `unconstrained`.
  double log_jacobian(const Eigen::VectorXd& unconstrained) const;

 private:
  std::vector<TransformBlock> blocks_;
  std::vector<DerivedQuantity> derived_;
  std::vector<std::size_t> offsets_;
  std::size_t dimension_ = 0;
};

}  // namespace svypost
