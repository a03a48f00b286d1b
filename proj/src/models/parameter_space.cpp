#include "svypost/models/parameter_space.hpp"

#include <cmath>

#include "svypost/core/error.hpp"

namespace svypost {

ParameterSpace::ParameterSpace(std::vector<TransformBlock> blocks,
                               std::vector<DerivedQuantity> derived)
    : blocks_(std::move(blocks)), derived_(std::move(derived)) {
  for (const auto& b : blocks_) {
    offsets_.push_back(dimension_);
    dimension_ += b.dim();
  }
  for (const auto& q : derived_) {
    if (q.block >= blocks_.size() || q.names.size() != blocks_[q.block].dim()) {
      throw Error(ErrorKind::kInvalidArgument, "derived quantity does not match its block");
    }
  }
}

std::vector<std::string> ParameterSpace::unconstrained_names() const {
  std::vector<std::string> out;
  for (const auto& b : blocks_) {
    for (const auto& n : b.names) {
      out.push_back(b.kind == TransformKind::kLogPositive ? "log_" + n : n);
    }
  }
  return out;
}

std::vector<std::string> ParameterSpace::constrained_names() const {
  std::vector<std::string> out;
  for (const auto& b : blocks_) out.insert(out.end(), b.names.begin(), b.names.end());
  for (const auto& q : derived_) out.insert(out.end(), q.names.begin(), q.names.end());
  return out;
}

std::size_t ParameterSpace::constrained_size() const {
  std::size_t n = dimension_;
  for (const auto& q : derived_) n += q.names.size();
  return n;
}

Eigen::VectorXd ParameterSpace::to_unconstrained(const Eigen::VectorXd& constrained) const {
  if (static_cast<std::size_t>(constrained.size()) != dimension_) {
    throw Error(ErrorKind::kInvalidArgument, "expected " + std::to_string(dimension_) +
                                                 " constrained values, got " +
                                                 std::to_string(constrained.size()));
  }
  Eigen::VectorXd out = constrained;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    if (blocks_[b].kind != TransformKind::kLogPositive) continue;
    for (std::size_t j = 0; j < blocks_[b].dim(); ++j) {
      const auto i = static_cast<Eigen::Index>(offsets_[b] + j);
      if (!(constrained[i] > 0.0) || !std::isfinite(constrained[i])) {
        throw Error(ErrorKind::kDomain, "parameter '" + blocks_[b].names[j] +
                                            "' must be positive, got " +
                                            std::to_string(constrained[i]));
      }
      out[i] = std::log(constrained[i]);
    }
  }
  return out;
}

Eigen::VectorXd ParameterSpace::to_constrained(const Eigen::VectorXd& unconstrained) const {
  if (static_cast<std::size_t>(unconstrained.size()) != dimension_) {
    throw Error(ErrorKind::kInvalidArgument, "expected " + std::to_string(dimension_) +
                                                 " unconstrained values, got " +
                                                 std::to_string(unconstrained.size()));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(constrained_size()));
  out.head(static_cast<Eigen::Index>(dimension_)) = unconstrained;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    if (blocks_[b].kind != TransformKind::kLogPositive) continue;
    auto seg = out.segment(static_cast<Eigen::Index>(offsets_[b]),
                           static_cast<Eigen::Index>(blocks_[b].dim()));
    seg = seg.array().exp().matrix();
  }
  auto pos = static_cast<Eigen::Index>(dimension_);
  for (const auto& q : derived_) {
    const auto len = static_cast<Eigen::Index>(q.names.size());
    const auto off = static_cast<Eigen::Index>(offsets_[q.block]);
    if (q.kind == DerivedKind::kSimplexOf) {
      // Softmax of the unconstrained values when the block is log-positive,
      // which avoids overflow for large coordinates.
      Eigen::VectorXd x = out.segment(off, len);
      if (blocks_[q.block].kind == TransformKind::kLogPositive) {
        const Eigen::VectorXd u = unconstrained.segment(off, len);
        x = (u.array() - u.maxCoeff()).exp().matrix();
      }
      out.segment(pos, len) = x / x.sum();
    } else {
      if (blocks_[q.block].kind == TransformKind::kLogPositive) {
        out.segment(pos, len) = unconstrained.segment(off, len);
      } else {
        out.segment(pos, len) = out.segment(off, len).array().log().matrix();
      }
    }
    pos += len;
  }
  return out;
}

Eigen::MatrixXd ParameterSpace::to_constrained_rows(const Eigen::MatrixXd& unconstrained) const {
  Eigen::MatrixXd out(unconstrained.rows(), static_cast<Eigen::Index>(constrained_size()));
  for (Eigen::Index m = 0; m < unconstrained.rows(); ++m) {
    out.row(m) = to_constrained(unconstrained.row(m).transpose()).transpose();
  }
  return out;
}

double ParameterSpace::log_jacobian(const Eigen::VectorXd& unconstrained) const {
  double total = 0.0;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    if (blocks_[b].kind != TransformKind::kLogPositive) continue;
    total += unconstrained
                 .segment(static_cast<Eigen::Index>(offsets_[b]),
                          static_cast<Eigen::Index>(blocks_[b].dim()))
                 .sum();
  }
  return total;
}

}  // namespace svypost
