#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace svypost {

/// A differentiable log density on an unconstrained space. Implementations
/// must be safe to evaluate concurrently.
class LogDensity {
 public:
  virtual ~LogDensity() = default;

  virtual std::size_t dimension() const = 0;
  virtual double log_density(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const = 0;
};

}  // namespace svypost
