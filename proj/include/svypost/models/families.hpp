#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "svypost/models/log_density.hpp"
#include "svypost/models/parameter_space.hpp"

namespace svypost {

enum class FamilyKind { kNormalLinear, kBernoulliLogit, kMultinomialGamma };

std::string_view to_string(FamilyKind kind);
FamilyKind parse_family(std::string_view text);

/// Default half-Student-t scale for the residual sd of a linear model:
/// max(2.5, 1.4826 * median|y - median(y)| rounded to one decimal).
double default_sigma_scale(const Eigen::VectorXd& y);

/// Median with the average-of-middle-pair convention for even lengths.
double median(Eigen::VectorXd values);

/// Survey-weighted model: log pseudo-posterior
///   sum_i w_i log p(y_i | theta) + log prior(theta) + log|J|
/// on the unconstrained scale. Data are shared between copies, so
/// with_weights() is cheap.
class ModelFamily final : public LogDensity {
 public:
  struct NormalLinear {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    double sigma_df = 3.0;
    double sigma_scale = 2.5;
  };
  struct BernoulliLogit {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
  };
  struct MultinomialGamma {
    Eigen::MatrixXd y;  // one-hot, n x K
    Eigen::VectorXd alpha;
    std::vector<Eigen::Index> category;  // column holding the 1 in each row
  };
  using Data = std::variant<NormalLinear, BernoulliLogit, MultinomialGamma>;

  /// β flat, σ ~ half-t(df, 0, scale). Scale defaults to default_sigma_scale(y).
  static ModelFamily normal_linear(Eigen::MatrixXd x, Eigen::VectorXd y, Eigen::VectorXd weights,
                                   double sigma_df = 3.0,
                                   std::optional<double> sigma_scale = std::nullopt,
                                   std::vector<std::string> coef_names = {});
  /// β flat.
  static ModelFamily bernoulli_logit(Eigen::MatrixXd x, Eigen::VectorXd y,
                                     Eigen::VectorXd weights,
                                     std::vector<std::string> coef_names = {});
  /// λ_k ~ Gamma(α_k, rate 1), θ = λ / Σλ. Rows of y must be one-hot.
  static ModelFamily multinomial_gamma(Eigen::MatrixXd y, Eigen::VectorXd alpha,
                                       Eigen::VectorXd weights);

  FamilyKind kind() const noexcept;
  const Data& data() const noexcept { return *data_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  const ParameterSpace& space() const noexcept { return space_; }
  std::size_t observations() const noexcept { return static_cast<std::size_t>(weights_.size()); }

  std::size_t dimension() const override { return space_.dimension(); }
  double log_density(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const override;

  /// Weighted log-likelihood alone.
  double log_likelihood(const Eigen::VectorXd& theta) const;
  /// Log prior plus log-Jacobian.
  double log_prior(const Eigen::VectorXd& theta) const;

  /// Gradient of the log pseudo-posterior with the likelihood weights replaced.
  Eigen::VectorXd gradient_with_weights(const Eigen::VectorXd& theta,
                                        const Eigen::VectorXd& weights) const;

  ModelFamily with_weights(Eigen::VectorXd weights) const;

  /// β = 0, log σ = log sd(y), log λ = 0.
  Eigen::VectorXd default_init() const;

 private:
  ModelFamily(std::shared_ptr<const Data> data, Eigen::VectorXd weights, ParameterSpace space);

  void check_dimension(const Eigen::VectorXd& theta) const;
  double log_likelihood_with(const Eigen::VectorXd& theta, const Eigen::VectorXd& w) const;
  Eigen::VectorXd likelihood_gradient_with(const Eigen::VectorXd& theta,
                                           const Eigen::VectorXd& w) const;
  Eigen::VectorXd prior_gradient(const Eigen::VectorXd& theta) const;

  std::shared_ptr<const Data> data_;
  Eigen::VectorXd weights_;
  ParameterSpace space_;
};

}  // namespace svypost
