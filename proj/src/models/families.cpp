#include "svypost/models/families.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "svypost/core/error.hpp"

namespace svypost {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<std::string> indexed(const std::string& stem, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

void check_weights(const Eigen::VectorXd& w, Eigen::Index n) {
  if (w.size() != n) {
    throw Error(ErrorKind::kInvalidArgument, "model has " + std::to_string(n) + " rows but " +
                                                 std::to_string(w.size()) + " weights");
  }
  if (!w.allFinite() || (w.array() < 0.0).any()) {
    throw Error(ErrorKind::kInvalidWeights, "model weights must be finite and nonnegative");
  }
}

double softplus(double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double log_sum_exp(const Eigen::VectorXd& u) {
  const double m = u.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((u.array() - m).exp().sum());
}

}  // namespace

std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kNormalLinear: return "normal_linear";
    case FamilyKind::kBernoulliLogit: return "bernoulli_logit";
    case FamilyKind::kMultinomialGamma: return "multinomial_gamma";
  }
  return "unknown";
}

FamilyKind parse_family(std::string_view text) {
  if (text == "normal_linear" || text == "gaussian") return FamilyKind::kNormalLinear;
  if (text == "bernoulli_logit" || text == "bernoulli") return FamilyKind::kBernoulliLogit;
  if (text == "multinomial_gamma" || text == "multinomial") return FamilyKind::kMultinomialGamma;
  throw Error(ErrorKind::kConfiguration,
              "unknown model family '" + std::string(text) +
                  "' (expected normal_linear, bernoulli_logit or multinomial_gamma)");
}

double median(Eigen::VectorXd values) {
  if (values.size() == 0) throw Error(ErrorKind::kInvalidArgument, "median of empty vector");
  std::sort(values.data(), values.data() + values.size());
  const Eigen::Index n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double default_sigma_scale(const Eigen::VectorXd& y) {
  const double center = median(y);
  const double mad = 1.4826 * median((y.array() - center).abs().matrix());
  return std::max(2.5, std::round(mad * 10.0) / 10.0);
}

ModelFamily::ModelFamily(std::shared_ptr<const Data> data, Eigen::VectorXd weights,
                         ParameterSpace space)
    : data_(std::move(data)), weights_(std::move(weights)), space_(std::move(space)) {}

ModelFamily ModelFamily::normal_linear(Eigen::MatrixXd x, Eigen::VectorXd y,
                                       Eigen::VectorXd weights, double sigma_df,
                                       std::optional<double> sigma_scale,
                                       std::vector<std::string> coef_names) {
  if (x.rows() != y.size() || x.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "design matrix and response differ in length");
  }
  check_weights(weights, y.size());
  if (!(sigma_df > 0.0)) throw Error(ErrorKind::kInvalidArgument, "sigma prior df must be positive");
  const double scale = sigma_scale.value_or(default_sigma_scale(y));
  if (!(scale > 0.0)) throw Error(ErrorKind::kInvalidArgument, "sigma prior scale must be positive");
  if (coef_names.empty()) coef_names = indexed("b", static_cast<std::size_t>(x.cols()));
  ParameterSpace space({TransformBlock{TransformKind::kIdentity, std::move(coef_names)},
                        TransformBlock{TransformKind::kLogPositive, {"sigma"}}});
  auto data = std::make_shared<const Data>(NormalLinear{std::move(x), std::move(y), sigma_df, scale});
  return ModelFamily(std::move(data), std::move(weights), std::move(space));
}

ModelFamily ModelFamily::bernoulli_logit(Eigen::MatrixXd x, Eigen::VectorXd y,
                                         Eigen::VectorXd weights,
                                         std::vector<std::string> coef_names) {
  if (x.rows() != y.size() || x.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "design matrix and response differ in length");
  }
  check_weights(weights, y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw Error(ErrorKind::kData, "bernoulli response must be 0/1 (row " +
                                        std::to_string(i + 1) + ")");
    }
  }
  if (coef_names.empty()) coef_names = indexed("b", static_cast<std::size_t>(x.cols()));
  ParameterSpace space({TransformBlock{TransformKind::kIdentity, std::move(coef_names)}});
  auto data = std::make_shared<const Data>(BernoulliLogit{std::move(x), std::move(y)});
  return ModelFamily(std::move(data), std::move(weights), std::move(space));
}

ModelFamily ModelFamily::multinomial_gamma(Eigen::MatrixXd y, Eigen::VectorXd alpha,
                                           Eigen::VectorXd weights) {
  const Eigen::Index k = y.cols();
  if (k < 2 || y.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "multinomial response needs >= 2 categories and rows");
  }
  if (alpha.size() != k || !(alpha.array() > 0.0).all()) {
    throw Error(ErrorKind::kInvalidArgument, "need one positive alpha per category");
  }
  check_weights(weights, y.rows());
  std::vector<Eigen::Index> category(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    Eigen::Index hot = -1;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (y(i, j) == 1.0 && hot < 0) {
        hot = j;
      } else if (y(i, j) != 0.0) {
        hot = -2;
        break;
      }
    }
    if (hot < 0) {
      throw Error(ErrorKind::kData, "multinomial row " + std::to_string(i + 1) +
                                        " is not a one-hot indicator");
    }
    category[static_cast<std::size_t>(i)] = hot;
  }
  const auto kk = static_cast<std::size_t>(k);
  ParameterSpace space({TransformBlock{TransformKind::kLogPositive, indexed("lambda", kk)}},
                       {DerivedQuantity{DerivedKind::kSimplexOf, 0, indexed("theta", kk)},
                        DerivedQuantity{DerivedKind::kLogOf, 0, indexed("loglam", kk)}});
  auto data = std::make_shared<const Data>(
      MultinomialGamma{std::move(y), std::move(alpha), std::move(category)});
  return ModelFamily(std::move(data), std::move(weights), std::move(space));
}

FamilyKind ModelFamily::kind() const noexcept {
  return static_cast<FamilyKind>(data_->index());
}

void ModelFamily::check_dimension(const Eigen::VectorXd& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dimension()) {
    throw Error(ErrorKind::kInvalidArgument, "parameter vector has length " +
                                                 std::to_string(theta.size()) + ", model needs " +
                                                 std::to_string(dimension()));
  }
}

double ModelFamily::log_likelihood_with(const Eigen::VectorXd& theta,
                                        const Eigen::VectorXd& w) const {
  return std::visit(
      Overloaded{
          [&](const NormalLinear& m) {
            const Eigen::Index p = m.x.cols();
            const double s = theta[p];
            const double inv_var = std::exp(-2.0 * s);
            const Eigen::VectorXd r = m.y - m.x * theta.head(p);
            const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
            return -(half_log_2pi + s) * w.sum() - 0.5 * inv_var * w.dot(r.cwiseProduct(r));
          },
          [&](const BernoulliLogit& m) {
            const Eigen::VectorXd eta = m.x * theta;
            double total = 0.0;
            for (Eigen::Index i = 0; i < eta.size(); ++i) {
              total += w[i] * (m.y[i] * eta[i] - softplus(eta[i]));
            }
            return total;
          },
          [&](const MultinomialGamma& m) {
            const double lse = log_sum_exp(theta);
            double total = 0.0;
            for (Eigen::Index i = 0; i < w.size(); ++i) {
              total += w[i] * (theta[m.category[static_cast<std::size_t>(i)]] - lse);
            }
            return total;
          },
      },
      *data_);
}

Eigen::VectorXd ModelFamily::likelihood_gradient_with(const Eigen::VectorXd& theta,
                                                      const Eigen::VectorXd& w) const {
  return std::visit(
      Overloaded{
          [&](const NormalLinear& m) {
            const Eigen::Index p = m.x.cols();
            const double inv_var = std::exp(-2.0 * theta[p]);
            const Eigen::VectorXd r = m.y - m.x * theta.head(p);
            Eigen::VectorXd g(p + 1);
            g.head(p) = inv_var * (m.x.transpose() * w.cwiseProduct(r));
            g[p] = -w.sum() + inv_var * w.dot(r.cwiseProduct(r));
            return g;
          },
          [&](const BernoulliLogit& m) {
            const Eigen::VectorXd eta = m.x * theta;
            Eigen::VectorXd resid(eta.size());
            for (Eigen::Index i = 0; i < eta.size(); ++i) {
              resid[i] = w[i] * (m.y[i] - logistic(eta[i]));
            }
            return Eigen::VectorXd(m.x.transpose() * resid);
          },
          [&](const MultinomialGamma& m) {
            const Eigen::Index k = theta.size();
            Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
            for (Eigen::Index i = 0; i < w.size(); ++i) {
              counts[m.category[static_cast<std::size_t>(i)]] += w[i];
            }
            const Eigen::VectorXd probs = (theta.array() - log_sum_exp(theta)).exp().matrix();
            return Eigen::VectorXd(counts - w.sum() * probs);
          },
      },
      *data_);
}

double ModelFamily::log_prior(const Eigen::VectorXd& theta) const {
  check_dimension(theta);
  return std::visit(
      Overloaded{
          [&](const NormalLinear& m) {
            // Half-t density up to its truncation constant, plus log-Jacobian s.
            const double s = theta[m.x.cols()];
            const double nu = m.sigma_df;
            const double z2 = std::exp(2.0 * s) / (nu * m.sigma_scale * m.sigma_scale);
            return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                   0.5 * std::log(nu * std::numbers::pi) - std::log(m.sigma_scale) -
                   0.5 * (nu + 1.0) * std::log1p(z2) + s;
          },
          [&](const BernoulliLogit&) { return 0.0; },
          [&](const MultinomialGamma& m) {
            double total = 0.0;
            for (Eigen::Index k = 0; k < theta.size(); ++k) {
              total += m.alpha[k] * theta[k] - std::exp(theta[k]) - std::lgamma(m.alpha[k]);
            }
            return total;
          },
      },
      *data_);
}

Eigen::VectorXd ModelFamily::prior_gradient(const Eigen::VectorXd& theta) const {
  return std::visit(
      Overloaded{
          [&](const NormalLinear& m) {
            const Eigen::Index p = m.x.cols();
            const double nu = m.sigma_df;
            const double z2 = std::exp(2.0 * theta[p]) / (nu * m.sigma_scale * m.sigma_scale);
            Eigen::VectorXd g = Eigen::VectorXd::Zero(p + 1);
            g[p] = -(nu + 1.0) * z2 / (1.0 + z2) + 1.0;
            return g;
          },
          [&](const BernoulliLogit&) { return Eigen::VectorXd(Eigen::VectorXd::Zero(theta.size())); },
          [&](const MultinomialGamma& m) {
            return Eigen::VectorXd(m.alpha - theta.array().exp().matrix());
          },
      },
      *data_);
}

double ModelFamily::log_likelihood(const Eigen::VectorXd& theta) const {
  check_dimension(theta);
  return log_likelihood_with(theta, weights_);
}

double ModelFamily::log_density(const Eigen::VectorXd& theta) const {
  check_dimension(theta);
  return log_likelihood_with(theta, weights_) + log_prior(theta);
}

Eigen::VectorXd ModelFamily::gradient(const Eigen::VectorXd& theta) const {
  check_dimension(theta);
  return likelihood_gradient_with(theta, weights_) + prior_gradient(theta);
}

Eigen::VectorXd ModelFamily::gradient_with_weights(const Eigen::VectorXd& theta,
                                                   const Eigen::VectorXd& weights) const {
  check_dimension(theta);
  check_weights(weights, weights_.size());
  return likelihood_gradient_with(theta, weights) + prior_gradient(theta);
}

ModelFamily ModelFamily::with_weights(Eigen::VectorXd weights) const {
  check_weights(weights, weights_.size());
  return ModelFamily(data_, std::move(weights), space_);
}

Eigen::VectorXd ModelFamily::default_init() const {
  Eigen::VectorXd init = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
  if (const auto* m = std::get_if<NormalLinear>(data_.get())) {
    const double mean = m->y.mean();
    const double var = (m->y.array() - mean).square().sum() /
                       std::max<double>(1.0, static_cast<double>(m->y.size() - 1));
    init[m->x.cols()] = 0.5 * std::log(std::max(var, 1e-12));
  }
  return init;
}

}  // namespace svypost
