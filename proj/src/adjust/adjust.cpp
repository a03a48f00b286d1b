#include "svypost/adjust/adjust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "svypost/core/error.hpp"
#include "svypost/core/parallel.hpp"

namespace svypost {

namespace {

std::string format_vector(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

std::string format_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

struct Spectrum {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, sign-normalized
};

// Eigenvectors are only defined up to sign; fixing the sign of the largest
// component makes square roots of nearly equal matrices agree.
Spectrum spectrum(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (a + a.transpose()));
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kDecomposition, "eigendecomposition did not converge");
  }
  Spectrum s{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index k = 0; k < s.vectors.cols(); ++k) {
    Eigen::Index arg = 0;
    s.vectors.col(k).cwiseAbs().maxCoeff(&arg);
    if (s.vectors(arg, k) < 0.0) s.vectors.col(k) *= -1.0;
  }
  return s;
}

constexpr double kClipRatio = 1e-10;
// Negative eigenvalues of H beyond this fraction of λ_max are not round-off.
constexpr double kIndefiniteRatio = 1e-6;

}  // namespace

std::string_view to_string(HessianMethod method) {
  return method == HessianMethod::kMcmc ? "mcmc" : "plugin";
}

HessianMethod parse_hessian_method(std::string_view text) {
  if (text == "mcmc" || text == "MCMC") return HessianMethod::kMcmc;
  if (text == "plugin" || text == "Laplace") return HessianMethod::kPlugin;
  throw Error(ErrorKind::kConfiguration,
              "unknown H method '" + std::string(text) + "' (expected mcmc or plugin)");
}

std::string_view to_string(SqrtMethod method) {
  return method == SqrtMethod::kEigen ? "eigen" : "cholesky";
}

SqrtMethod parse_sqrt_method(std::string_view text) {
  if (text == "eigen") return SqrtMethod::kEigen;
  if (text == "cholesky") return SqrtMethod::kCholesky;
  throw Error(ErrorKind::kConfiguration,
              "unknown matrix square root '" + std::string(text) + "' (expected eigen or cholesky)");
}

Eigen::MatrixXd numerical_hessian(const LogDensity& target, const Eigen::VectorXd& theta) {
  const Eigen::Index d = theta.size();
  Eigen::MatrixXd a(d, d);
  Eigen::VectorXd probe = theta;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta[j]));
    probe[j] = theta[j] + h;
    const Eigen::VectorXd up = target.gradient(probe);
    probe[j] = theta[j] - h;
    const Eigen::VectorXd down = target.gradient(probe);
    probe[j] = theta[j];
    a.col(j) = -(up - down) / (2.0 * h);
  }
  return 0.5 * (a + a.transpose());
}

HessianEstimate estimate_H(const LogDensity& target, const DrawsMatrix& draws,
                           HessianMethod method, std::size_t max_draws, std::size_t threads) {
  const Eigen::Index m = draws.values.rows();
  const auto d = static_cast<Eigen::Index>(target.dimension());
  if (m < 2) {
    throw Error(ErrorKind::kInsufficientDraws, "H estimate needs at least 2 draws, got " +
                                                   std::to_string(m));
  }
  if (draws.values.cols() != d) {
    throw Error(ErrorKind::kInvalidArgument, "draws have " + std::to_string(draws.values.cols()) +
                                                 " columns, target dimension is " +
                                                 std::to_string(d));
  }
  if (max_draws < 1) throw Error(ErrorKind::kInvalidArgument, "H draw cap must be >= 1");

  std::vector<Eigen::Index> rows;
  if (method == HessianMethod::kPlugin) {
    rows.push_back(-1);
  } else {
    const auto use = std::min<Eigen::Index>(m, static_cast<Eigen::Index>(max_draws));
    for (Eigen::Index k = 0; k < use; ++k) rows.push_back(k * m / use);
  }

  const Eigen::VectorXd theta_bar = draws.column_mean();
  std::vector<Eigen::MatrixXd> parts(rows.size());
  parallel_for(rows.size(), threads, [&](std::size_t k) {
    const Eigen::VectorXd theta =
        rows[k] < 0 ? theta_bar : Eigen::VectorXd(draws.values.row(rows[k]).transpose());
    parts[k] = numerical_hessian(target, theta);
    if (!parts[k].allFinite()) {
      const std::string where =
          rows[k] < 0 ? "the posterior mean" : "draw " + std::to_string(rows[k] + 1);
      throw Error(ErrorKind::kNumerical,
                  "non-finite Hessian entries at " + where + ", theta = " + format_vector(theta));
    }
  });

  HessianEstimate out;
  out.H = Eigen::MatrixXd::Zero(d, d);
  for (const auto& p : parts) out.H += p;
  out.H /= static_cast<double>(parts.size());
  out.draws_used = rows.front() < 0 ? 0 : rows.size();
  out.positive_definite = out.H.llt().info() == Eigen::Success;
  if (!out.positive_definite) spdlog::warn("estimated H is not positive definite");
  return out;
}

Eigen::VectorXd score_at(const ModelFamily& family, const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& replicate_weights) {
  if ((replicate_weights.array() < 0.0).any() || !replicate_weights.allFinite()) {
    throw Error(ErrorKind::kInvalidWeights, "replicate weights must be finite and nonnegative");
  }
  return family.gradient_with_weights(theta, replicate_weights);
}

JEstimate estimate_J(const ModelFamily& family, const ReplicateDesign& replicates,
                     const Eigen::VectorXd& theta, std::size_t threads) {
  const auto k = static_cast<Eigen::Index>(replicates.replicates());
  if (k < 2) {
    throw Error(ErrorKind::kInsufficientReplicates,
                "J estimate needs at least 2 replicates, got " + std::to_string(k));
  }
  if (replicates.rep_weights.rows() != static_cast<Eigen::Index>(family.observations())) {
    throw Error(ErrorKind::kInvalidArgument,
                "replicate weights have " + std::to_string(replicates.rep_weights.rows()) +
                    " rows, model has " + std::to_string(family.observations()) + " observations");
  }
  const double base_total = replicates.base.weights().sum();
  const double model_total = family.weights().sum();
  if (std::abs(base_total - model_total) > 1e-8 * std::abs(model_total)) {
    throw Error(ErrorKind::kInvalidArgument,
                "replicate base weights sum to " + format_number(base_total) +
                    " but model weights sum to " + format_number(model_total) +
                    "; rescale the replicate design first");
  }

  JEstimate out;
  const auto d = static_cast<Eigen::Index>(family.dimension());
  if (k < d) {
    out.warnings.push_back("only " + std::to_string(k) + " replicates for " + std::to_string(d) +
                           " parameters; J is rank deficient");
  }
  out.center = score_at(family, theta, family.weights());
  out.scores.resize(k, d);
  parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t r) {
    const auto col = static_cast<Eigen::Index>(r);
    out.scores.row(col) = score_at(family, theta, replicates.rep_weights.col(col)).transpose();
  });
  out.J = replicate_covariance(out.scores, out.center, replicates.scaling);
  for (const auto& w : out.warnings) spdlog::warn("{}", w);
  return out;
}

Eigen::MatrixXd sqrt_spd(const Eigen::MatrixXd& a, SqrtMethod method) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::kInvalidArgument, "matrix square root needs a square matrix");
  }
  if (!a.allFinite()) throw Error(ErrorKind::kDecomposition, "matrix has non-finite entries");
  if (method == SqrtMethod::kCholesky) {
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (a + a.transpose()));
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::kDecomposition,
                  "Cholesky factorization failed: matrix is not positive definite; use the eigen "
                  "method instead");
    }
    return llt.matrixU();
  }
  const Spectrum s = spectrum(a);
  const double floor = std::max(0.0, kClipRatio * s.values.maxCoeff());
  const Eigen::VectorXd root = s.values.cwiseMax(floor).cwiseSqrt();
  return root.asDiagonal() * s.vectors.transpose();
}

AdjustmentResult adjust_draws(const DrawsMatrix& draws, const Eigen::MatrixXd& H,
                              const Eigen::MatrixXd& J, SqrtMethod method,
                              const ParameterSpace* space) {
  const Eigen::Index m = draws.values.rows();
  const Eigen::Index d = draws.values.cols();
  if (m < 2) {
    throw Error(ErrorKind::kInsufficientDraws, "adjustment needs at least 2 draws, got " +
                                                   std::to_string(m));
  }
  if (H.rows() != d || H.cols() != d || J.rows() != d || J.cols() != d) {
    throw Error(ErrorKind::kInvalidArgument, "H and J must be " + std::to_string(d) + " x " +
                                                 std::to_string(d));
  }
  if (!H.allFinite() || !J.allFinite()) {
    throw Error(ErrorKind::kNumerical, "H or J has non-finite entries");
  }

  AdjustmentResult out;
  out.H = 0.5 * (H + H.transpose());
  out.J = 0.5 * (J + J.transpose());

  const Spectrum hs = spectrum(out.H);
  const double lmax = hs.values.maxCoeff();
  const double lmin = hs.values.minCoeff();
  out.h_condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  out.h_positive_definite = lmin > 0.0;
  if (!(lmax > 0.0) || lmin < -kIndefiniteRatio * lmax) {
    throw Error(ErrorKind::kAdjustment,
                "H is not positive definite beyond repair: eigenvalues in [" +
                    format_number(lmin) + ", " + format_number(lmax) + "], condition number " +
                    format_number(out.h_condition));
  }
  const double floor = kClipRatio * lmax;
  Eigen::VectorXd lambda = hs.values;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lambda[i] < floor) {
      lambda[i] = floor;
      ++out.h_clipped;
    }
  }
  if (out.h_clipped > 0) {
    out.warnings.push_back(std::to_string(out.h_clipped) +
                           " eigenvalue(s) of H raised to 1e-10 * max; condition number " +
                           format_number(out.h_condition));
  }
  out.H_inverse = hs.vectors * lambda.cwiseInverse().asDiagonal() * hs.vectors.transpose();
  out.H_inverse = 0.5 * (out.H_inverse + out.H_inverse.transpose());
  out.sandwich = out.H_inverse * out.J * out.H_inverse;
  out.sandwich = 0.5 * (out.sandwich + out.sandwich.transpose());

  out.R1 = sqrt_spd(out.sandwich, method);
  out.R2 = sqrt_spd(out.H_inverse, method);
  if (method == SqrtMethod::kCholesky) {
    out.transform = out.R2.triangularView<Eigen::Upper>().solve(out.R1);
  } else {
    out.transform = out.R2.partialPivLu().solve(out.R1);
  }

  out.deff = out.sandwich.diagonal().cwiseQuotient(out.H_inverse.diagonal());
  if (out.J.cwiseAbs().maxCoeff() == 0.0) {
    out.warnings.push_back(
        "J is exactly zero (replicate scores equal the full-sample score); adjusted draws "
        "collapse to the posterior mean");
  }

  out.theta_bar = draws.column_mean();
  out.unadjusted = draws;
  out.adjusted = draws;
  const Eigen::MatrixXd centered = draws.values.rowwise() - out.theta_bar.transpose();
  out.adjusted.values = (centered * out.transform).rowwise() + out.theta_bar.transpose();

  if (space != nullptr) {
    out.unadjusted_constrained = {space->to_constrained_rows(out.unadjusted.values),
                                  space->constrained_names(), draws.chain_id};
    out.adjusted_constrained = {space->to_constrained_rows(out.adjusted.values),
                                space->constrained_names(), draws.chain_id};
  }
  for (const auto& w : out.warnings) spdlog::warn("{}", w);
  return out;
}

}  // namespace svypost
