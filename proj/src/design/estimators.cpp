#include "svypost/design/estimators.hpp"

#include <charconv>
#include <set>
#include <system_error>

#include "svypost/core/error.hpp"

namespace svypost {

namespace {

bool all_numeric(const std::vector<std::string>& cells) {
  for (const auto& c : cells) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
    if (c.empty() || ec != std::errc() || ptr != c.data() + c.size()) return false;
  }
  return true;
}

}  // namespace

VariableMatrix expand_variable(const DataTable& table, const std::string& column,
                               VariableKind kind) {
  const auto& cells = table.text(column);
  if (kind == VariableKind::kAuto) {
    kind = all_numeric(cells) ? VariableKind::kNumeric : VariableKind::kCategorical;
  }
  VariableMatrix out;
  if (kind == VariableKind::kNumeric) {
    out.labels = {column};
    out.values = table.numeric(column);
    return out;
  }
  const std::set<std::string> levels(cells.begin(), cells.end());
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cells.size()),
                                     static_cast<Eigen::Index>(levels.size()));
  Eigen::Index j = 0;
  for (const auto& level : levels) {
    if (level.empty()) {
      throw Error(ErrorKind::kData, "column '" + column + "' has missing values");
    }
    out.labels.push_back(column + level);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i] == level) out.values(static_cast<Eigen::Index>(i), j) = 1.0;
    }
    ++j;
  }
  return out;
}

Eigen::VectorXd ht_mean(const Eigen::VectorXd& weights, const Eigen::MatrixXd& values) {
  if (weights.size() != values.rows()) {
    throw Error(ErrorKind::kInvalidArgument, "weights and values differ in length");
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::kInvalidWeights, "weights sum to zero");
  return (values.transpose() * weights) / total;
}

Eigen::VectorXd ht_mean(const SurveyDesign& design, const VariableMatrix& variable) {
  return ht_mean(design.weights(), variable.values);
}

Eigen::MatrixXd tl_covariance_mean(const SurveyDesign& design, const VariableMatrix& variable,
                                   LonelyPsu lonely) {
  const Eigen::VectorXd& w = design.weights();
  const Eigen::VectorXd mean = ht_mean(design, variable);
  const double total = w.sum();
  const Eigen::Index d = variable.values.cols();

  // Linearized residuals, summed to PSU totals.
  Eigen::MatrixXd psu_totals = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(design.psu_count()), d);
  for (std::size_t i = 0; i < design.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    psu_totals.row(static_cast<Eigen::Index>(design.psu_of_row(i))) +=
        (w[r] / total) * (variable.values.row(r) - mean.transpose());
  }
  const Eigen::RowVectorXd grand = psu_totals.colwise().mean();

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : design.strata()) {
    const double nh = static_cast<double>(s.psus.size());
    const double fpc = s.population_psus ? 1.0 - nh / *s.population_psus : 1.0;
    if (s.psus.size() == 1) {
      if (lonely == LonelyPsu::kError) {
        throw Error(ErrorKind::kDegenerateStratum,
                    "stratum '" + s.label + "' has a single PSU (use the lonely-PSU adjustment)");
      }
      const Eigen::RowVectorXd dev = psu_totals.row(static_cast<Eigen::Index>(s.psus[0])) - grand;
      cov += fpc * dev.transpose() * dev;
      continue;
    }
    Eigen::MatrixXd block(static_cast<Eigen::Index>(s.psus.size()), d);
    for (std::size_t j = 0; j < s.psus.size(); ++j) {
      block.row(static_cast<Eigen::Index>(j)) = psu_totals.row(static_cast<Eigen::Index>(s.psus[j]));
    }
    const Eigen::MatrixXd centered = block.rowwise() - block.colwise().mean();
    cov += fpc * (nh / (nh - 1.0)) * (centered.transpose() * centered);
  }
  return cov;
}

Eigen::VectorXd tl_variance_mean(const SurveyDesign& design, const VariableMatrix& variable,
                                 LonelyPsu lonely) {
  return tl_covariance_mean(design, variable, lonely).diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::MatrixXd replicate_covariance_mean(const ReplicateDesign& design,
                                          const VariableMatrix& variable) {
  design.validate();
  const Eigen::Index k_total = design.rep_weights.cols();
  Eigen::MatrixXd stats(k_total, variable.values.cols());
  for (Eigen::Index k = 0; k < k_total; ++k) {
    stats.row(k) = ht_mean(Eigen::VectorXd(design.rep_weights.col(k)), variable.values).transpose();
  }
  return replicate_covariance(stats, ht_mean(design.base, variable), design.scaling);
}

Eigen::VectorXd replicate_se_mean(const ReplicateDesign& design, const VariableMatrix& variable) {
  return replicate_covariance_mean(design, variable).diagonal().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace svypost
