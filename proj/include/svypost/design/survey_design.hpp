#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "svypost/core/table.hpp"

namespace svypost {

/// Rescales positive weights to mean one, so they sum to the sample size.
/// Throws kInvalidWeights on any nonpositive or non-finite entry.
Eigen::VectorXd normalize_weights(const Eigen::VectorXd& raw);

/// Which columns of a data table describe the design. An empty psu column
/// means every row is its own PSU; an empty stratum column means one stratum.
struct DesignColumns {
  std::string psu;
  std::string stratum;
  std::string weight;
  std::string fpc;
  bool nest = false;
};

/// Per-unit description of a stratified, clustered sample.
///
/// Strata are indexed in sorted label order; PSUs are indexed globally in
/// order of (stratum, label). Weights are the only carrier of first-order
/// inclusion probabilities.
class SurveyDesign {
 public:
  struct Stratum {
    std::string label;
    std::vector<std::size_t> psus;          // global PSU indices
    std::optional<double> population_psus;  // fpc, when known
  };

  SurveyDesign(DataTable rows, const std::vector<std::string>& psu_id,
               const std::vector<std::string>& stratum_id, Eigen::VectorXd base_weight,
               std::optional<std::vector<double>> fpc_per_row = std::nullopt, bool nest = false);

  static SurveyDesign from_table(const DataTable& table, const DesignColumns& columns);

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  const DataTable& rows() const noexcept { return rows_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  bool nested() const noexcept { return nest_; }

  const std::vector<Stratum>& strata() const noexcept { return strata_; }
  std::size_t psu_count() const noexcept { return psu_labels_.size(); }
  const std::string& psu_label(std::size_t psu) const { return psu_labels_.at(psu); }
  std::size_t psu_of_row(std::size_t row) const { return row_psu_.at(row); }
  std::size_t stratum_of_psu(std::size_t psu) const { return psu_stratum_.at(psu); }
  const std::vector<std::size_t>& rows_of_psu(std::size_t psu) const { return psu_rows_.at(psu); }
  bool has_fpc() const noexcept;

  /// Same structure, different weights (e.g. normalized ones).
  SurveyDesign with_weights(Eigen::VectorXd weights) const;

 private:
  DataTable rows_;
  Eigen::VectorXd weights_;
  bool nest_ = false;
  std::vector<Stratum> strata_;
  std::vector<std::string> psu_labels_;
  std::vector<std::size_t> psu_stratum_;
  std::vector<std::vector<std::size_t>> psu_rows_;
  std::vector<std::size_t> row_psu_;
};

}  // namespace svypost
