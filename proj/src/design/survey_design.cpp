#include "svypost/design/survey_design.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <system_error>
#include <utility>

#include "svypost/core/error.hpp"

namespace svypost {

namespace {

// Numeric labels compare by value so PSU "10" sorts after "9".
struct LabelLess {
  static bool as_number(const std::string& s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  }
  bool operator()(const std::string& a, const std::string& b) const {
    double x = 0.0;
    double y = 0.0;
    const bool na = as_number(a, x);
    const bool nb = as_number(b, y);
    if (na && nb && x != y) return x < y;
    if (na != nb) return na;
    return a < b;
  }
};

}  // namespace

Eigen::VectorXd normalize_weights(const Eigen::VectorXd& raw) {
  if (raw.size() == 0) throw Error(ErrorKind::kInvalidWeights, "no weights supplied");
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i]) || raw[i] <= 0.0) {
      throw Error(ErrorKind::kInvalidWeights,
                  "weight " + std::to_string(i + 1) + " is not a finite positive number");
    }
  }
  return raw / raw.mean();
}

SurveyDesign::SurveyDesign(DataTable rows, const std::vector<std::string>& psu_id,
                           const std::vector<std::string>& stratum_id, Eigen::VectorXd base_weight,
                           std::optional<std::vector<double>> fpc_per_row, bool nest)
    : rows_(std::move(rows)), weights_(std::move(base_weight)), nest_(nest) {
  const std::size_t n = static_cast<std::size_t>(weights_.size());
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "survey design has no rows");
  if (psu_id.size() != n || stratum_id.size() != n) {
    throw Error(ErrorKind::kInvalidArgument, "design labels and weights differ in length");
  }
  if (rows_.cols() > 0 && rows_.rows() != n) {
    throw Error(ErrorKind::kInvalidArgument, "design weights and data table differ in length");
  }
  if (fpc_per_row && fpc_per_row->size() != n) {
    throw Error(ErrorKind::kInvalidArgument, "fpc column differs in length from the weights");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights_[static_cast<Eigen::Index>(i)];
    if (!std::isfinite(w) || w <= 0.0) {
      throw Error(ErrorKind::kInvalidWeights,
                  "base weight in row " + std::to_string(i + 1) + " is not positive");
    }
  }

  std::map<std::string, std::map<std::string, std::vector<std::size_t>, LabelLess>, LabelLess>
      grouped;
  std::map<std::string, std::string> psu_home;  // un-nested PSU label -> stratum
  for (std::size_t i = 0; i < n; ++i) {
    if (!nest_) {
      auto [it, inserted] = psu_home.emplace(psu_id[i], stratum_id[i]);
      if (!inserted && it->second != stratum_id[i]) {
        throw Error(ErrorKind::kData, "PSU '" + psu_id[i] + "' appears in strata '" + it->second +
                                          "' and '" + stratum_id[i] +
                                          "'; set nest=true if PSU labels repeat across strata");
      }
    }
    grouped[stratum_id[i]][psu_id[i]].push_back(i);
  }

  row_psu_.assign(n, 0);
  for (auto& [slabel, psus] : grouped) {
    Stratum stratum;
    stratum.label = slabel;
    const std::size_t h = strata_.size();
    for (auto& [plabel, members] : psus) {
      const std::size_t p = psu_labels_.size();
      psu_labels_.push_back(plabel);
      psu_stratum_.push_back(h);
      for (std::size_t r : members) row_psu_[r] = p;
      psu_rows_.push_back(members);
      stratum.psus.push_back(p);
    }
    if (fpc_per_row) {
      const std::size_t first = psu_rows_[stratum.psus.front()].front();
      const double f = (*fpc_per_row)[first];
      for (std::size_t p : stratum.psus) {
        for (std::size_t r : psu_rows_[p]) {
          if ((*fpc_per_row)[r] != f) {
            throw Error(ErrorKind::kData, "fpc is not constant within stratum '" + slabel + "'");
          }
        }
      }
      if (!std::isfinite(f) || f < static_cast<double>(stratum.psus.size())) {
        throw Error(ErrorKind::kData, "fpc " + std::to_string(f) + " for stratum '" + slabel +
                                          "' is smaller than its " +
                                          std::to_string(stratum.psus.size()) + " sampled PSUs");
      }
      stratum.population_psus = f;
    }
    strata_.push_back(std::move(stratum));
  }
}

SurveyDesign SurveyDesign::from_table(const DataTable& table, const DesignColumns& columns) {
  const std::size_t n = table.rows();
  if (columns.weight.empty()) {
    throw Error(ErrorKind::kConfiguration, "design weight column is required");
  }
  auto require = [&](const std::string& name, const char* role) {
    if (!table.has_column(name)) {
      throw Error(ErrorKind::kConfiguration,
                  std::string(role) + " column '" + name + "' not found in data");
    }
  };
  require(columns.weight, "weight");
  std::vector<std::string> psu(n);
  std::vector<std::string> strata(n, "1");
  if (!columns.psu.empty() && columns.psu != "1") {
    require(columns.psu, "psu");
    psu = table.text(columns.psu);
  } else {
    for (std::size_t i = 0; i < n; ++i) psu[i] = std::to_string(i + 1);
  }
  if (!columns.stratum.empty()) {
    require(columns.stratum, "stratum");
    strata = table.text(columns.stratum);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (psu[i].empty() || strata[i].empty()) {
      throw Error(ErrorKind::kData, "row " + std::to_string(i + 1) + " is missing a PSU or stratum label");
    }
  }
  std::optional<std::vector<double>> fpc;
  if (!columns.fpc.empty()) {
    require(columns.fpc, "fpc");
    const Eigen::VectorXd v = table.numeric(columns.fpc);
    fpc = std::vector<double>(v.data(), v.data() + v.size());
  }
  // Without explicit PSUs each row is its own PSU, and labels are only unique per stratum.
  const bool nest = columns.nest || columns.psu.empty() || columns.psu == "1";
  return SurveyDesign(table, psu, strata, table.numeric(columns.weight), std::move(fpc), nest);
}

bool SurveyDesign::has_fpc() const noexcept {
  return !strata_.empty() && strata_.front().population_psus.has_value();
}

SurveyDesign SurveyDesign::with_weights(Eigen::VectorXd weights) const {
  if (weights.size() != weights_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "replacement weights differ in length");
  }
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] <= 0.0) {
      throw Error(ErrorKind::kInvalidWeights, "replacement weight is not positive");
    }
  }
  SurveyDesign copy = *this;
  copy.weights_ = std::move(weights);
  return copy;
}

}  // namespace svypost
