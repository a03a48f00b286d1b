#include "svypost/design/replicates.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "svypost/core/error.hpp"
#include "svypost/core/keyvalue.hpp"
#include "svypost/core/rng.hpp"
#include "svypost/core/table.hpp"

namespace svypost {

std::string_view to_string(ReplicateMethod method) {
  switch (method) {
    case ReplicateMethod::kMrbBootstrap: return "mrbbootstrap";
    case ReplicateMethod::kJk1: return "jk1";
    case ReplicateMethod::kJkn: return "jkn";
    case ReplicateMethod::kCustom: return "custom";
  }
  return "custom";
}

ReplicateMethod parse_replicate_method(std::string_view text) {
  if (text == "mrbbootstrap" || text == "bootstrap") return ReplicateMethod::kMrbBootstrap;
  if (text == "jk1") return ReplicateMethod::kJk1;
  if (text == "jkn") return ReplicateMethod::kJkn;
  if (text == "custom") return ReplicateMethod::kCustom;
  throw Error(ErrorKind::kConfiguration, "unknown replicate method '" + std::string(text) +
                                             "' (expected mrbbootstrap, jk1, jkn or custom)");
}

std::string_view to_string(Centering centering) {
  return centering == Centering::kFullSample ? "full_sample" : "replicate_mean";
}

Centering parse_centering(std::string_view text) {
  if (text == "full_sample") return Centering::kFullSample;
  if (text == "replicate_mean") return Centering::kReplicateMean;
  throw Error(ErrorKind::kConfiguration, "unknown centering '" + std::string(text) +
                                             "' (expected full_sample or replicate_mean)");
}

void ReplicateDesign::validate() const {
  if (rep_weights.rows() != static_cast<Eigen::Index>(base.size())) {
    throw Error(ErrorKind::kInvalidArgument, "replicate weights have " +
                                                 std::to_string(rep_weights.rows()) +
                                                 " rows, design has " + std::to_string(base.size()));
  }
  if (rep_weights.cols() < 1) throw Error(ErrorKind::kInvalidArgument, "no replicate columns");
  if (!(rep_weights.array() >= 0.0).all() || !rep_weights.allFinite()) {
    throw Error(ErrorKind::kInvalidWeights, "replicate weights must be finite and nonnegative");
  }
  if (scaling.rep_scales.size() != rep_weights.cols()) {
    throw Error(ErrorKind::kInvalidArgument, "need one rep_scale per replicate column");
  }
  if (!(scaling.overall_scale > 0.0) || !(scaling.rep_scales.array() > 0.0).all()) {
    throw Error(ErrorKind::kInvalidArgument, "replicate scale constants must be positive");
  }
}

ReplicateDesign ReplicateDesign::rescaled(double factor) const {
  ReplicateDesign out{base.with_weights(base.weights() * factor), rep_weights * factor, method,
                      scaling, seed};
  return out;
}

ReplicateDesign build_replicates(const SurveyDesign& design, ReplicateMethod method,
                                 std::size_t replicates, std::optional<std::uint64_t> seed) {
  const auto n = static_cast<Eigen::Index>(design.size());
  const std::size_t psus = design.psu_count();
  const Eigen::VectorXd& w = design.weights();

  auto require_two_psus = [&](const char* name) {
    for (const auto& s : design.strata()) {
      if (s.psus.size() < 2) {
        throw Error(ErrorKind::kDegenerateStratum,
                    "stratum '" + s.label + "' has a single PSU; " + name + " needs at least two");
      }
    }
  };

  // Expands a per-PSU multiplier vector to a weight column.
  auto column_from = [&](const std::vector<double>& multiplier) {
    Eigen::VectorXd col(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      col[i] = w[i] * multiplier[design.psu_of_row(static_cast<std::size_t>(i))];
    }
    return col;
  };

  ReplicateDesign out{design, {}, method, {}, seed};
  switch (method) {
    case ReplicateMethod::kMrbBootstrap: {
      if (replicates < 1) throw Error(ErrorKind::kInvalidArgument, "replicate count K must be >= 1");
      if (!seed) {
        throw Error(ErrorKind::kConfiguration, "mrbbootstrap replicates require a seed");
      }
      require_two_psus("mrbbootstrap");
      const auto k_total = static_cast<Eigen::Index>(replicates);
      out.rep_weights.resize(n, k_total);
      for (Eigen::Index k = 0; k < k_total; ++k) {
        Rng rng(substream_seed(*seed, static_cast<std::uint64_t>(k)));
        std::vector<double> multiplier(psus, 0.0);
        for (const auto& s : design.strata()) {
          std::vector<std::size_t> pool = s.psus;
          const std::size_t nh = pool.size();
          const std::size_t mh = nh / 2;
          // Partial Fisher-Yates: the first mh entries become a uniform subset.
          for (std::size_t i = 0; i < mh; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, nh - 1);
            std::swap(pool[i], pool[pick(rng)]);
            multiplier[pool[i]] = static_cast<double>(nh) / static_cast<double>(mh);
          }
        }
        out.rep_weights.col(k) = column_from(multiplier);
      }
      out.scaling.overall_scale = 1.0 / static_cast<double>(replicates);
      out.scaling.rep_scales = Eigen::VectorXd::Ones(k_total);
      break;
    }
    case ReplicateMethod::kJk1: {
      if (psus < 2) throw Error(ErrorKind::kDegenerateStratum, "jk1 needs at least two PSUs");
      const auto k_total = static_cast<Eigen::Index>(psus);
      const double boost = static_cast<double>(psus) / static_cast<double>(psus - 1);
      out.rep_weights.resize(n, k_total);
      for (std::size_t k = 0; k < psus; ++k) {
        std::vector<double> multiplier(psus, boost);
        multiplier[k] = 0.0;
        out.rep_weights.col(static_cast<Eigen::Index>(k)) = column_from(multiplier);
      }
      out.scaling.overall_scale = static_cast<double>(psus - 1) / static_cast<double>(psus);
      out.scaling.rep_scales = Eigen::VectorXd::Ones(k_total);
      break;
    }
    case ReplicateMethod::kJkn: {
      require_two_psus("jkn");
      const auto k_total = static_cast<Eigen::Index>(psus);
      out.rep_weights.resize(n, k_total);
      out.scaling.rep_scales.resize(k_total);
      Eigen::Index k = 0;
      for (const auto& s : design.strata()) {
        const double nh = static_cast<double>(s.psus.size());
        for (std::size_t dropped : s.psus) {
          std::vector<double> multiplier(psus, 1.0);
          for (std::size_t p : s.psus) multiplier[p] = nh / (nh - 1.0);
          multiplier[dropped] = 0.0;
          out.rep_weights.col(k) = column_from(multiplier);
          out.scaling.rep_scales[k] = (nh - 1.0) / nh;
          ++k;
        }
      }
      out.scaling.overall_scale = 1.0;
      break;
    }
    case ReplicateMethod::kCustom:
      throw Error(ErrorKind::kInvalidArgument,
                  "custom replicate weights are imported, not generated");
  }
  return out;
}

Eigen::MatrixXd replicate_covariance(const Eigen::MatrixXd& rep_stats,
                                     const Eigen::VectorXd& center_stat,
                                     const ReplicateScaling& scaling) {
  const Eigen::Index k_total = rep_stats.rows();
  const Eigen::Index d = rep_stats.cols();
  if (d < 1) throw Error(ErrorKind::kInvalidArgument, "replicate statistics have no columns");
  if (k_total < 2) {
    throw Error(ErrorKind::kInsufficientReplicates, "at least two replicates are required");
  }
  if (center_stat.size() != d) {
    throw Error(ErrorKind::kInvalidArgument, "center has length " +
                                                 std::to_string(center_stat.size()) + ", expected " +
                                                 std::to_string(d));
  }
  if (scaling.rep_scales.size() != k_total) {
    throw Error(ErrorKind::kInvalidArgument, "need one rep_scale per replicate");
  }
  Eigen::VectorXd center = center_stat;
  if (scaling.centering == Centering::kReplicateMean) {
    // Offset from the first row keeps identical statistics exactly identical.
    const Eigen::RowVectorXd first = rep_stats.row(0);
    center = (first + (rep_stats.rowwise() - first).colwise().mean()).transpose();
  }
  double c = scaling.overall_scale;
  if (scaling.dimension_denominator) {
    const double denom = static_cast<double>(k_total - *scaling.dimension_denominator);
    if (denom <= 0.0) {
      throw Error(ErrorKind::kInsufficientReplicates, "K - d must be positive");
    }
    c *= static_cast<double>(k_total) / denom;
  }
  const Eigen::MatrixXd dev = rep_stats.rowwise() - center.transpose();
  Eigen::MatrixXd out = c * (dev.transpose() * scaling.rep_scales.asDiagonal() * dev);
  return 0.5 * (out + out.transpose());
}

void export_replicates(const ReplicateDesign& design, const std::string& stem) {
  design.validate();
  DataTable table;
  for (Eigen::Index k = 0; k < design.rep_weights.cols(); ++k) {
    table.add_column("rep" + std::to_string(k + 1), Eigen::VectorXd(design.rep_weights.col(k)));
  }
  table.write_csv_file(stem + ".csv");
  std::ofstream meta(stem + ".meta");
  if (!meta) throw Error(ErrorKind::kData, "cannot write '" + stem + ".meta'");
  meta << "# replicate weight metadata\n";
  meta << "method = " << to_string(design.method) << "\n";
  meta << "replicates = " << design.rep_weights.cols() << "\n";
  meta << "overall_scale = " << format_double(design.scaling.overall_scale) << "\n";
  meta << "rep_scales = ";
  for (Eigen::Index k = 0; k < design.scaling.rep_scales.size(); ++k) {
    meta << (k ? "," : "") << format_double(design.scaling.rep_scales[k]);
  }
  meta << "\n";
  meta << "centering = " << to_string(design.scaling.centering) << "\n";
  if (design.seed) meta << "seed = " << *design.seed << "\n";
}

ReplicateDesign import_replicates(const SurveyDesign& base, const std::string& stem) {
  const DataTable table = DataTable::read_csv_file(stem + ".csv");
  const KeyValues meta = read_key_values_file(stem + ".meta");
  ReplicateDesign out{base, Eigen::MatrixXd(table.rows(), table.cols()), ReplicateMethod::kCustom,
                      {}, std::nullopt};
  for (std::size_t j = 0; j < table.cols(); ++j) {
    out.rep_weights.col(static_cast<Eigen::Index>(j)) = table.numeric(table.names()[j]);
  }
  const auto k_total = out.rep_weights.cols();
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = meta.find(key);
    if (it == meta.end()) return std::nullopt;
    return it->second;
  };
  if (auto m = get("method")) out.method = parse_replicate_method(*m);
  if (auto r = get("replicates"); r && parse_int_value("replicates", *r) != k_total) {
    throw Error(ErrorKind::kData, "replicate metadata declares " + *r + " columns, found " +
                                      std::to_string(k_total));
  }
  const auto scale = get("overall_scale");
  if (!scale) throw Error(ErrorKind::kData, "replicate metadata lacks overall_scale");
  out.scaling.overall_scale = parse_double_value("overall_scale", *scale);
  out.scaling.rep_scales = Eigen::VectorXd::Ones(k_total);
  if (auto rs = get("rep_scales")) {
    const auto values = parse_double_list(*rs);
    if (values.size() == 1) {
      out.scaling.rep_scales.setConstant(values.front());
    } else if (static_cast<Eigen::Index>(values.size()) == k_total) {
      out.scaling.rep_scales = Eigen::Map<const Eigen::VectorXd>(values.data(), k_total);
    } else {
      throw Error(ErrorKind::kData, "rep_scales must list one value or one per replicate");
    }
  }
  if (auto c = get("centering")) out.scaling.centering = parse_centering(*c);
  if (auto s = get("seed")) out.seed = static_cast<std::uint64_t>(parse_int_value("seed", *s));
  out.validate();
  return out;
}

}  // namespace svypost
