#include "svypost/report/summary.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "svypost/core/error.hpp"
#include "svypost/core/table.hpp"

namespace svypost {

namespace {

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

Eigen::Index find_column(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<Eigen::Index>(it - names.begin());
}

const DrawsMatrix& reporting_draws(const DrawsMatrix& constrained, const DrawsMatrix& raw) {
  return constrained.values.size() > 0 ? constrained : raw;
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::kInsufficientDraws, "quantile of no draws");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<ParameterSummary> summarize_draws(const DrawsMatrix& draws,
                                              const std::vector<double>& probs,
                                              const std::vector<std::string>& subset) {
  const Eigen::Index m = draws.values.rows();
  if (m < 2) {
    throw Error(ErrorKind::kInsufficientDraws,
                "summary needs at least 2 draws, got " + std::to_string(m));
  }
  std::vector<Eigen::Index> cols;
  if (subset.empty()) {
    for (Eigen::Index j = 0; j < draws.values.cols(); ++j) cols.push_back(j);
  } else {
    for (const auto& name : subset) {
      const Eigen::Index j = find_column(draws.names, name);
      if (j < 0) {
        throw Error(ErrorKind::kNotFound, "unknown parameter '" + name +
                                              "' (available: " + join(draws.names) + ")");
      }
      cols.push_back(j);
    }
  }
  std::vector<ParameterSummary> out;
  for (Eigen::Index j : cols) {
    ParameterSummary s;
    s.name = static_cast<std::size_t>(j) < draws.names.size() ? draws.names[j] : "x" + std::to_string(j + 1);
    const Eigen::VectorXd x = draws.values.col(j);
    s.mean = x.mean();
    s.sd = std::sqrt((x.array() - s.mean).square().sum() / static_cast<double>(m - 1));
    std::vector<double> sorted(x.data(), x.data() + m);
    std::sort(sorted.begin(), sorted.end());
    for (double p : probs) s.quantiles.push_back(quantile_sorted(sorted, p));
    out.push_back(std::move(s));
  }
  return out;
}

SummaryTable summarize(const AdjustmentResult& result, const std::vector<double>& probs,
                       const std::vector<std::string>& subset) {
  SummaryTable t;
  t.probs = probs;
  t.unadjusted = summarize_draws(reporting_draws(result.unadjusted_constrained, result.unadjusted),
                                 probs, subset);
  t.adjusted = summarize_draws(reporting_draws(result.adjusted_constrained, result.adjusted),
                               probs, subset);
  return t;
}

void print_summary(std::ostream& out, const SummaryTable& table) {
  out << fmt::format("{:<16} {:<10} {:>12} {:>12}", "parameter", "series", "mean", "sd");
  for (double p : table.probs) out << fmt::format(" {:>11}", fmt::format("q{:g}", 100.0 * p));
  out << '\n';
  for (std::size_t i = 0; i < table.adjusted.size(); ++i) {
    for (const auto* s : {&table.unadjusted[i], &table.adjusted[i]}) {
      out << fmt::format("{:<16} {:<10} {:>12.6g} {:>12.6g}", s->name,
                         s == &table.adjusted[i] ? "adjusted" : "unadjusted", s->mean, s->sd);
      for (double q : s->quantiles) out << fmt::format(" {:>11.5g}", q);
      out << '\n';
    }
  }
}

void export_pairs_data(std::ostream& out, const DrawsMatrix& unadjusted,
                       const DrawsMatrix& adjusted, const std::vector<std::string>& names) {
  const std::vector<std::string>& available = adjusted.names;
  std::vector<Eigen::Index> cols;
  if (names.empty()) {
    for (Eigen::Index j = 0; j < adjusted.values.cols(); ++j) cols.push_back(j);
  }
  for (const auto& name : names) {
    const Eigen::Index j = find_column(available, name);
    if (j < 0) {
      throw Error(ErrorKind::kNotFound,
                  "unknown parameter '" + name + "' (available: " + join(available) + ")");
    }
    cols.push_back(j);
  }
  if (unadjusted.values.rows() != adjusted.values.rows() ||
      unadjusted.values.cols() != adjusted.values.cols()) {
    throw Error(ErrorKind::kInvalidArgument, "unadjusted and adjusted draws differ in shape");
  }
  out << "draw,parameter,value,series\n";
  for (const auto* series : {&unadjusted, &adjusted}) {
    const char* label = series == &adjusted ? "adjusted" : "unadjusted";
    for (Eigen::Index j : cols) {
      for (Eigen::Index m = 0; m < series->values.rows(); ++m) {
        out << (m + 1) << ',' << csv_escape(available[static_cast<std::size_t>(j)]) << ','
            << format_double(series->values(m, j)) << ',' << label << '\n';
      }
    }
  }
}

void export_pairs_data(std::ostream& out, const AdjustmentResult& result,
                       const std::vector<std::string>& names) {
  const bool constrained = result.adjusted_constrained.values.size() > 0;
  if (constrained) {
    // Accept unconstrained names too, e.g. log_sigma.
    bool all_constrained = true;
    for (const auto& n : names) {
      if (find_column(result.adjusted_constrained.names, n) < 0) all_constrained = false;
    }
    if (all_constrained) {
      export_pairs_data(out, result.unadjusted_constrained, result.adjusted_constrained, names);
      return;
    }
    bool all_raw = !names.empty();
    for (const auto& n : names) {
      if (find_column(result.adjusted.names, n) < 0) all_raw = false;
    }
    if (!all_raw) {
      std::vector<std::string> available = result.adjusted_constrained.names;
      available.insert(available.end(), result.adjusted.names.begin(), result.adjusted.names.end());
      for (const auto& n : names) {
        if (find_column(available, n) < 0) {
          throw Error(ErrorKind::kNotFound,
                      "unknown parameter '" + n + "' (available: " + join(available) + ")");
        }
      }
      throw Error(ErrorKind::kInvalidArgument,
                  "cannot mix constrained and unconstrained parameter names");
    }
  }
  export_pairs_data(out, result.unadjusted, result.adjusted, names);
}

}  // namespace svypost
