#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "svypost/adjust/adjust.hpp"
#include "svypost/sampler/draws.hpp"

namespace svypost {

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> quantiles;  // one per requested level
};

/// Linear interpolation between order statistics (h = (M - 1) p).
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Mean, sd (divisor M - 1) and quantiles per column. Requires M >= 2.
std::vector<ParameterSummary> summarize_draws(const DrawsMatrix& draws,
                                              const std::vector<double>& probs,
                                              const std::vector<std::string>& subset = {});

struct SummaryTable {
  std::vector<double> probs;
  std::vector<ParameterSummary> unadjusted;
  std::vector<ParameterSummary> adjusted;
};

/// Summaries of the constrained draws (plus derived quantities) when present,
/// otherwise of the unconstrained ones.
SummaryTable summarize(const AdjustmentResult& result, const std::vector<double>& probs,
                       const std::vector<std::string>& subset = {});

/// Plain-text table, one line per parameter and series.
void print_summary(std::ostream& out, const SummaryTable& table);

/// Long format: draw, parameter, value, series (unadjusted / adjusted). Names
/// are looked up among the columns of both matrices; an empty list means all.
void export_pairs_data(std::ostream& out, const DrawsMatrix& unadjusted,
                       const DrawsMatrix& adjusted, const std::vector<std::string>& names);
void export_pairs_data(std::ostream& out, const AdjustmentResult& result,
                       const std::vector<std::string>& names);

}  // namespace svypost
