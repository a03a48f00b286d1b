#pragma once

#include <string>
#include <vector>

#include "svypost/adjust/adjust.hpp"
#include "svypost/design/replicates.hpp"
#include "svypost/models/families.hpp"
#include "svypost/report/config.hpp"
#include "svypost/report/summary.hpp"
#include "svypost/sampler/diagnostics.hpp"
#include "svypost/sampler/sampler.hpp"

namespace svypost {

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct FitResult {
  SampleResult sample;
  std::vector<ParameterDiagnostics> diagnostics;
  HessianEstimate h;
  JEstimate j;
  AdjustmentResult adjustment;
  SummaryTable summary;
  ReplicateMethod replicate_method = ReplicateMethod::kCustom;
  std::size_t replicates = 0;
  std::vector<std::string> categories;  // multinomial levels, in parameter order
  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;
};

/// load data -> normalize weights -> design -> replicates -> model -> sample
/// -> H -> J -> adjust -> summarize (-> write output.dir). Errors carry the
/// stage name in their message.
FitResult fit(const FitConfig& config);

/// The pipeline from sampling onwards for an already built model. The
/// replicate weights must be on the scale of family.weights().
FitResult fit_model(const ModelFamily& family, const ReplicateDesign& replicates,
                    const FitConfig& config);

/// Writes draws, matrices and summary.json into `dir` (created if needed).
void write_fit_result(const FitResult& result, const FitConfig& config, const std::string& dir);

struct SavedDraws {
  DrawsMatrix unadjusted;
  DrawsMatrix adjusted;
  DrawsMatrix unadjusted_constrained;
  DrawsMatrix adjusted_constrained;
};

/// Reads a draws CSV written by write_draws_csv.
DrawsMatrix read_draws_csv(const std::string& path);
SavedDraws load_saved_draws(const std::string& dir);

}  // namespace svypost
