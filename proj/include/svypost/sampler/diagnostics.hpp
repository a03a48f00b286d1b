#pragma once

#include <string>
#include <vector>

#include "svypost/sampler/draws.hpp"

namespace svypost {

struct ParameterDiagnostics {
  std::string name;
  double rhat = 1.0;  // +inf when chains do not overlap at all
  double ess = 0.0;
  /// Zero within-chain variance: ESS is meaningless and reported as 0.
  bool degenerate = false;
};

/// Rank-normalized split-R-hat and bulk ESS per column. Chains are taken from
/// draws.chain_id (all one chain when it is empty). Needs at least 4 draws.
std::vector<ParameterDiagnostics> mcmc_diagnostics(const DrawsMatrix& draws);

}  // namespace svypost
