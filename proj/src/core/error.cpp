#include "svypost/core/error.hpp"

#include <string>

namespace svypost {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kInvalidWeights: return "invalid-weights";
    case ErrorKind::kDegenerateStratum: return "degenerate-stratum";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kData: return "data";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kInitialization: return "initialization";
    case ErrorKind::kInsufficientDraws: return "insufficient-draws";
    case ErrorKind::kInsufficientReplicates: return "insufficient-replicates";
    case ErrorKind::kDecomposition: return "decomposition";
    case ErrorKind::kAdjustment: return "adjustment";
    case ErrorKind::kInvalidScenario: return "invalid-scenario";
    case ErrorKind::kScheme: return "scheme";
    case ErrorKind::kStudy: return "study";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kNotFound:
    case ErrorKind::kConfiguration:
    case ErrorKind::kInvalidScenario:
      return 2;
    case ErrorKind::kInvalidWeights:
    case ErrorKind::kDegenerateStratum:
    case ErrorKind::kDomain:
    case ErrorKind::kData:
    case ErrorKind::kScheme:
      return 3;
    default:
      return 4;
  }
}

void rethrow_with_stage(const Error& error, std::string_view stage) {
  throw Error(error.kind(), std::string(stage) + ": " + error.what());
}

}  // namespace svypost
