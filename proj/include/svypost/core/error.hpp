#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace svypost {

/// Broad failure categories. Each maps onto one CLI exit code.
enum class ErrorKind {
  kInvalidArgument,
  kInvalidWeights,
  kDegenerateStratum,
  kNotFound,
  kDomain,
  kConfiguration,
  kData,
  kNumerical,
  kInitialization,
  kInsufficientDraws,
  kInsufficientReplicates,
  kDecomposition,
  kAdjustment,
  kInvalidScenario,
  kScheme,
  kStudy,
};

std::string_view to_string(ErrorKind kind);

/// Exit code used by the command-line front end: 2 configuration, 3 data, 4 numerical.
int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Re-throws `error` with `stage` prefixed to the message, keeping its kind.
[[noreturn]] void rethrow_with_stage(const Error& error, std::string_view stage);

}  // namespace svypost
