#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svypost/adjust/adjust.hpp"
#include "svypost/core/keyvalue.hpp"
#include "svypost/core/table.hpp"
#include "svypost/design/replicates.hpp"
#include "svypost/design/survey_design.hpp"
#include "svypost/models/families.hpp"
#include "svypost/sampler/sampler.hpp"

namespace svypost {

struct ModelSpec {
  FamilyKind family = FamilyKind::kNormalLinear;
  std::string response;
  std::vector<std::string> predictors;
  bool intercept = true;
  double sigma_df = 3.0;
  std::optional<double> sigma_scale;
  std::vector<double> alpha = {1.0};  // one value, or one per category
};

struct ReplicationSpec {
  ReplicateMethod method = kDefaultReplicateMethod;
  std::size_t replicates = kDefaultReplicates;
  std::optional<std::uint64_t> seed;
  Centering centering = Centering::kFullSample;
  std::optional<int> dimension_denominator;
  /// Stem of replicate weights written by export_replicates; when set they are
  /// used instead of generating new ones.
  std::string file;
};

struct FitConfig {
  std::string data_path;
  DesignColumns design;
  ModelSpec model;
  SamplerControl sampler;
  /// Raw `sampler.init` text; resolved against parameter names at fit time.
  std::string sampler_init;
  std::optional<std::uint64_t> sampler_seed_override;
  ReplicationSpec replication;
  HessianMethod h_method = HessianMethod::kMcmc;
  std::size_t h_max_draws = kDefaultHessianDraws;
  SqrtMethod sqrt_method = SqrtMethod::kEigen;
  std::string output_dir;
  std::vector<std::string> report_parameters;  // empty: all
  std::vector<double> probs = {0.025, 0.25, 0.5, 0.75, 0.975};
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;

  /// Builds a config from flat keys (see fit_config_keys()). Unknown keys and
  /// malformed values are configuration errors.
  static FitConfig from_key_values(const KeyValues& values);
  /// Checks internal consistency; column existence is checked on load.
  void validate() const;
  /// sampler.seed, else derived from `seed`; throws when neither is set.
  std::uint64_t sampler_seed() const;
  /// replicates.seed, else derived from `seed`.
  std::optional<std::uint64_t> replicate_seed() const;
};

/// Sets one flat key on `config`; throws kConfiguration for unknown keys or
/// malformed values. Does not validate the whole config.
void apply_fit_key(FitConfig& config, const std::string& key, const std::string& value);

/// Every key accepted by FitConfig::from_key_values, with a one-line help text.
const std::vector<std::pair<std::string, std::string>>& fit_config_keys();

/// Parses `response ~ a + b + c`.
void parse_formula(const std::string& formula, std::string& response,
                   std::vector<std::string>& predictors);

/// Design matrix and response for `spec`, plus coefficient names. Missing
/// columns are configuration errors naming the column.
ModelFamily build_model(const DataTable& table, const ModelSpec& spec,
                        const Eigen::VectorXd& weights, std::vector<std::string>* categories = nullptr);

/// Resolves `sampler.init` text: either d comma-separated values or
/// `name:value` pairs overriding entries of `defaults`.
Eigen::VectorXd resolve_init(const std::string& text, const std::vector<std::string>& names,
                             Eigen::VectorXd defaults);

}  // namespace svypost
