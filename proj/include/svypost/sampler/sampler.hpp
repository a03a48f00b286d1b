#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "svypost/models/families.hpp"
#include "svypost/models/log_density.hpp"
#include "svypost/sampler/draws.hpp"

namespace svypost {

enum class SamplerAlgorithm {
  kHmc,  // static-length HMC, dual-averaged step size, windowed metric adaptation
  kRwm,  // adaptive random-walk Metropolis
};

std::string_view to_string(SamplerAlgorithm algorithm);
SamplerAlgorithm parse_sampler_algorithm(std::string_view text);

struct SamplerControl {
  int chains = 1;
  int iter = 2000;
  int warmup = 1000;
  int thin = 1;
  std::uint64_t seed = 0;
  SamplerAlgorithm algorithm = SamplerAlgorithm::kHmc;
  double target_accept = 0.8;
  /// Starting step size; 0 selects one by the doubling/halving heuristic.
  double initial_step_size = 0.0;
  /// Mean trajectory length in metric-scaled units; each iteration jitters it.
  double integration_time = 1.5;
  int max_leapfrog = 1024;
  bool dense_metric = true;
  /// Uniform jitter half-width applied to each chain's initial point.
  double init_jitter = 0.5;
  std::optional<Eigen::VectorXd> init;
  std::size_t threads = 1;

  void validate() const;
  int kept_per_chain() const;
};

struct ChainStats {
  int chain = 0;
  std::uint64_t seed = 0;
  double mean_accept = 0.0;  // post-warmup
  double step_size = 0.0;
  int divergences = 0;       // post-warmup
  long long gradient_evaluations = 0;
};

struct SampleResult {
  DrawsMatrix draws;
  std::vector<ChainStats> chains;
};

/// Samples `target`; `init` is the centre each chain's jittered start is drawn around.
SampleResult sample_pseudo_posterior(const LogDensity& target, const SamplerControl& control,
                                     const Eigen::VectorXd& init,
                                     std::vector<std::string> names = {});

/// Samples a model family from its default initial point (or control.init).
SampleResult sample_pseudo_posterior(const ModelFamily& family, const SamplerControl& control);

}  // namespace svypost
