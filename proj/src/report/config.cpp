#include "svypost/report/config.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "svypost/core/error.hpp"
#include "svypost/core/parallel.hpp"
#include "svypost/core/rng.hpp"
#include "svypost/design/estimators.hpp"

namespace svypost {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return {};
  return s.substr(begin, s.find_last_not_of(" \t") - begin + 1);
}

std::uint64_t parse_seed(const std::string& key, const std::string& text) {
  const long long v = parse_int_value(key, text);
  if (v < 0) throw Error(ErrorKind::kConfiguration, key + " must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

std::size_t parse_count(const std::string& key, const std::string& text, long long min) {
  const long long v = parse_int_value(key, text);
  if (v < min) {
    throw Error(ErrorKind::kConfiguration, key + " must be >= " + std::to_string(min));
  }
  return static_cast<std::size_t>(v);
}

template <typename E, typename F>
E parse_enum(const std::string& key, const std::string& text, F parse) {
  try {
    return parse(text);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfiguration, key + ": " + e.what());
  }
}

Eigen::VectorXd column_or_config_error(const DataTable& table, const std::string& name,
                                       const char* role) {
  if (!table.has_column(name)) {
    throw Error(ErrorKind::kConfiguration,
                std::string(role) + " column '" + name + "' is not in the data");
  }
  return table.numeric(name);
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& fit_config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"data", "input CSV path"},
      {"design.psu", "PSU (cluster) column; empty or 1 for one unit per PSU"},
      {"design.strata", "stratum column; empty for a single stratum"},
      {"design.weights", "sampling weight column (proportional to 1/pi)"},
      {"design.fpc", "column with the population PSU count per stratum"},
      {"design.nest", "PSU labels are unique only within strata (true/false)"},
      {"model.family", "normal_linear, bernoulli_logit or multinomial_gamma"},
      {"model.formula", "response ~ x1 + x2 (alternative to response/predictors)"},
      {"model.response", "response column"},
      {"model.predictors", "comma-separated predictor columns"},
      {"model.intercept", "add an intercept column (default true)"},
      {"model.sigma_df", "half-t degrees of freedom for sigma (default 3)"},
      {"model.sigma_scale", "half-t scale for sigma (default from the response MAD)"},
      {"model.alpha", "gamma shape(s) for multinomial_gamma (default 1)"},
      {"sampler.chains", "number of chains (default 1)"},
      {"sampler.iter", "iterations per chain including warmup (default 2000)"},
      {"sampler.warmup", "warmup iterations per chain (default 1000)"},
      {"sampler.thin", "keep every thin-th post-warmup draw (default 1)"},
      {"sampler.seed", "sampler seed (default derived from seed)"},
      {"sampler.algorithm", "hmc or rwm (default hmc)"},
      {"sampler.target_accept", "dual-averaging target acceptance (default 0.8)"},
      {"sampler.step_size", "initial step size; 0 picks one (default 0)"},
      {"sampler.integration_time", "mean trajectory length (default 1.5)"},
      {"sampler.max_leapfrog", "leapfrog step cap per iteration (default 1024)"},
      {"sampler.dense_metric", "adapt a dense metric (default true)"},
      {"sampler.init_jitter", "uniform jitter half-width for initial values (default 0.5)"},
      {"sampler.init", "initial unconstrained values: list, or name:value pairs"},
      {"replicates.method", "mrbbootstrap, jk1 or jkn (default mrbbootstrap)"},
      {"replicates.count", "bootstrap replicate count (default 100)"},
      {"replicates.seed", "replicate seed (default derived from seed)"},
      {"replicates.centering", "full_sample or replicate_mean (default full_sample)"},
      {"replicates.dimension_denominator", "scale C by K/(K-d) with this d"},
      {"replicates.file", "stem of previously exported replicate weights"},
      {"adjust.h_method", "mcmc or plugin (default mcmc)"},
      {"adjust.h_max_draws", "draw cap for the mcmc H average (default 200)"},
      {"adjust.sqrt", "eigen or cholesky (default eigen)"},
      {"output.dir", "directory for the saved result"},
      {"report.parameters", "parameters shown in the summary (default all)"},
      {"report.probs", "summary quantile levels"},
      {"seed", "master seed for sampler and replicates"},
      {"threads", "worker threads (default SVYPOST_THREADS or 1)"},
  };
  return keys;
}

void parse_formula(const std::string& formula, std::string& response,
                   std::vector<std::string>& predictors) {
  const auto tilde = formula.find('~');
  if (tilde == std::string::npos) {
    throw Error(ErrorKind::kConfiguration, "formula '" + formula + "' has no '~'");
  }
  response = trim(formula.substr(0, tilde));
  predictors.clear();
  std::string rest = formula.substr(tilde + 1);
  std::size_t start = 0;
  while (start <= rest.size()) {
    auto plus = rest.find('+', start);
    if (plus == std::string::npos) plus = rest.size();
    const std::string term = trim(rest.substr(start, plus - start));
    if (!term.empty() && term != "1") predictors.push_back(term);
    start = plus + 1;
  }
  if (response.empty()) {
    throw Error(ErrorKind::kConfiguration, "formula '" + formula + "' has no response");
  }
}

void apply_fit_key(FitConfig& c, const std::string& key, const std::string& value) {
  using Setter = std::function<void(FitConfig&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"data", [](FitConfig& c, const std::string& v) { c.data_path = v; }},
      {"design.psu", [](FitConfig& c, const std::string& v) { c.design.psu = v; }},
      {"design.strata", [](FitConfig& c, const std::string& v) { c.design.stratum = v; }},
      {"design.weights", [](FitConfig& c, const std::string& v) { c.design.weight = v; }},
      {"design.fpc", [](FitConfig& c, const std::string& v) { c.design.fpc = v; }},
      {"design.nest",
       [](FitConfig& c, const std::string& v) { c.design.nest = parse_bool_value("design.nest", v); }},
      {"model.family",
       [](FitConfig& c, const std::string& v) {
         c.model.family = parse_enum<FamilyKind>("model.family", v, parse_family);
       }},
      {"model.formula",
       [](FitConfig& c, const std::string& v) { parse_formula(v, c.model.response, c.model.predictors); }},
      {"model.response", [](FitConfig& c, const std::string& v) { c.model.response = v; }},
      {"model.predictors", [](FitConfig& c, const std::string& v) { c.model.predictors = split_list(v); }},
      {"model.intercept",
       [](FitConfig& c, const std::string& v) { c.model.intercept = parse_bool_value("model.intercept", v); }},
      {"model.sigma_df",
       [](FitConfig& c, const std::string& v) { c.model.sigma_df = parse_double_value("model.sigma_df", v); }},
      {"model.sigma_scale",
       [](FitConfig& c, const std::string& v) {
         c.model.sigma_scale = parse_double_value("model.sigma_scale", v);
       }},
      {"model.alpha", [](FitConfig& c, const std::string& v) { c.model.alpha = parse_double_list(v); }},
      {"sampler.chains",
       [](FitConfig& c, const std::string& v) {
         c.sampler.chains = static_cast<int>(parse_count("sampler.chains", v, 1));
       }},
      {"sampler.iter",
       [](FitConfig& c, const std::string& v) {
         c.sampler.iter = static_cast<int>(parse_count("sampler.iter", v, 1));
       }},
      {"sampler.warmup",
       [](FitConfig& c, const std::string& v) {
         c.sampler.warmup = static_cast<int>(parse_count("sampler.warmup", v, 0));
       }},
      {"sampler.thin",
       [](FitConfig& c, const std::string& v) {
         c.sampler.thin = static_cast<int>(parse_count("sampler.thin", v, 1));
       }},
      {"sampler.seed",
       [](FitConfig& c, const std::string& v) { c.sampler_seed_override = parse_seed("sampler.seed", v); }},
      {"sampler.algorithm",
       [](FitConfig& c, const std::string& v) {
         c.sampler.algorithm =
             parse_enum<SamplerAlgorithm>("sampler.algorithm", v, parse_sampler_algorithm);
       }},
      {"sampler.target_accept",
       [](FitConfig& c, const std::string& v) {
         c.sampler.target_accept = parse_double_value("sampler.target_accept", v);
       }},
      {"sampler.step_size",
       [](FitConfig& c, const std::string& v) {
         c.sampler.initial_step_size = parse_double_value("sampler.step_size", v);
       }},
      {"sampler.integration_time",
       [](FitConfig& c, const std::string& v) {
         c.sampler.integration_time = parse_double_value("sampler.integration_time", v);
       }},
      {"sampler.max_leapfrog",
       [](FitConfig& c, const std::string& v) {
         c.sampler.max_leapfrog = static_cast<int>(parse_count("sampler.max_leapfrog", v, 1));
       }},
      {"sampler.dense_metric",
       [](FitConfig& c, const std::string& v) {
         c.sampler.dense_metric = parse_bool_value("sampler.dense_metric", v);
       }},
      {"sampler.init_jitter",
       [](FitConfig& c, const std::string& v) {
         c.sampler.init_jitter = parse_double_value("sampler.init_jitter", v);
       }},
      {"sampler.init", [](FitConfig& c, const std::string& v) { c.sampler_init = v; }},
      {"replicates.method",
       [](FitConfig& c, const std::string& v) {
         c.replication.method =
             parse_enum<ReplicateMethod>("replicates.method", v, parse_replicate_method);
       }},
      {"replicates.count",
       [](FitConfig& c, const std::string& v) {
         c.replication.replicates = parse_count("replicates.count", v, 1);
       }},
      {"replicates.seed",
       [](FitConfig& c, const std::string& v) { c.replication.seed = parse_seed("replicates.seed", v); }},
      {"replicates.centering",
       [](FitConfig& c, const std::string& v) {
         c.replication.centering = parse_enum<Centering>("replicates.centering", v, parse_centering);
       }},
      {"replicates.dimension_denominator",
       [](FitConfig& c, const std::string& v) {
         c.replication.dimension_denominator =
             static_cast<int>(parse_count("replicates.dimension_denominator", v, 0));
       }},
      {"replicates.file", [](FitConfig& c, const std::string& v) { c.replication.file = v; }},
      {"adjust.h_method",
       [](FitConfig& c, const std::string& v) {
         c.h_method = parse_enum<HessianMethod>("adjust.h_method", v, parse_hessian_method);
       }},
      {"adjust.h_max_draws",
       [](FitConfig& c, const std::string& v) { c.h_max_draws = parse_count("adjust.h_max_draws", v, 1); }},
      {"adjust.sqrt",
       [](FitConfig& c, const std::string& v) {
         c.sqrt_method = parse_enum<SqrtMethod>("adjust.sqrt", v, parse_sqrt_method);
       }},
      {"output.dir", [](FitConfig& c, const std::string& v) { c.output_dir = v; }},
      {"report.parameters",
       [](FitConfig& c, const std::string& v) { c.report_parameters = split_list(v); }},
      {"report.probs", [](FitConfig& c, const std::string& v) { c.probs = parse_double_list(v); }},
      {"seed", [](FitConfig& c, const std::string& v) { c.seed = parse_seed("seed", v); }},
      {"threads",
       [](FitConfig& c, const std::string& v) {
         c.threads = parse_count("threads", v, 1);
         c.sampler.threads = c.threads;
       }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw Error(ErrorKind::kConfiguration, "unknown config key '" + key + "'");
  it->second(c, value);
}

FitConfig FitConfig::from_key_values(const KeyValues& values) {
  FitConfig c;
  c.threads = default_thread_count();
  c.sampler.threads = c.threads;
  for (const auto& [key, value] : values) apply_fit_key(c, key, value);
  c.validate();
  return c;
}

void FitConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::kConfiguration, what); };
  if (data_path.empty()) bad("'data' (input CSV path) is required");
  if (design.weight.empty()) bad("'design.weights' is required");
  if (model.response.empty()) bad("model response is required (model.response or model.formula)");
  if (model.family == FamilyKind::kMultinomialGamma && !model.predictors.empty()) {
    bad("multinomial_gamma takes no predictors");
  }
  if (model.family != FamilyKind::kMultinomialGamma && model.predictors.empty() &&
      !model.intercept) {
    bad("model has no predictors and no intercept");
  }
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) bad("report.probs must lie in [0, 1]");
  }
  try {
    sampler.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
}

std::uint64_t FitConfig::sampler_seed() const {
  if (sampler_seed_override) return *sampler_seed_override;
  if (seed) return purpose_seed(*seed, SeedPurpose::kSampler);
  throw Error(ErrorKind::kConfiguration, "a seed is required: pass --seed or set 'seed' in the config");
}

std::optional<std::uint64_t> FitConfig::replicate_seed() const {
  if (replication.seed) return replication.seed;
  if (seed) return purpose_seed(*seed, SeedPurpose::kReplicates);
  return std::nullopt;
}

ModelFamily build_model(const DataTable& table, const ModelSpec& spec,
                        const Eigen::VectorXd& weights, std::vector<std::string>* categories) {
  const auto n = static_cast<Eigen::Index>(table.rows());
  if (!table.has_column(spec.response)) {
    throw Error(ErrorKind::kConfiguration,
                "response column '" + spec.response + "' is not in the data");
  }
  if (spec.family == FamilyKind::kMultinomialGamma) {
    const VariableMatrix y = expand_variable(table, spec.response, VariableKind::kCategorical);
    const auto k = static_cast<Eigen::Index>(y.labels.size());
    Eigen::VectorXd alpha(k);
    if (spec.alpha.size() == 1) {
      alpha.setConstant(spec.alpha.front());
    } else if (static_cast<Eigen::Index>(spec.alpha.size()) == k) {
      for (Eigen::Index i = 0; i < k; ++i) alpha[i] = spec.alpha[static_cast<std::size_t>(i)];
    } else {
      throw Error(ErrorKind::kConfiguration, "model.alpha needs 1 or " + std::to_string(k) +
                                                 " values, got " +
                                                 std::to_string(spec.alpha.size()));
    }
    if (categories) {
      categories->clear();
      for (const auto& label : y.labels) categories->push_back(label.substr(spec.response.size()));
    }
    return ModelFamily::multinomial_gamma(y.values, alpha, weights);
  }

  const Eigen::VectorXd y = column_or_config_error(table, spec.response, "response");
  const auto p = static_cast<Eigen::Index>(spec.predictors.size()) + (spec.intercept ? 1 : 0);
  Eigen::MatrixXd x(n, p);
  std::vector<std::string> names;
  Eigen::Index col = 0;
  if (spec.intercept) {
    x.col(col++).setOnes();
    names.push_back("Intercept");
  }
  for (const auto& name : spec.predictors) {
    x.col(col++) = column_or_config_error(table, name, "predictor");
    names.push_back(name);
  }
  if (spec.family == FamilyKind::kNormalLinear) {
    return ModelFamily::normal_linear(x, y, weights, spec.sigma_df, spec.sigma_scale, names);
  }
  return ModelFamily::bernoulli_logit(x, y, weights, names);
}

Eigen::VectorXd resolve_init(const std::string& text, const std::vector<std::string>& names,
                             Eigen::VectorXd defaults) {
  const auto items = split_list(text);
  if (items.empty()) return defaults;
  if (items.front().find(':') == std::string::npos) {
    const auto values = parse_double_list(text);
    if (values.size() != names.size()) {
      throw Error(ErrorKind::kConfiguration, "sampler.init has " + std::to_string(values.size()) +
                                                 " values, model has " +
                                                 std::to_string(names.size()) + " parameters");
    }
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  for (const auto& item : items) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorKind::kConfiguration, "sampler.init mixes lists and name:value pairs");
    }
    const std::string name = trim(item.substr(0, colon));
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
      std::string valid;
      for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
      throw Error(ErrorKind::kConfiguration,
                  "sampler.init names unknown parameter '" + name + "' (valid: " + valid + ")");
    }
    defaults[it - names.begin()] = parse_double_value("sampler.init", trim(item.substr(colon + 1)));
  }
  return defaults;
}

}  // namespace svypost
