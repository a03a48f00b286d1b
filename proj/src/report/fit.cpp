#include "svypost/report/fit.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "svypost/core/error.hpp"
#include "svypost/core/table.hpp"

namespace svypost {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void run_stage(const std::string& name, std::vector<StageTiming>& timings,
               const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    body();
  } catch (const Error& e) {
    rethrow_with_stage(e, name);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  timings.push_back({name, seconds});
  spdlog::info("{:<18} {:8.3f} s", name, seconds);
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

json summary_json(const std::vector<ParameterSummary>& rows, const std::vector<double>& probs) {
  json out = json::array();
  for (const auto& s : rows) {
    json q = json::object();
    for (std::size_t i = 0; i < probs.size(); ++i) q[fmt::format("{:g}", probs[i])] = number(s.quantiles[i]);
    out.push_back({{"name", s.name}, {"mean", number(s.mean)}, {"sd", number(s.sd)}, {"quantiles", q}});
  }
  return out;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kData, "cannot write '" + path + "'");
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << csv_escape(names[j]);
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

ReplicateDesign prepare_replicates(const FitConfig& config, const SurveyDesign& raw,
                                   const SurveyDesign& normalized, double factor) {
  ReplicateDesign reps =
      config.replication.file.empty()
          ? build_replicates(normalized, config.replication.method, config.replication.replicates,
                             config.replicate_seed())
          : import_replicates(raw, config.replication.file).rescaled(factor);
  reps.scaling.centering = config.replication.centering;
  if (config.replication.dimension_denominator) {
    reps.scaling.dimension_denominator = config.replication.dimension_denominator;
  }
  return reps;
}

}  // namespace

FitResult fit(const FitConfig& config) {
  config.validate();
  std::vector<StageTiming> timings;
  DataTable table;
  std::optional<SurveyDesign> raw;
  std::optional<SurveyDesign> design;
  std::optional<ReplicateDesign> reps;
  std::optional<ModelFamily> family;
  std::vector<std::string> categories;
  Eigen::VectorXd weights;
  double factor = 1.0;

  run_stage("load data", timings, [&] { table = DataTable::read_csv_file(config.data_path); });
  run_stage("build design", timings, [&] { raw = SurveyDesign::from_table(table, config.design); });
  run_stage("normalize weights", timings, [&] {
    weights = normalize_weights(raw->weights());
    factor = static_cast<double>(weights.size()) / raw->weights().sum();
    design = raw->with_weights(weights);
  });
  run_stage("replicates", timings, [&] { reps = prepare_replicates(config, *raw, *design, factor); });
  run_stage("build model", timings,
            [&] { family = build_model(table, config.model, weights, &categories); });

  FitResult result = fit_model(*family, *reps, config);
  result.categories = std::move(categories);
  timings.insert(timings.end(), result.timings.begin(), result.timings.end());
  result.timings = std::move(timings);
  if (!config.output_dir.empty()) {
    run_stage("write output", result.timings,
              [&] { write_fit_result(result, config, config.output_dir); });
  }
  return result;
}

FitResult fit_model(const ModelFamily& family, const ReplicateDesign& replicates,
                    const FitConfig& config) {
  FitResult r;
  r.replicate_method = replicates.method;
  r.replicates = replicates.replicates();
  const std::vector<std::string> names = family.space().unconstrained_names();

  run_stage("sample", r.timings, [&] {
    SamplerControl control = config.sampler;
    control.seed = config.sampler_seed();
    control.threads = config.threads;
    const Eigen::VectorXd init = resolve_init(config.sampler_init, names, family.default_init());
    r.sample = sample_pseudo_posterior(family, control, init, names);
  });
  run_stage("diagnostics", r.timings, [&] {
    if (r.sample.draws.draws() >= 4) r.diagnostics = mcmc_diagnostics(r.sample.draws);
  });
  run_stage("estimate H", r.timings, [&] {
    r.h = estimate_H(family, r.sample.draws, config.h_method, config.h_max_draws, config.threads);
  });
  const Eigen::VectorXd theta_bar = r.sample.draws.column_mean();
  run_stage("estimate J", r.timings,
            [&] { r.j = estimate_J(family, replicates, theta_bar, config.threads); });
  run_stage("adjust", r.timings, [&] {
    r.adjustment = adjust_draws(r.sample.draws, r.h.H, r.j.J, config.sqrt_method, &family.space());
  });
  run_stage("summarize", r.timings,
            [&] { r.summary = summarize(r.adjustment, config.probs, config.report_parameters); });

  for (const auto& chain : r.sample.chains) {
    if (chain.divergences > 0) {
      r.warnings.push_back(fmt::format("chain {}: {} divergent transitions after warmup",
                                       chain.chain, chain.divergences));
    }
  }
  for (const auto& d : r.diagnostics) {
    if (d.rhat > 1.05) r.warnings.push_back(fmt::format("{}: split R-hat {:.3f}", d.name, d.rhat));
  }
  if (!r.h.positive_definite) r.warnings.push_back("estimated H is not positive definite");
  r.warnings.insert(r.warnings.end(), r.j.warnings.begin(), r.j.warnings.end());
  r.warnings.insert(r.warnings.end(), r.adjustment.warnings.begin(), r.adjustment.warnings.end());
  for (const auto& w : r.warnings) spdlog::warn("{}", w);
  return r;
}

void write_fit_result(const FitResult& result, const FitConfig& config, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorKind::kConfiguration, "cannot create output directory '" + dir + "'");
  }
  const auto& a = result.adjustment;
  const auto path = [&](const char* file) { return (fs::path(dir) / file).string(); };
  write_draws_csv(path("draws_unadjusted.csv"), a.unadjusted.values, a.unadjusted.names, a.unadjusted.chain_id);
  write_draws_csv(path("draws_adjusted.csv"), a.adjusted.values, a.adjusted.names, a.adjusted.chain_id);
  write_draws_csv(path("draws_unadjusted_constrained.csv"), a.unadjusted_constrained.values,
                  a.unadjusted_constrained.names, a.unadjusted_constrained.chain_id);
  write_draws_csv(path("draws_adjusted_constrained.csv"), a.adjusted_constrained.values,
                  a.adjusted_constrained.names, a.adjusted_constrained.chain_id);
  write_matrix_csv(path("H.csv"), a.H, a.adjusted.names);
  write_matrix_csv(path("J.csv"), a.J, a.adjusted.names);
  write_matrix_csv(path("R1.csv"), a.R1, a.adjusted.names);
  write_matrix_csv(path("R2.csv"), a.R2, a.adjusted.names);

  json chains = json::array();
  for (const auto& c : result.sample.chains) {
    chains.push_back({{"chain", c.chain},
                      {"seed", c.seed},
                      {"mean_accept", number(c.mean_accept)},
                      {"step_size", number(c.step_size)},
                      {"divergences", c.divergences},
                      {"gradient_evaluations", c.gradient_evaluations}});
  }
  json diagnostics = json::array();
  for (const auto& d : result.diagnostics) {
    diagnostics.push_back({{"name", d.name}, {"rhat", number(d.rhat)}, {"ess", number(d.ess)},
                           {"degenerate", d.degenerate}});
  }
  json timings = json::object();
  for (const auto& t : result.timings) timings[t.stage] = t.seconds;

  json doc = {
      {"parameters", a.adjusted.names},
      {"constrained_parameters", a.adjusted_constrained.names},
      {"categories", result.categories},
      {"draws", a.adjusted.draws()},
      {"theta_bar", vector_json(a.theta_bar)},
      {"deff", vector_json(a.deff)},
      {"h_condition_number", number(a.h_condition)},
      {"h_clipped_eigenvalues", a.h_clipped},
      {"h_positive_definite", a.h_positive_definite},
      {"h_method", std::string(to_string(config.h_method))},
      {"h_draws_used", result.h.draws_used},
      {"sqrt_method", std::string(to_string(config.sqrt_method))},
      {"replicate_method", std::string(to_string(result.replicate_method))},
      {"replicates", result.replicates},
      {"sampler_seed", config.sampler_seed()},
      {"chains", chains},
      {"diagnostics", diagnostics},
      {"probs", result.summary.probs},
      {"summary_unadjusted", summary_json(result.summary.unadjusted, result.summary.probs)},
      {"summary_adjusted", summary_json(result.summary.adjusted, result.summary.probs)},
      {"warnings", result.warnings},
      {"timings_seconds", timings},
  };
  std::ofstream out(path("summary.json"));
  if (!out) throw Error(ErrorKind::kData, "cannot write summary.json");
  out << doc.dump(2) << '\n';
}

DrawsMatrix read_draws_csv(const std::string& path) {
  const DataTable table = DataTable::read_csv_file(path);
  if (table.cols() < 2 || table.names()[0] != "draw" || table.names()[1] != "chain") {
    throw Error(ErrorKind::kData, "'" + path + "' is not a draws file (expected draw,chain,...)");
  }
  DrawsMatrix d;
  d.values.resize(static_cast<Eigen::Index>(table.rows()), static_cast<Eigen::Index>(table.cols() - 2));
  for (std::size_t j = 2; j < table.cols(); ++j) {
    d.names.push_back(table.names()[j]);
    d.values.col(static_cast<Eigen::Index>(j - 2)) = table.numeric(table.names()[j]);
  }
  const Eigen::VectorXd chain = table.numeric("chain");
  for (double c : chain) d.chain_id.push_back(static_cast<int>(c));
  return d;
}

SavedDraws load_saved_draws(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorKind::kNotFound, "result directory '" + dir + "' does not exist");
  }
  const auto path = [&](const char* file) { return (fs::path(dir) / file).string(); };
  return {read_draws_csv(path("draws_unadjusted.csv")), read_draws_csv(path("draws_adjusted.csv")),
          read_draws_csv(path("draws_unadjusted_constrained.csv")),
          read_draws_csv(path("draws_adjusted_constrained.csv"))};
}

}  // namespace svypost
