// Command-line front end: fit, replicates, svymean, simulate, export.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "svypost/core/error.hpp"
#include "svypost/core/keyvalue.hpp"
#include "svypost/design/estimators.hpp"
#include "svypost/design/replicates.hpp"
#include "svypost/report/config.hpp"
#include "svypost/report/fit.hpp"
#include "svypost/report/summary.hpp"
#include "svypost/sim/simulator.hpp"

namespace {

using namespace svypost;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

// One string option per flat config key; only flags actually given override the file.
struct KeyFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App& cmd, const std::vector<std::string>& only = {}) {
    cmd.add_option("-c,--config", config_file, "key = value config file");
    for (const auto& [key, help] : fit_config_keys()) {
      if (!only.empty()) {
        bool wanted = false;
        for (const auto& prefix : only) wanted = wanted || key.rfind(prefix, 0) == 0;
        if (!wanted) continue;
      }
      cmd.add_option("--" + key, values[key], help);
    }
  }

  KeyValues merged(const CLI::App& cmd) const {
    KeyValues kv = config_file.empty() ? KeyValues{} : read_key_values_file(config_file);
    for (const auto& [key, value] : values) {
      if (cmd.count("--" + key) > 0) kv[key] = value;
    }
    return kv;
  }
};

struct LoadedDesign {
  DataTable table;
  SurveyDesign design;
};

LoadedDesign load_design(const FitConfig& c) {
  if (c.data_path.empty()) throw Error(ErrorKind::kConfiguration, "data is required");
  if (c.design.weight.empty()) throw Error(ErrorKind::kConfiguration, "design.weights is required");
  DataTable table = DataTable::read_csv_file(c.data_path);
  SurveyDesign design = SurveyDesign::from_table(table, c.design);
  return {std::move(table), std::move(design)};
}

// Config for the design-only commands; `model.response` is not needed there.
FitConfig design_config(const KeyValues& kv) {
  FitConfig c;
  for (const auto& [key, value] : kv) apply_fit_key(c, key, value);
  return c;
}

int run_fit(const KeyValues& kv) {
  const FitConfig config = FitConfig::from_key_values(kv);
  const FitResult r = fit(config);
  print_summary(std::cout, r.summary);
  for (const auto& w : r.warnings) spdlog::warn("{}", w);
  if (!config.output_dir.empty()) spdlog::info("results written to {}", config.output_dir);
  return 0;
}

int run_replicates(const KeyValues& kv, const std::string& stem) {
  const FitConfig c = design_config(kv);
  const LoadedDesign d = load_design(c);
  const ReplicateDesign reps =
      build_replicates(d.design, c.replication.method, c.replication.replicates, c.replicate_seed());
  export_replicates(reps, stem);
  fmt::print("{} replicates ({}) for {} rows written to {}.csv\n", reps.replicates(),
             to_string(reps.method), d.design.size(), stem);
  return 0;
}

int run_svymean(const KeyValues& kv, const std::vector<std::string>& variables, bool adjust_lonely) {
  if (variables.empty()) throw Error(ErrorKind::kConfiguration, "--variables is required");
  const FitConfig c = design_config(kv);
  const LoadedDesign d = load_design(c);
  const bool replicated = kv.count("replicates.method") > 0 || !c.replication.file.empty();
  std::optional<ReplicateDesign> reps;
  if (replicated) {
    reps = c.replication.file.empty()
               ? build_replicates(d.design, c.replication.method, c.replication.replicates,
                                  c.replicate_seed())
               : import_replicates(d.design, c.replication.file);
    reps->scaling.centering = c.replication.centering;
  }
  fmt::print("{:<20} {:>12} {:>12}{}\n", "variable", "mean", "tl_se", replicated ? "       rep_se" : "");
  for (const auto& column : variables) {
    const VariableMatrix v = expand_variable(d.table, column);
    const Eigen::VectorXd mean = ht_mean(d.design, v);
    const Eigen::VectorXd tl =
        tl_variance_mean(d.design, v, adjust_lonely ? LonelyPsu::kAdjust : LonelyPsu::kError);
    Eigen::VectorXd rep;
    if (reps) rep = replicate_se_mean(*reps, v);
    for (std::size_t j = 0; j < v.labels.size(); ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      fmt::print("{:<20} {:>12.6f} {:>12.6f}", v.labels[j], mean[k], tl[k]);
      if (reps) fmt::print(" {:>12.6f}", rep[k]);
      fmt::print("\n");
    }
  }
  return 0;
}

int run_simulate(const std::string& file, const std::vector<std::string>& sets,
                 std::optional<std::uint64_t> seed, const std::string& out_dir) {
  KeyValues kv = file.empty() ? KeyValues{} : read_key_values_file(file);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::kConfiguration, "--set expects key=value, got '" + s + "'");
    kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  if (seed) kv["seed"] = std::to_string(*seed);
  if (kv.count("seed") == 0 && kv.count("study.seed") == 0) {
    throw Error(ErrorKind::kConfiguration, "a seed is required: pass --seed or set study.seed");
  }
  const SimScenario scenario = SimScenario::from_key_values(kv);
  const CoverageResult r = coverage_study(scenario);
  fmt::print("{} of {} replications completed ({} failed), nominal level {:.2f}\n", r.completed,
             scenario.replications, r.failures, r.level);
  fmt::print("{:<12} {:>9} {:>16} {:>16} {:>9}\n", "parameter", "truth", "adjusted", "unadjusted", "deff");
  for (const auto& s : r.summary) {
    fmt::print("{:<12} {:>9.4f} {:>8.3f} ({:.3f}) {:>8.3f} ({:.3f}) {:>9.3f}\n", s.parameter, s.truth,
               s.coverage_adjusted, s.se_adjusted, s.coverage_unadjusted, s.se_unadjusted, s.mean_deff);
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_coverage_csv(r, (std::filesystem::path(out_dir) / "coverage.csv").string());
    write_coverage_summary_json(r, scenario, (std::filesystem::path(out_dir) / "coverage_summary.json").string());
  }
  return 0;
}

int run_export(const std::string& dir, const std::vector<std::string>& names, bool unconstrained,
               const std::string& out_path) {
  const SavedDraws saved = load_saved_draws(dir);
  const DrawsMatrix& unadj = unconstrained ? saved.unadjusted : saved.unadjusted_constrained;
  const DrawsMatrix& adj = unconstrained ? saved.adjusted : saved.adjusted_constrained;
  if (out_path.empty() || out_path == "-") {
    export_pairs_data(std::cout, unadj, adj, names);
    return 0;
  }
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorKind::kData, "cannot write '" + out_path + "'");
  export_pairs_data(out, unadj, adj, names);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Survey-weighted pseudo-posterior sampling with curvature adjustment"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  KeyFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Sample, estimate H and J, adjust and summarize");
  fit_flags.attach(*fit_cmd);

  KeyFlags rep_flags;
  std::string rep_stem;
  auto* rep_cmd = app.add_subcommand("replicates", "Generate and export replicate weights");
  rep_flags.attach(*rep_cmd, {"data", "design.", "replicates.", "seed"});
  rep_cmd->add_option("-o,--out", rep_stem, "output stem (writes <stem>.csv and <stem>.meta)")->required();

  KeyFlags mean_flags;
  std::vector<std::string> variables;
  bool adjust_lonely = false;
  auto* mean_cmd = app.add_subcommand("svymean", "Weighted means with linearization and replicate SEs");
  mean_flags.attach(*mean_cmd, {"data", "design.", "replicates.", "seed"});
  mean_cmd->add_option("--variables", variables, "columns to estimate")->delimiter(',')->required();
  mean_cmd->add_flag("--lonely-adjust", adjust_lonely, "center single-PSU strata at the grand mean");

  std::string sim_file, sim_out;
  std::vector<std::string> sim_sets;
  std::optional<std::uint64_t> sim_seed;
  auto* sim_cmd = app.add_subcommand("simulate", "Coverage study for a scenario file");
  sim_cmd->add_option("-c,--config", sim_file, "scenario key = value file");
  sim_cmd->add_option("--set", sim_sets, "override a scenario key (key=value), repeatable");
  sim_cmd->add_option("--seed", sim_seed, "master seed");
  sim_cmd->add_option("-o,--out", sim_out, "directory for coverage.csv and coverage_summary.json");

  std::string export_dir, export_out;
  std::vector<std::string> export_names;
  bool export_unconstrained = false;
  auto* export_cmd = app.add_subcommand("export", "Long-format pairs data from a saved fit");
  export_cmd->add_option("dir", export_dir, "directory written by fit (output.dir)")->required();
  export_cmd->add_option("--parameters", export_names, "parameter subset")->delimiter(',');
  export_cmd->add_flag("--unconstrained", export_unconstrained, "export unconstrained draws");
  export_cmd->add_option("-o,--out", export_out, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%l] %v");

  try {
    if (*fit_cmd) return run_fit(fit_flags.merged(*fit_cmd));
    if (*rep_cmd) return run_replicates(rep_flags.merged(*rep_cmd), rep_stem);
    if (*mean_cmd) return run_svymean(mean_flags.merged(*mean_cmd), variables, adjust_lonely);
    if (*sim_cmd) return run_simulate(sim_file, sim_sets, sim_seed, sim_out);
    if (*export_cmd) return run_export(export_dir, export_names, export_unconstrained, export_out);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 4;
  }
  return 0;
}
