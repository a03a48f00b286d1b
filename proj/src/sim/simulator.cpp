#include "svypost/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "svypost/core/error.hpp"
#include "svypost/core/parallel.hpp"
#include "svypost/core/rng.hpp"
#include "svypost/report/fit.hpp"

namespace svypost {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::kInvalidScenario, what); }

std::string category_label(std::size_t k, std::size_t count) {
  // Zero padded so lexical order matches numeric order.
  const std::size_t width = std::to_string(count).size();
  std::string digits = std::to_string(k + 1);
  return "k" + std::string(width - digits.size(), '0') + digits;
}

std::vector<std::size_t> srs_indices(std::size_t population, std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Largest-remainder rounding of n * shares.
std::vector<std::size_t> allocate(std::size_t n, const std::vector<double>& shares) {
  std::vector<std::size_t> out(shares.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t used = 0;
  for (std::size_t h = 0; h < shares.size(); ++h) {
    const double exact = static_cast<double>(n) * shares[h];
    out[h] = static_cast<std::size_t>(std::floor(exact));
    used += out[h];
    remainders.emplace_back(exact - std::floor(exact), h);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; used < n; ++i, ++used) ++out[remainders[i % remainders.size()].second];
  return out;
}

std::vector<std::string> predictor_names(std::size_t p) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < p; ++j) out.push_back("x" + std::to_string(j + 1));
  return out;
}

ModelSpec model_spec(const SimScenario& s) {
  ModelSpec spec = s.fit.model;
  spec.family = s.model.family;
  spec.response = "y";
  spec.intercept = true;
  spec.predictors = s.model.family == FamilyKind::kMultinomialGamma
                        ? std::vector<std::string>{}
                        : predictor_names(s.model.predictors);
  return spec;
}

double quantile_of(Eigen::VectorXd x, double p) {
  std::vector<double> v(x.data(), x.data() + x.size());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

double variance_of(const Eigen::VectorXd& x) {
  return (x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1);
}

}  // namespace

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kSrs: return "srs";
    case SchemeKind::kStratifiedSrs: return "stratified_srs";
    case SchemeKind::kOneStageCluster: return "one_stage_cluster";
    case SchemeKind::kPpsSystematic: return "pps_systematic";
  }
  return "srs";
}

SchemeKind parse_scheme(std::string_view text) {
  if (text == "srs") return SchemeKind::kSrs;
  if (text == "stratified_srs") return SchemeKind::kStratifiedSrs;
  if (text == "one_stage_cluster") return SchemeKind::kOneStageCluster;
  if (text == "pps_systematic" || text == "pps") return SchemeKind::kPpsSystematic;
  throw Error(ErrorKind::kInvalidScenario,
              "unknown sampling scheme '" + std::string(text) +
                  "' (expected srs, stratified_srs, one_stage_cluster or pps_systematic)");
}

SimScenario::SimScenario() {
  fit.sampler.iter = 1000;
  fit.sampler.warmup = 500;
}

std::vector<std::string> SimScenario::target_names() const {
  std::vector<std::string> out;
  if (model.family == FamilyKind::kMultinomialGamma) {
    for (std::size_t k = 0; k < model.theta0.size(); ++k) out.push_back("theta" + std::to_string(k + 1));
    return out;
  }
  out.push_back("Intercept");
  for (const auto& n : predictor_names(model.predictors)) out.push_back(n);
  if (model.family == FamilyKind::kNormalLinear) out.push_back("sigma");
  return out;
}

void SimScenario::validate() const {
  if (N == 0) invalid("population size N must be positive");
  if (replications == 0) invalid("study.replications must be positive");
  if (!(level > 0.0 && level < 1.0)) invalid("study.level must lie in (0, 1)");
  const std::size_t p = model.predictors;
  switch (model.family) {
    case FamilyKind::kNormalLinear:
      if (model.theta0.size() != p + 2) invalid("normal_linear needs theta0 = (beta0..betap, sigma)");
      if (!(model.theta0.back() > 0.0)) invalid("true sigma must be positive");
      break;
    case FamilyKind::kBernoulliLogit:
      if (model.theta0.size() != p + 1) invalid("bernoulli_logit needs theta0 = (beta0..betap)");
      break;
    case FamilyKind::kMultinomialGamma: {
      if (model.theta0.size() < 2) invalid("multinomial_gamma needs at least 2 probabilities");
      double total = 0.0;
      for (double t : model.theta0) {
        if (!(t > 0.0)) invalid("category probabilities must be positive");
        total += t;
      }
      if (std::abs(total - 1.0) > 1e-9) invalid("category probabilities must sum to 1");
      break;
    }
  }
  if (model.clusters < 1 || model.clusters > N) invalid("population.clusters must be in [1, N]");
  if (!(model.cluster_icc >= 0.0 && model.cluster_icc <= 1.0)) invalid("population.cluster_icc must be in [0, 1]");
  switch (scheme.kind) {
    case SchemeKind::kOneStageCluster:
      if (N % model.clusters != 0) invalid("N must be a multiple of population.clusters");
      if (scheme.clusters_selected < 2 || scheme.clusters_selected > model.clusters) {
        invalid("scheme.clusters must be between 2 and population.clusters");
      }
      break;
    case SchemeKind::kPpsSystematic:
      if (scheme.size_y != 0.0 && model.family == FamilyKind::kMultinomialGamma) {
        invalid("scheme.size_y needs a numeric response; use size_x for multinomial_gamma");
      }
      if (scheme.size_x != 0.0 && model.predictors == 0) invalid("scheme.size_x needs model.predictors >= 1");
      if (!(scheme.size_noise >= 0.0)) invalid("scheme.size_noise must be nonnegative");
      if (scheme.n < 2 || scheme.n > N) invalid("sample size n must satisfy 2 <= n <= N");
      break;
    case SchemeKind::kStratifiedSrs:
      if (scheme.strata < 1) invalid("scheme.strata must be positive");
      if (scheme.stratify_on != "y" && scheme.stratify_on.rfind('x', 0) != 0) {
        invalid("scheme.stratify_on must be y or a covariate x1..xp");
      }
      [[fallthrough]];
    default:
      if (scheme.n < 2 || scheme.n > N) invalid("sample size n must satisfy 2 <= n <= N");
  }
  try {
    fit.sampler.validate();
  } catch (const Error& e) {
    invalid(e.what());
  }
}

SimScenario SimScenario::from_key_values(const KeyValues& values) {
  SimScenario s;
  s.fit.threads = default_thread_count();
  for (const auto& [key, v] : values) {
    if (key == "model.family") {
      s.model.family = parse_family(v);
    } else if (key == "model.theta") {
      s.model.theta0 = parse_double_list(v);
    } else if (key == "model.predictors") {
      s.model.predictors = static_cast<std::size_t>(parse_int_value(key, v));
    } else if (key == "model.alpha") {
      s.fit.model.alpha = parse_double_list(v);
    } else if (key == "model.sigma_scale") {
      s.fit.model.sigma_scale = parse_double_value(key, v);
    } else if (key == "population.N") {
      s.N = static_cast<std::size_t>(parse_int_value(key, v));
    } else if (key == "population.clusters") {
      s.model.clusters = static_cast<std::size_t>(parse_int_value(key, v));
    } else if (key == "population.cluster_icc") {
      s.model.cluster_icc = parse_double_value(key, v);
    } else if (key == "scheme.kind") {
      s.scheme.kind = parse_scheme(v);
    } else if (key == "scheme.n") {
      s.scheme.n = static_cast<std::size_t>(parse_int_value(key, v));
    } else if (key == "scheme.strata") {
      s.scheme.strata = static_cast<std::size_t>(parse_int_value(key, v));
    } else if (key == "scheme.stratify_on") {
      s.scheme.stratify_on = v;
    } else if (key == "scheme.allocation") {
      if (v == "proportional") s.scheme.allocation = Allocation::kProportional;
      else if (v == "equal") s.scheme.allocation = Allocation::kEqual;
      else invalid("scheme.allocation must be proportional or equal");
    } else if (key == "scheme.clusters") {
      s.scheme.clusters_selected = static_cast<std::size_t>(parse_int_value(key, v));
    } else if (key == "scheme.size_y") {
      s.scheme.size_y = parse_double_value(key, v);
    } else if (key == "scheme.size_x") {
      s.scheme.size_x = parse_double_value(key, v);
    } else if (key == "scheme.size_noise") {
      s.scheme.size_noise = parse_double_value(key, v);
    } else if (key == "study.replications") {
      const long long r = parse_int_value(key, v);
      if (r < 0) invalid("study.replications must be nonnegative");
      s.replications = static_cast<std::size_t>(r);
    } else if (key == "study.level") {
      s.level = parse_double_value(key, v);
    } else if (key == "study.seed" || key == "seed") {
      s.seed = static_cast<std::uint64_t>(parse_int_value(key, v));
    } else if (key.rfind("sampler.", 0) == 0 || key.rfind("replicates.", 0) == 0 ||
               key.rfind("adjust.", 0) == 0 || key == "threads") {
      apply_fit_key(s.fit, key, v);
    } else {
      throw Error(ErrorKind::kConfiguration, "unknown scenario key '" + key + "'");
    }
  }
  s.validate();
  return s;
}

DataTable generate_population(const SimScenario& s, std::uint64_t seed) {
  s.validate();
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(s.N);
  const std::size_t p = s.model.predictors;
  const std::size_t per_cluster = (s.N + s.model.clusters - 1) / s.model.clusters;

  std::vector<std::string> unit(s.N), cluster(s.N);
  for (std::size_t i = 0; i < s.N; ++i) {
    unit[i] = std::to_string(i + 1);
    cluster[i] = std::to_string(i / per_cluster + 1);
  }
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(p));
  const double between = std::sqrt(s.model.cluster_icc);
  const double within = std::sqrt(1.0 - s.model.cluster_icc);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> effect(s.model.clusters);
    for (auto& e : effect) e = normal(rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, static_cast<Eigen::Index>(j)) =
          between * effect[static_cast<std::size_t>(i) / per_cluster] + within * normal(rng);
    }
  }

  DataTable table;
  table.add_column("unit", unit);
  table.add_column("cluster", cluster);
  for (std::size_t j = 0; j < p; ++j) table.add_column("x" + std::to_string(j + 1), x.col(static_cast<Eigen::Index>(j)));

  const auto& t = s.model.theta0;
  if (s.model.family == FamilyKind::kMultinomialGamma) {
    std::discrete_distribution<std::size_t> category(t.begin(), t.end());
    std::vector<std::string> y(s.N);
    for (auto& label : y) label = category_label(category(rng), t.size());
    table.add_column("y", y);
    return table;
  }
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, t[0]);
  for (std::size_t j = 0; j < p; ++j) eta += t[j + 1] * x.col(static_cast<Eigen::Index>(j));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s.model.family == FamilyKind::kNormalLinear) {
      y[i] = eta[i] + t.back() * normal(rng);
    } else {
      y[i] = unif(rng) < 1.0 / (1.0 + std::exp(-eta[i])) ? 1.0 : 0.0;
    }
  }
  table.add_column("y", y);
  return table;
}

Eigen::VectorXd pps_inclusion_probabilities(const Eigen::VectorXd& size, std::size_t n) {
  const auto count = size.size();
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(size[i] > 0.0) || !std::isfinite(size[i])) {
      throw Error(ErrorKind::kScheme, "size measure must be positive and finite (unit " +
                                          std::to_string(i + 1) + ")");
    }
  }
  if (n > static_cast<std::size_t>(count)) {
    throw Error(ErrorKind::kScheme, "sample size exceeds the number of units");
  }
  std::vector<bool> certain(static_cast<std::size_t>(count), false);
  Eigen::VectorXd pi(count);
  for (;;) {
    double rest = 0.0;
    std::size_t taken = 0;
    for (Eigen::Index i = 0; i < count; ++i) {
      if (certain[static_cast<std::size_t>(i)]) ++taken;
      else rest += size[i];
    }
    const double remaining = static_cast<double>(n - taken);
    bool changed = false;
    for (Eigen::Index i = 0; i < count; ++i) {
      if (certain[static_cast<std::size_t>(i)]) {
        pi[i] = 1.0;
        continue;
      }
      pi[i] = remaining * size[i] / rest;
      if (pi[i] >= 1.0) {
        certain[static_cast<std::size_t>(i)] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(pi[i] > 0.0)) {
      throw Error(ErrorKind::kScheme, "unit " + std::to_string(i + 1) +
                                          " has positive size but zero inclusion probability");
    }
  }
  return pi;
}

SurveyDesign draw_sample(const DataTable& population, const SimScenario& s, std::uint64_t seed) {
  s.validate();
  Rng rng(seed);
  const std::size_t total = population.rows();
  if (total != s.N) invalid("population has " + std::to_string(total) + " rows, scenario says N = " + std::to_string(s.N));

  std::vector<std::size_t> rows;
  std::vector<double> pi;
  std::vector<std::string> strata;
  bool cluster_psu = false;

  switch (s.scheme.kind) {
    case SchemeKind::kSrs: {
      rows = srs_indices(total, s.scheme.n, rng);
      pi.assign(rows.size(), static_cast<double>(s.scheme.n) / static_cast<double>(total));
      strata.assign(rows.size(), "1");
      break;
    }
    case SchemeKind::kStratifiedSrs: {
      if (!population.has_column(s.scheme.stratify_on)) {
        invalid("stratification variable '" + s.scheme.stratify_on + "' is not in the population");
      }
      const Eigen::VectorXd key = population.numeric(s.scheme.stratify_on);
      std::vector<std::size_t> order(total);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return key[static_cast<Eigen::Index>(a)] < key[static_cast<Eigen::Index>(b)];
      });
      const std::size_t h_count = s.scheme.strata;
      std::vector<double> shares(h_count);
      std::vector<std::vector<std::size_t>> members(h_count);
      for (std::size_t r = 0; r < total; ++r) members[r * h_count / total].push_back(order[r]);
      for (std::size_t h = 0; h < h_count; ++h) {
        shares[h] = s.scheme.allocation == Allocation::kEqual
                        ? 1.0 / static_cast<double>(h_count)
                        : static_cast<double>(members[h].size()) / static_cast<double>(total);
      }
      const auto sizes = allocate(s.scheme.n, shares);
      for (std::size_t h = 0; h < h_count; ++h) {
        if (sizes[h] < 2 || sizes[h] > members[h].size()) {
          throw Error(ErrorKind::kScheme, "stratum " + std::to_string(h + 1) + " gets " +
                                              std::to_string(sizes[h]) + " of " +
                                              std::to_string(members[h].size()) + " units");
        }
        std::sort(members[h].begin(), members[h].end());
        for (std::size_t k : srs_indices(members[h].size(), sizes[h], rng)) {
          rows.push_back(members[h][k]);
          pi.push_back(static_cast<double>(sizes[h]) / static_cast<double>(members[h].size()));
          strata.push_back(std::to_string(h + 1));
        }
      }
      break;
    }
    case SchemeKind::kOneStageCluster: {
      const std::size_t a = s.scheme.clusters_selected;
      const std::size_t per = total / s.model.clusters;
      for (std::size_t c : srs_indices(s.model.clusters, a, rng)) {
        for (std::size_t i = c * per; i < (c + 1) * per; ++i) {
          rows.push_back(i);
          pi.push_back(static_cast<double>(a) / static_cast<double>(s.model.clusters));
          strata.push_back("1");
        }
      }
      cluster_psu = true;
      break;
    }
    case SchemeKind::kPpsSystematic: {
      Eigen::VectorXd size = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
      if (s.scheme.size_y != 0.0) size += s.scheme.size_y * population.numeric("y");
      if (s.scheme.size_x != 0.0) size += s.scheme.size_x * population.numeric("x1");
      if (s.scheme.size_noise != 0.0) {
        std::normal_distribution<double> normal;
        for (Eigen::Index i = 0; i < size.size(); ++i) size[i] += s.scheme.size_noise * normal(rng);
      }
      size = size.array().exp();
      const Eigen::VectorXd all_pi = pps_inclusion_probabilities(size, s.scheme.n);
      std::vector<std::size_t> order(total);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return size[static_cast<Eigen::Index>(a)] < size[static_cast<Eigen::Index>(b)];
      });
      const double start = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      double cumulative = 0.0;
      for (std::size_t i : order) {
        const double before = cumulative;
        cumulative += all_pi[static_cast<Eigen::Index>(i)];
        // Selected when some start + k lands in [before, cumulative).
        if (std::floor(cumulative - start) > std::floor(before - start)) {
          rows.push_back(i);
          pi.push_back(all_pi[static_cast<Eigen::Index>(i)]);
          strata.push_back("1");
        }
      }
      std::vector<std::size_t> by_row(rows.size());
      std::iota(by_row.begin(), by_row.end(), 0);
      std::sort(by_row.begin(), by_row.end(), [&](std::size_t a, std::size_t b) { return rows[a] < rows[b]; });
      std::vector<std::size_t> r2;
      std::vector<double> p2;
      for (std::size_t k : by_row) {
        r2.push_back(rows[k]);
        p2.push_back(pi[k]);
      }
      rows = std::move(r2);
      pi = std::move(p2);
      break;
    }
  }

  DataTable sample = population.select_rows(rows);
  Eigen::VectorXd pis = Eigen::Map<const Eigen::VectorXd>(pi.data(), static_cast<Eigen::Index>(pi.size()));
  const Eigen::VectorXd weights = pis.cwiseInverse();
  sample.add_column("pi", pis);
  sample.add_column("weight", weights);
  sample.add_column("stratum", strata);
  const std::vector<std::string> psu = cluster_psu ? sample.text("cluster") : sample.text("unit");
  return SurveyDesign(sample, psu, strata, weights, std::nullopt, true);
}

CoverageResult coverage_study(const SimScenario& s) {
  s.validate();
  const std::vector<std::string> targets = s.target_names();
  const double lo_p = 0.5 * (1.0 - s.level);
  const double hi_p = 1.0 - lo_p;

  struct Replication {
    bool ok = false;
    std::vector<CoverageRow> rows;
  };
  std::vector<Replication> reps(s.replications);
  std::mutex log_mutex;
  const auto previous_level = spdlog::get_level();
  spdlog::set_level(spdlog::level::err);

  const std::size_t workers = std::max<std::size_t>(1, s.fit.threads);
  parallel_for(s.replications, workers, [&](std::size_t r) {
    const std::uint64_t rep_seed = substream_seed(s.seed, r);
    try {
      const DataTable population = generate_population(s, purpose_seed(rep_seed, SeedPurpose::kPopulation));
      const SurveyDesign raw = draw_sample(population, s, purpose_seed(rep_seed, SeedPurpose::kSample));
      const Eigen::VectorXd weights = normalize_weights(raw.weights());
      const SurveyDesign design = raw.with_weights(weights);
      FitConfig config = s.fit;
      config.seed = rep_seed;
      config.sampler_seed_override.reset();
      config.replication.seed.reset();
      config.threads = 1;
      ReplicateDesign replicates = build_replicates(design, config.replication.method,
                                                    config.replication.replicates,
                                                    config.replicate_seed());
      replicates.scaling.centering = config.replication.centering;
      if (config.replication.dimension_denominator) {
        replicates.scaling.dimension_denominator = config.replication.dimension_denominator;
      }
      const ModelFamily family = build_model(design.rows(), model_spec(s), weights);
      const FitResult fit = fit_model(family, replicates, config);

      const auto& a = fit.adjustment;
      const auto& names = a.adjusted_constrained.names;
      const auto d = static_cast<std::size_t>(a.adjusted.dimension());
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto j = static_cast<std::size_t>(std::find(names.begin(), names.end(), targets[t]) - names.begin());
        if (j >= names.size()) throw Error(ErrorKind::kStudy, "target " + targets[t] + " missing");
        const Eigen::VectorXd adj = a.adjusted_constrained.values.col(static_cast<Eigen::Index>(j));
        const Eigen::VectorXd raw_draws = a.unadjusted_constrained.values.col(static_cast<Eigen::Index>(j));
        const double truth = s.model.theta0[t];
        CoverageRow row;
        row.replication = r + 1;
        row.parameter = targets[t];
        row.covered_adjusted = quantile_of(adj, lo_p) <= truth && truth <= quantile_of(adj, hi_p);
        row.covered_unadjusted =
            quantile_of(raw_draws, lo_p) <= truth && truth <= quantile_of(raw_draws, hi_p);
        row.deff = j < d ? a.deff[static_cast<Eigen::Index>(j)] : variance_of(adj) / variance_of(raw_draws);
        reps[r].rows.push_back(row);
      }
      reps[r].ok = true;
    } catch (const Error& e) {
      std::lock_guard<std::mutex> lock(log_mutex);
      spdlog::error("replication {} failed: {}", r + 1, e.what());
    }
  });
  spdlog::set_level(previous_level);

  CoverageResult out;
  out.level = s.level;
  for (auto& rep : reps) {
    if (!rep.ok) {
      ++out.failures;
      continue;
    }
    ++out.completed;
    out.rows.insert(out.rows.end(), rep.rows.begin(), rep.rows.end());
  }
  if (static_cast<double>(out.failures) > 0.1 * static_cast<double>(s.replications)) {
    throw Error(ErrorKind::kStudy, std::to_string(out.failures) + " of " +
                                       std::to_string(s.replications) +
                                       " replications failed (more than 10%)");
  }
  for (std::size_t t = 0; t < targets.size(); ++t) {
    CoverageSummary sum;
    sum.parameter = targets[t];
    sum.truth = s.model.theta0[t];
    double adj = 0.0, raw = 0.0, deff = 0.0;
    for (const auto& row : out.rows) {
      if (row.parameter != targets[t]) continue;
      adj += row.covered_adjusted;
      raw += row.covered_unadjusted;
      deff += row.deff;
    }
    const double m = static_cast<double>(out.completed);
    sum.coverage_adjusted = adj / m;
    sum.coverage_unadjusted = raw / m;
    sum.se_adjusted = std::sqrt(sum.coverage_adjusted * (1.0 - sum.coverage_adjusted) / m);
    sum.se_unadjusted = std::sqrt(sum.coverage_unadjusted * (1.0 - sum.coverage_unadjusted) / m);
    sum.mean_deff = deff / m;
    out.summary.push_back(sum);
  }
  return out;
}

void write_coverage_csv(const CoverageResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kData, "cannot write '" + path + "'");
  out << "replication,parameter,covered_adjusted,covered_unadjusted,deff\n";
  for (const auto& r : result.rows) {
    out << r.replication << ',' << csv_escape(r.parameter) << ',' << (r.covered_adjusted ? 1 : 0)
        << ',' << (r.covered_unadjusted ? 1 : 0) << ',' << format_double(r.deff) << '\n';
  }
}

void write_coverage_summary_json(const CoverageResult& result, const SimScenario& s,
                                 const std::string& path) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : result.summary) {
    params.push_back({{"parameter", p.parameter},
                      {"truth", p.truth},
                      {"coverage_adjusted", p.coverage_adjusted},
                      {"se_adjusted", p.se_adjusted},
                      {"coverage_unadjusted", p.coverage_unadjusted},
                      {"se_unadjusted", p.se_unadjusted},
                      {"mean_deff", p.mean_deff}});
  }
  const nlohmann::json doc = {{"scheme", std::string(to_string(s.scheme.kind))},
                              {"family", std::string(to_string(s.model.family))},
                              {"N", s.N},
                              {"n", s.scheme.n},
                              {"level", result.level},
                              {"replications", s.replications},
                              {"completed", result.completed},
                              {"failures", result.failures},
                              {"seed", s.seed},
                              {"parameters", params}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kData, "cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

}  // namespace svypost
