#include "svypost/sampler/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "svypost/core/error.hpp"

namespace svypost {

namespace {

using Chains = std::vector<std::vector<double>>;

// Normal scores of the pooled ranks, ties sharing their average rank.
Chains rank_normalize(const Chains& chains) {
  std::vector<std::pair<double, std::size_t>> pooled;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (double v : chains[c]) pooled.emplace_back(v, pooled.size());
  }
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pooled[a].first < pooled[b].first; });
  std::vector<double> rank(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]].first == pooled[order[i]].first) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  const boost::math::normal_distribution<double> normal;
  const double s = static_cast<double>(pooled.size());
  Chains out = chains;
  std::size_t idx = 0;
  for (auto& chain : out) {
    for (double& v : chain) v = boost::math::quantile(normal, (rank[idx++] - 0.375) / (s + 0.25));
  }
  return out;
}

Chains split_halves(const Chains& chains) {
  Chains out;
  for (const auto& chain : chains) {
    const std::size_t half = chain.size() / 2;
    // Odd lengths drop the middle draw so both halves match.
    out.emplace_back(chain.begin(), chain.begin() + half);
    out.emplace_back(chain.end() - half, chain.end());
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double autocovariance(const std::vector<double>& v, double mean, std::size_t lag) {
  double acc = 0.0;
  for (std::size_t t = 0; t + lag < v.size(); ++t) acc += (v[t] - mean) * (v[t + lag] - mean);
  return acc / static_cast<double>(v.size());
}

ParameterDiagnostics diagnose(const Chains& raw) {
  ParameterDiagnostics out;
  const Chains z = split_halves(rank_normalize(raw));
  const std::size_t m = z.size();
  const std::size_t n = z.front().size();
  std::vector<double> means(m);
  std::vector<double> vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(z[c]);
    double ss = 0.0;
    for (double v : z[c]) ss += (v - means[c]) * (v - means[c]);
    vars[c] = ss / static_cast<double>(n - 1);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(n) / static_cast<double>(m > 1 ? m - 1 : 1);
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(m);
  const double nd = static_cast<double>(n);

  if (!(w > 1e-300)) {
    out.degenerate = true;
    out.rhat = b > 1e-300 ? std::numeric_limits<double>::infinity() : 1.0;
    out.ess = 0.0;
    return out;
  }
  const double var_plus = (nd - 1.0) / nd * w + b / nd;
  out.rhat = std::sqrt(var_plus / w);

  // Geyer initial monotone sequence on the pooled autocorrelation estimate.
  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < m; ++c) acov += autocovariance(z[c], means[c], lag);
    acov /= static_cast<double>(m);
    // Chain-level autocovariances use divisor n; rescale lag 0 to the n-1 variance.
    return 1.0 - (w * (nd - 1.0) / nd - acov) / var_plus;
  };
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += pair;
  }
  tau = std::max(2.0 * tau - 1.0, 1.0 / std::log10(static_cast<double>(m) * nd));
  out.ess = static_cast<double>(m) * nd / tau;
  return out;
}

}  // namespace

std::vector<ParameterDiagnostics> mcmc_diagnostics(const DrawsMatrix& draws) {
  const Eigen::Index rows = draws.values.rows();
  if (rows < 4) {
    throw Error(ErrorKind::kInsufficientDraws,
                "diagnostics need at least 4 draws, got " + std::to_string(rows));
  }
  std::map<int, std::vector<Eigen::Index>> by_chain;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int id = static_cast<std::size_t>(r) < draws.chain_id.size() ? draws.chain_id[r] : 1;
    by_chain[id].push_back(r);
  }
  // Split halves must be equally long; truncate every chain to the shortest.
  std::size_t len = rows;
  for (const auto& [id, idx] : by_chain) len = std::min(len, idx.size());
  if (len < 4) {
    throw Error(ErrorKind::kInsufficientDraws, "every chain needs at least 4 draws");
  }

  std::vector<ParameterDiagnostics> out;
  for (Eigen::Index j = 0; j < draws.values.cols(); ++j) {
    Chains chains;
    for (const auto& [id, idx] : by_chain) {
      std::vector<double> v;
      for (std::size_t t = 0; t < len; ++t) v.push_back(draws.values(idx[t], j));
      chains.push_back(std::move(v));
    }
    ParameterDiagnostics d = diagnose(chains);
    d.name = static_cast<std::size_t>(j) < draws.names.size() ? draws.names[j]
                                                              : "x" + std::to_string(j + 1);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace svypost
