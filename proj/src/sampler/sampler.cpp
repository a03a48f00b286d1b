#include "svypost/sampler/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "svypost/core/error.hpp"
#include "svypost/core/parallel.hpp"
#include "svypost/core/rng.hpp"

namespace svypost {

namespace {

struct Point {
  Eigen::VectorXd q;
  double logp = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad;
};

bool evaluate(const LogDensity& target, const Eigen::VectorXd& q, Point& out) {
  out.q = q;
  out.logp = target.log_density(q);
  if (!std::isfinite(out.logp)) return false;
  out.grad = target.gradient(q);
  return out.grad.allFinite();
}

std::string describe(const Eigen::VectorXd& q) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index i = 0; i < q.size(); ++i) os << (i ? ", " : "") << q[i];
  os << ')';
  return os.str();
}

Eigen::VectorXd standard_normal(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(rng);
  return z;
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Euclidean metric given by its inverse (the position covariance estimate).
class Metric {
 public:
  explicit Metric(Eigen::Index d) { set(Eigen::MatrixXd::Identity(d, d)); }

  void set(const Eigen::MatrixXd& inverse) {
    inverse_ = inverse;
    chol_ = inverse.llt().matrixL();
  }

  // p ~ N(0, inverse^{-1}) via p = L^{-T} z with L L^T = inverse.
  Eigen::VectorXd sample_momentum(Rng& rng) const {
    const Eigen::VectorXd z = standard_normal(inverse_.rows(), rng);
    return chol_.transpose().triangularView<Eigen::Upper>().solve(z);
  }
  Eigen::VectorXd velocity(const Eigen::VectorXd& p) const { return inverse_ * p; }
  double kinetic(const Eigen::VectorXd& p) const { return 0.5 * p.dot(inverse_ * p); }

 private:
  Eigen::MatrixXd inverse_;
  Eigen::MatrixXd chol_;
};

class Welford {
 public:
  explicit Welford(Eigen::Index d) : mean_(Eigen::VectorXd::Zero(d)), m2_(Eigen::MatrixXd::Zero(d, d)) {}
  void add(const Eigen::VectorXd& x) {
    ++n_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_).transpose();
  }
  long count() const { return n_; }
  void reset() {
    n_ = 0;
    mean_.setZero();
    m2_.setZero();
  }
  /// Covariance shrunk toward a small multiple of the identity.
  Eigen::MatrixXd regularized(bool dense) const {
    const double n = static_cast<double>(n_);
    Eigen::MatrixXd cov = m2_ / std::max(1.0, n - 1.0);
    if (!dense) cov = Eigen::MatrixXd(cov.diagonal().asDiagonal());
    cov *= n / (n + 5.0);
    cov.diagonal().array() += 1e-3 * 5.0 / (n + 5.0);
    return 0.5 * (cov + cov.transpose());
  }

 private:
  long n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

class DualAveraging {
 public:
  void restart(double step) {
    mu_ = std::log(10.0 * step);
    h_bar_ = 0.0;
    log_bar_ = 0.0;
    t_ = 0;
  }
  double update(double accept, double target) {
    ++t_;
    const double t = static_cast<double>(t_);
    h_bar_ = (1.0 - 1.0 / (t + kT0)) * h_bar_ + (target - accept) / (t + kT0);
    const double log_step = mu_ - std::sqrt(t) / kGamma * h_bar_;
    const double eta = std::pow(t, -kKappa);
    log_bar_ = eta * log_step + (1.0 - eta) * log_bar_;
    return std::exp(log_step);
  }
  double final_step() const { return std::exp(log_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double mu_ = 0.0;
  double h_bar_ = 0.0;
  double log_bar_ = 0.0;
  long t_ = 0;
};

struct MetricSchedule {
  int first = 0;          // first iteration that feeds the covariance estimate
  std::vector<int> ends;  // iterations (0-based) at whose end the metric is re-estimated
};

MetricSchedule metric_schedule(int warmup) {
  MetricSchedule schedule;
  if (warmup < 20) return schedule;
  int init_buffer = 75;
  int term_buffer = 50;
  int base_window = 25;
  if (init_buffer + term_buffer + base_window > warmup) {
    init_buffer = static_cast<int>(0.15 * warmup);
    term_buffer = static_cast<int>(0.1 * warmup);
    base_window = warmup - init_buffer - term_buffer;
  }
  const int last = warmup - term_buffer;
  schedule.first = init_buffer;
  int start = init_buffer;
  int window = base_window;
  while (start < last) {
    int end = start + window;
    // Stretch the final window rather than leave one too short to use.
    if (end + 2 * window > last) end = last;
    schedule.ends.push_back(end - 1);
    start = end;
    window *= 2;
  }
  return schedule;
}

struct ChainOutput {
  std::vector<Eigen::VectorXd> kept;
  ChainStats stats;
};

class HmcChain {
 public:
  HmcChain(const LogDensity& target, const SamplerControl& control, Point start, Rng rng)
      : target_(target), control_(control), state_(std::move(start)), rng_(std::move(rng)),
        metric_(state_.q.size()) {}

  ChainOutput run() {
    ChainOutput out;
    const Eigen::Index d = state_.q.size();
    step_ = control_.initial_step_size > 0.0 ? control_.initial_step_size : find_step(1.0);
    adapt_.restart(step_);
    const MetricSchedule schedule = metric_schedule(control_.warmup);
    const std::vector<int>& ends = schedule.ends;
    std::size_t next_end = 0;
    Welford window(d);
    double accept_sum = 0.0;
    for (int it = 0; it < control_.iter; ++it) {
      const bool warm = it < control_.warmup;
      bool divergent = false;
      const double accept = transition(divergent);
      if (warm) {
        step_ = adapt_.update(accept, control_.target_accept);
        if (it >= schedule.first && next_end < ends.size()) window.add(state_.q);
        if (next_end < ends.size() && it == ends[next_end]) {
          metric_.set(window.regularized(control_.dense_metric));
          window.reset();
          ++next_end;
          step_ = find_step(step_);
          adapt_.restart(step_);
        }
        if (it == control_.warmup - 1) step_ = adapt_.final_step();
      } else {
        accept_sum += accept;
        if (divergent) ++out.stats.divergences;
        if ((it - control_.warmup) % control_.thin == 0) out.kept.push_back(state_.q);
      }
    }
    const int post = control_.iter - control_.warmup;
    out.stats.mean_accept = post > 0 ? accept_sum / post : 0.0;
    out.stats.step_size = step_;
    out.stats.gradient_evaluations = gradients_;
    return out;
  }

 private:
  // One leapfrog trajectory from the current state; returns the acceptance probability.
  double transition(bool& divergent) {
    const Eigen::VectorXd p0 = metric_.sample_momentum(rng_);
    const double h0 = -state_.logp + metric_.kinetic(p0);
    const double jitter = 0.5 + uniform01(rng_);
    const int steps = std::clamp(
        static_cast<int>(std::ceil(control_.integration_time * jitter / step_)), 1,
        control_.max_leapfrog);
    Point proposal;
    Eigen::VectorXd p = p0;
    const double h1 = trajectory(step_, steps, p, proposal);
    divergent = !std::isfinite(h1) || h1 - h0 > 1000.0;
    const double accept = divergent ? 0.0 : std::min(1.0, std::exp(h0 - h1));
    if (!divergent && uniform01(rng_) < accept) state_ = std::move(proposal);
    return accept;
  }

  // Returns the final Hamiltonian, or +inf if the trajectory left the support.
  double trajectory(double step, int steps, Eigen::VectorXd& p, Point& end) {
    Eigen::VectorXd q = state_.q;
    const Eigen::VectorXd* grad = &state_.grad;
    p += 0.5 * step * *grad;
    for (int s = 0; s < steps; ++s) {
      q += step * metric_.velocity(p);
      ++gradients_;
      if (!evaluate(target_, q, end)) return std::numeric_limits<double>::infinity();
      grad = &end.grad;
      if (s + 1 < steps) p += step * *grad;
    }
    p += 0.5 * step * *grad;
    return -end.logp + metric_.kinetic(p);
  }

  double find_step(double step) {
    auto log_ratio = [&](double eps) {
      Eigen::VectorXd p = metric_.sample_momentum(rng_);
      const double h0 = -state_.logp + metric_.kinetic(p);
      Point end;
      const double h1 = trajectory(eps, 1, p, end);
      const double r = h0 - h1;
      return std::isfinite(r) ? r : -std::numeric_limits<double>::infinity();
    };
    const double log_half = std::log(0.5);
    const int direction = log_ratio(step) > log_half ? 1 : -1;
    for (int i = 0; i < 60; ++i) {
      const double next = direction == 1 ? step * 2.0 : step * 0.5;
      if (next < 1e-12 || next > 1e6) break;
      const double r = log_ratio(next);
      step = next;
      if ((direction == 1 && !(r > log_half)) || (direction == -1 && r > log_half)) break;
    }
    return step;
  }

  const LogDensity& target_;
  const SamplerControl& control_;
  Point state_;
  Rng rng_;
  Metric metric_;
  DualAveraging adapt_;
  double step_ = 1.0;
  long long gradients_ = 0;
};

ChainOutput run_rwm_chain(const LogDensity& target, const SamplerControl& control, Point state,
                          Rng rng) {
  ChainOutput out;
  const Eigen::Index d = state.q.size();
  Eigen::MatrixXd proposal_chol = Eigen::MatrixXd::Identity(d, d);
  double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d))) + std::log(0.1);
  Welford history(d);
  double accept_sum = 0.0;
  const int adapt_from = control.warmup / 5;
  for (int it = 0; it < control.iter; ++it) {
    const bool warm = it < control.warmup;
    const Eigen::VectorXd z = standard_normal(d, rng);
    const Eigen::VectorXd candidate = state.q + std::exp(log_scale) * (proposal_chol * z);
    const double logp = target.log_density(candidate);
    double accept = 0.0;
    if (std::isfinite(logp)) accept = std::min(1.0, std::exp(logp - state.logp));
    if (uniform01(rng) < accept) {
      state.q = candidate;
      state.logp = logp;
    }
    if (warm) {
      log_scale += (accept - 0.234) / std::pow(static_cast<double>(it + 1), 0.6);
      if (it >= adapt_from) history.add(state.q);
      if (history.count() > 2 * d + 10 && (it + 1) % 50 == 0) {
        Eigen::LLT<Eigen::MatrixXd> llt(history.regularized(control.dense_metric));
        if (llt.info() == Eigen::Success) {
          proposal_chol = llt.matrixL();
          log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
        }
      }
    } else {
      accept_sum += accept;
      if ((it - control.warmup) % control.thin == 0) out.kept.push_back(state.q);
    }
  }
  const int post = control.iter - control.warmup;
  out.stats.mean_accept = post > 0 ? accept_sum / post : 0.0;
  out.stats.step_size = std::exp(log_scale);
  return out;
}

Point initialize(const LogDensity& target, const Eigen::VectorXd& center, double jitter,
                 Rng& rng, int chain) {
  std::uniform_real_distribution<double> offset(-jitter, jitter);
  Point point;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::VectorXd q = center;
    for (Eigen::Index i = 0; i < q.size(); ++i) q[i] += jitter > 0.0 ? offset(rng) : 0.0;
    point.q = q;
    point.logp = target.log_density(q);
    if (!std::isfinite(point.logp)) continue;
    point.grad = target.gradient(q);
    if (!point.grad.allFinite()) {
      throw Error(ErrorKind::kNumerical, "chain " + std::to_string(chain + 1) +
                                             ": non-finite gradient at theta = " + describe(q));
    }
    return point;
  }
  throw Error(ErrorKind::kInitialization,
              "chain " + std::to_string(chain + 1) +
                  ": no finite log density found after 100 jittered starts around " +
                  describe(center));
}

}  // namespace

std::string_view to_string(SamplerAlgorithm algorithm) {
  return algorithm == SamplerAlgorithm::kHmc ? "hmc" : "rwm";
}

SamplerAlgorithm parse_sampler_algorithm(std::string_view text) {
  if (text == "hmc") return SamplerAlgorithm::kHmc;
  if (text == "rwm" || text == "metropolis") return SamplerAlgorithm::kRwm;
  throw Error(ErrorKind::kConfiguration,
              "unknown sampler algorithm '" + std::string(text) + "' (expected hmc or rwm)");
}

void SamplerControl::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::kConfiguration, what); };
  if (chains < 1) bad("sampler.chains must be >= 1");
  if (iter < 1) bad("sampler.iter must be >= 1");
  if (warmup < 0 || warmup >= iter) bad("sampler.warmup must satisfy 0 <= warmup < iter");
  if (thin < 1) bad("sampler.thin must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) bad("sampler.target_accept must be in (0, 1)");
  if (initial_step_size < 0.0) bad("sampler.step_size must be >= 0");
  if (!(integration_time > 0.0)) bad("sampler.integration_time must be positive");
  if (max_leapfrog < 1) bad("sampler.max_leapfrog must be >= 1");
  if (init_jitter < 0.0) bad("sampler.init_jitter must be >= 0");
}

int SamplerControl::kept_per_chain() const { return (iter - warmup + thin - 1) / thin; }

SampleResult sample_pseudo_posterior(const LogDensity& target, const SamplerControl& control,
                                     const Eigen::VectorXd& init, std::vector<std::string> names) {
  control.validate();
  const auto d = static_cast<Eigen::Index>(target.dimension());
  const Eigen::VectorXd center = control.init.value_or(init);
  if (center.size() != d) {
    throw Error(ErrorKind::kInvalidArgument, "initial point has length " +
                                                 std::to_string(center.size()) + ", target has " +
                                                 std::to_string(d));
  }
  if (names.empty()) {
    for (Eigen::Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  }

  std::vector<ChainOutput> outputs(static_cast<std::size_t>(control.chains));
  parallel_for(outputs.size(), control.threads, [&](std::size_t c) {
    const std::uint64_t seed = substream_seed(control.seed, c);
    Rng rng(seed);
    Point start = initialize(target, center, control.init_jitter, rng, static_cast<int>(c));
    if (control.algorithm == SamplerAlgorithm::kHmc) {
      outputs[c] = HmcChain(target, control, std::move(start), std::move(rng)).run();
    } else {
      outputs[c] = run_rwm_chain(target, control, std::move(start), std::move(rng));
    }
    outputs[c].stats.chain = static_cast<int>(c) + 1;
    outputs[c].stats.seed = seed;
  });

  SampleResult result;
  const Eigen::Index per_chain = control.kept_per_chain();
  result.draws.values.resize(per_chain * control.chains, d);
  result.draws.names = std::move(names);
  Eigen::Index row = 0;
  for (const auto& out : outputs) {
    for (const auto& q : out.kept) {
      result.draws.values.row(row++) = q.transpose();
      result.draws.chain_id.push_back(out.stats.chain);
    }
    result.chains.push_back(out.stats);
  }
  return result;
}

SampleResult sample_pseudo_posterior(const ModelFamily& family, const SamplerControl& control) {
  return sample_pseudo_posterior(family, control, family.default_init(),
                                 family.space().unconstrained_names());
}

}  // namespace svypost
