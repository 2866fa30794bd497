// Copyright 2026 The specmix Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "specmix/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "specmix/error.hpp"
#include "specmix/random.hpp"

namespace specmix {

void HmcConfig::validate() const {
  if (n_warmup < 1 || n_samples < 1 || n_chains < 1 || max_leapfrog < 1) {
    throw InputError("HMC counts (warmup, samples, chains, max_leapfrog) "
                     "must all be at least 1");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw InputError(fmt::format(
        "HMC target_accept must lie in (0, 1), got {}", target_accept));
  }
}

namespace {

constexpr double kMaxEnergyError = 1000.0;

struct PhasePoint {
  Eigen::VectorXd theta;
  Eigen::VectorXd momentum;
  Eigen::VectorXd grad;
  double log_density = -std::numeric_limits<double>::infinity();
};

struct Subtree {
  PhasePoint minus;
  PhasePoint plus;
  PhasePoint proposal;
  double n_valid = 0.0;  // points inside the slice
  bool keep_going = true;
  bool divergent = false;
  double sum_accept = 0.0;
  double n_accept = 0.0;
  std::size_t n_leapfrog = 0;
};

// Dual averaging of log step size toward a target acceptance statistic.
class StepSizeAdapter {
 public:
  StepSizeAdapter(double step, double target) : target_(target) {
    restart(step);
  }

  void restart(double step) {
    mu_ = std::log(10.0 * step);
    log_step_ = std::log(step);
    log_step_bar_ = 0.0;
    h_bar_ = 0.0;
    m_ = 0;
  }

  void update(double accept_stat) {
    if (!std::isfinite(accept_stat)) accept_stat = 0.0;
    ++m_;
    const double m = static_cast<double>(m_);
    const double eta = 1.0 / (m + kT0);
    h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept_stat);
    log_step_ = mu_ - std::sqrt(m) / kGamma * h_bar_;
    const double weight = std::pow(m, -kKappa);
    log_step_bar_ = weight * log_step_ + (1.0 - weight) * log_step_bar_;
  }

  double current() const { return std::exp(log_step_); }
  double averaged() const {
    return m_ == 0 ? current() : std::exp(log_step_bar_);
  }

 private:
  static constexpr double kT0 = 10.0;
  static constexpr double kGamma = 0.05;
  static constexpr double kKappa = 0.75;
  double target_;
  double mu_ = 0.0;
  double log_step_ = 0.0;
  double log_step_bar_ = 0.0;
  double h_bar_ = 0.0;
  std::size_t m_ = 0;
};

class NutsChain {
 public:
  NutsChain(const LogDensity& target, const HmcConfig& config,
            std::uint64_t seed)
      : target_(target), config_(config), rng_(seed) {
    max_depth_ = 0;
    while ((std::size_t{1} << (max_depth_ + 1)) <= config_.max_leapfrog) {
      ++max_depth_;
    }
  }

  struct Result {
    std::vector<Eigen::VectorXd> draws;
    std::vector<double> log_density;
    double accept_sum = 0.0;
    std::size_t divergences = 0;
    double step_size = 0.0;
  };

  Result run(const Eigen::VectorXd& init) {
    const auto dim = init.size();
    inv_metric_ = Eigen::VectorXd::Ones(dim);

    PhasePoint current;
    current.theta = init;
    current.grad = Eigen::VectorXd::Zero(dim);
    current.log_density = target_(current.theta, current.grad);
    if (!std::isfinite(current.log_density)) {
      throw NumericalError("HMC initial point has zero posterior density");
    }

    double step = find_reasonable_step(current);
    StepSizeAdapter adapter(step, config_.target_accept);

    const std::size_t warmup = config_.n_warmup;
    const bool adapt_metric = warmup >= 20;
    const std::size_t window_begin = warmup / 2;
    const std::size_t window_end = warmup * 85 / 100;
    Eigen::VectorXd welford_mean = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd welford_m2 = Eigen::VectorXd::Zero(dim);
    std::size_t welford_n = 0;

    Result result;
    result.draws.reserve(config_.n_samples);
    result.log_density.reserve(config_.n_samples);

    const std::size_t total = warmup + config_.n_samples;
    for (std::size_t iter = 0; iter < total; ++iter) {
      const bool warming = iter < warmup;
      if (warming && adapt_metric && iter == window_end && welford_n > 2) {
        const double n = static_cast<double>(welford_n);
        const Eigen::VectorXd var = welford_m2 / (n - 1.0);
        inv_metric_ = (n / (n + 5.0)) * var.array() + 1e-3 * 5.0 / (n + 5.0);
        step = find_reasonable_step(current);
        adapter.restart(step);
      }

      const auto transition = transition_from(current, step);
      current = transition.point;

      if (warming) {
        adapter.update(transition.accept_stat);
        step = adapter.current();
        if (adapt_metric && iter >= window_begin && iter < window_end) {
          ++welford_n;
          const Eigen::VectorXd delta = current.theta - welford_mean;
          welford_mean += delta / static_cast<double>(welford_n);
          welford_m2 += delta.cwiseProduct(current.theta - welford_mean);
        }
        if (iter + 1 == warmup) step = adapter.averaged();
      } else {
        result.draws.push_back(current.theta);
        result.log_density.push_back(current.log_density);
        result.accept_sum += transition.accept_stat;
        if (transition.divergent) ++result.divergences;
      }
    }
    result.step_size = step;
    return result;
  }

 private:
  struct Transition {
    PhasePoint point;
    double accept_stat = 0.0;
    bool divergent = false;
  };

  double kinetic(const Eigen::VectorXd& p) const {
    return 0.5 * p.cwiseProduct(p).dot(inv_metric_);
  }

  double joint(const PhasePoint& z) const {
    return z.log_density - kinetic(z.momentum);
  }

  PhasePoint leapfrog(const PhasePoint& z, double eps) const {
    PhasePoint out;
    out.momentum = z.momentum + 0.5 * eps * z.grad;
    out.theta = z.theta + eps * inv_metric_.cwiseProduct(out.momentum);
    out.grad.resize(z.theta.size());
    out.log_density = target_(out.theta, out.grad);
    if (!std::isfinite(out.log_density) || !out.grad.allFinite()) {
      out.log_density = -std::numeric_limits<double>::infinity();
      out.grad.setZero();
      return out;
    }
    out.momentum += 0.5 * eps * out.grad;
    return out;
  }

  Eigen::VectorXd draw_momentum() {
    Eigen::VectorXd p(inv_metric_.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
    }
    return p;
  }

  double find_reasonable_step(const PhasePoint& start) {
    PhasePoint z = start;
    z.momentum = draw_momentum();
    const double h0 = joint(z);
    double eps = 1.0;
    auto log_ratio = [&](double e) {
      const double h = joint(leapfrog(z, e));
      return std::isfinite(h) ? h - h0 : -std::numeric_limits<double>::infinity();
    };
    double ratio = log_ratio(eps);
    const double direction = ratio > std::log(0.5) ? 1.0 : -1.0;
    for (int i = 0; i < 100; ++i) {
      if (direction * ratio <= -direction * std::log(2.0)) break;
      const double next = eps * std::pow(2.0, direction);
      if (next < 1e-10 || next > 1e3) break;
      eps = next;
      ratio = log_ratio(eps);
    }
    return eps;
  }

  static bool no_u_turn(const PhasePoint& minus, const PhasePoint& plus,
                        const Eigen::VectorXd& inv_metric) {
    const Eigen::VectorXd span = plus.theta - minus.theta;
    return span.dot(inv_metric.cwiseProduct(minus.momentum)) >= 0.0 &&
           span.dot(inv_metric.cwiseProduct(plus.momentum)) >= 0.0;
  }

  Subtree build_tree(const PhasePoint& z, double log_slice, int direction,
                     int depth, double eps, double joint0) {
    if (depth == 0) {
      Subtree t;
      PhasePoint next = leapfrog(z, direction * eps);
      const double h = joint(next);
      const bool finite = std::isfinite(h);
      t.n_valid = finite && log_slice <= h ? 1.0 : 0.0;
      t.divergent = !finite || log_slice >= h + kMaxEnergyError;
      t.keep_going = !t.divergent;
      t.sum_accept = finite ? std::min(1.0, std::exp(h - joint0)) : 0.0;
      t.n_accept = 1.0;
      t.n_leapfrog = 1;
      t.minus = next;
      t.plus = next;
      t.proposal = std::move(next);
      return t;
    }
    Subtree t = build_tree(z, log_slice, direction, depth - 1, eps, joint0);
    if (!t.keep_going) return t;
    const PhasePoint& edge = direction < 0 ? t.minus : t.plus;
    Subtree u = build_tree(edge, log_slice, direction, depth - 1, eps, joint0);
    if (direction < 0) {
      t.minus = std::move(u.minus);
    } else {
      t.plus = std::move(u.plus);
    }
    const double total = t.n_valid + u.n_valid;
    if (u.n_valid > 0.0 && uniform_(rng_) < u.n_valid / total) {
      t.proposal = std::move(u.proposal);
    }
    t.n_valid = total;
    t.sum_accept += u.sum_accept;
    t.n_accept += u.n_accept;
    t.n_leapfrog += u.n_leapfrog;
    t.divergent = t.divergent || u.divergent;
    t.keep_going = u.keep_going && no_u_turn(t.minus, t.plus, inv_metric_);
    return t;
  }

  Transition transition_from(const PhasePoint& start, double eps) {
    PhasePoint z = start;
    z.momentum = draw_momentum();
    const double joint0 = joint(z);
    std::exponential_distribution<double> exponential(1.0);
    const double log_slice = joint0 - exponential(rng_);

    PhasePoint minus = z;
    PhasePoint plus = z;
    Transition out;
    out.point = start;
    double n_valid = 1.0;
    double sum_accept = 0.0;
    double n_accept = 0.0;
    std::size_t leapfrogs = 0;

    for (int depth = 0; depth <= max_depth_; ++depth) {
      const int direction = uniform_(rng_) < 0.5 ? -1 : 1;
      const PhasePoint& edge = direction < 0 ? minus : plus;
      Subtree t = build_tree(edge, log_slice, direction, depth, eps, joint0);
      if (direction < 0) {
        minus = t.minus;
      } else {
        plus = t.plus;
      }
      sum_accept += t.sum_accept;
      n_accept += t.n_accept;
      leapfrogs += t.n_leapfrog;
      if (t.divergent) out.divergent = true;
      if (t.keep_going && t.n_valid > 0.0 &&
          uniform_(rng_) < std::min(1.0, t.n_valid / n_valid)) {
        out.point = t.proposal;
      }
      n_valid += t.n_valid;
      if (!t.keep_going || !no_u_turn(minus, plus, inv_metric_)) break;
      if (leapfrogs * 2 > config_.max_leapfrog) break;
    }
    out.point.momentum.resize(0);
    out.accept_stat = n_accept > 0.0 ? sum_accept / n_accept : 0.0;
    return out;
  }

  const LogDensity& target_;
  const HmcConfig& config_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  Eigen::VectorXd inv_metric_;
  int max_depth_ = 10;
};

// Splits each chain in half (dropping the middle draw of odd chains).
std::vector<std::vector<double>> split_chains(
    std::span<const std::vector<double>> chains) {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

struct ChainMoments {
  double within = 0.0;    // W
  double var_plus = 0.0;  // pooled posterior variance estimate
  double between = 0.0;   // B
  std::vector<double> means;
};

ChainMoments moments(const std::vector<std::vector<double>>& seqs) {
  const double m = static_cast<double>(seqs.size());
  const double n = static_cast<double>(seqs.front().size());
  ChainMoments out;
  double grand = 0.0;
  for (const auto& s : seqs) {
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= n;
    out.means.push_back(mean);
    grand += mean;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    out.within += ss / (n - 1.0);
  }
  grand /= m;
  out.within /= m;
  for (double mean : out.means) out.between += (mean - grand) * (mean - grand);
  out.between *= n / (m - 1.0);
  out.var_plus = (n - 1.0) / n * out.within + out.between / n;
  return out;
}

}  // namespace

double split_rhat(std::span<const std::vector<double>> chains) {
  const auto seqs = split_chains(chains);
  if (seqs.empty() || seqs.front().size() < 2) {
    throw InputError("split R-hat needs chains of at least 4 draws");
  }
  const auto mom = moments(seqs);
  if (mom.within <= 0.0) {
    return mom.between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return std::sqrt(mom.var_plus / mom.within);
}

double effective_sample_size(std::span<const std::vector<double>> chains) {
  const auto seqs = split_chains(chains);
  if (seqs.empty() || seqs.front().size() < 2) {
    throw InputError("ESS needs chains of at least 4 draws");
  }
  const auto mom = moments(seqs);
  const std::size_t n = seqs.front().size();
  const double total = static_cast<double>(n * seqs.size());
  if (mom.var_plus <= 0.0) return total;

  // rho_t = 1 - (W - mean autocovariance at lag t) / var_plus
  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t j = 0; j < seqs.size(); ++j) {
      const auto& s = seqs[j];
      double sum = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) {
        sum += (s[i] - mom.means[j]) * (s[i + lag] - mom.means[j]);
      }
      acov += sum / static_cast<double>(n);
    }
    acov /= static_cast<double>(seqs.size());
    const double w_biased =
        mom.within * (static_cast<double>(n) - 1.0) / static_cast<double>(n);
    return 1.0 - (w_biased - acov) / mom.var_plus;
  };

  double tau = -1.0;
  double previous_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, previous_pair);
    previous_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

HmcChain run_nuts(const LogDensity& target,
                  std::span<const Eigen::VectorXd> inits,
                  const HmcConfig& config) {
  config.validate();
  if (inits.size() != config.n_chains) {
    throw InputError(fmt::format("expected {} initial points, got {}",
                                 config.n_chains, inits.size()));
  }
  HmcChain out;
  out.dim = static_cast<std::size_t>(inits.front().size());
  out.n_chains = config.n_chains;
  out.n_samples = config.n_samples;
  double accept_sum = 0.0;
  for (std::size_t c = 0; c < config.n_chains; ++c) {
    NutsChain chain(target, config, derive_seed(config.seed, 1000 + c));
    auto result = chain.run(inits[c]);
    accept_sum += result.accept_sum;
    out.divergences += result.divergences;
    out.step_sizes.push_back(result.step_size);
    for (std::size_t d = 0; d < result.draws.size(); ++d) {
      out.draws.push_back(std::move(result.draws[d]));
      out.log_posterior.push_back(result.log_density[d]);
    }
  }
  const double n_total = static_cast<double>(out.draws.size());
  out.accept_rate = accept_sum / n_total;

  if (out.divergences == out.draws.size()) {
    throw NumericalError("every post-warmup HMC transition diverged");
  }
  if (static_cast<double>(out.divergences) > 0.2 * n_total) {
    out.warnings.push_back(fmt::format(
        "{} of {} post-warmup transitions diverged", out.divergences,
        out.draws.size()));
    spdlog::warn("{}", out.warnings.back());
  }

  if (config.n_samples >= 4) {
    for (std::size_t k = 0; k < out.dim; ++k) {
      std::vector<std::vector<double>> per_chain(config.n_chains);
      for (std::size_t i = 0; i < out.draws.size(); ++i) {
        per_chain[out.chain_of(i)].push_back(
            out.draws[i][static_cast<Eigen::Index>(k)]);
      }
      out.rhat.push_back(split_rhat(per_chain));
      out.ess.push_back(effective_sample_size(per_chain));
    }
  }
  return out;
}

}  // namespace specmix
