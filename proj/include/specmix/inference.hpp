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

/**
 * @file inference.hpp
 * @brief Hyperparameter estimation for the spectral mixture GP: priors, the
 * unconstrained parameterization, multi-restart MAP, NUTS posterior sampling
 * and posterior-averaged prediction.
 *
 * Unconstrained vector layout (length 3Q + 1):
 *   [log w_1..Q | logit(mu_1..Q / f_nyq) | log v_1..Q | log noise]
 * Frequencies pass through a scaled sigmoid, so every unconstrained vector
 * maps to a frequency inside [0, f_nyq].
 */

#ifndef SPECMIX_INFERENCE_HPP
#define SPECMIX_INFERENCE_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "specmix/gp.hpp"
#include "specmix/hmc.hpp"
#include "specmix/kernels.hpp"
#include "specmix/optimize.hpp"
#include "specmix/timeseries.hpp"

namespace specmix {

/// Weakly informative, data-scaled priors (standardized units):
///   log w_q   ~ Normal(log(var(y) / Q), 1)
///   mu_q      ~ Uniform(0, f_nyq)
///   log v_q   ~ Normal(log(2 / x_range), 1)
///   log noise ~ Normal(log(0.1 var(y)), 1)
struct HyperPrior {
  double log_weight_mean = 0.0;
  double log_weight_sd = 1.0;
  double nyquist = 0.5;
  double log_scale_mean = 0.0;
  double log_scale_sd = 1.0;
  double log_noise_mean = 0.0;
  double log_noise_sd = 1.0;

  static HyperPrior for_data(std::span<const double> x, std::span<const double> y,
                             std::size_t num_components);

  /// Log density over (log w, mu, log v, log noise); -inf when a frequency
  /// leaves [0, f_nyq]. `grad` (optional, length 3Q + 1) receives the
  /// gradient in the same coordinates.
  double log_density(const SMKernelParams& params, const NoiseParam& noise,
                     Eigen::VectorXd* grad = nullptr) const;
};

/// The hyperparameter posterior for one training series. Holds the
/// standardized data and maps between constrained and unconstrained
/// coordinates.
class HyperPosterior {
 public:
  HyperPosterior(const TimeSeries& train, std::size_t num_components);

  std::size_t num_components() const { return num_components_; }
  std::size_t dim() const { return 3 * num_components_ + 1; }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }
  const ScalingParams& scaling() const { return scaling_; }
  const HyperPrior& prior() const { return prior_; }
  double nyquist() const { return prior_.nyquist; }
  double x_range() const { return x_range_; }

  Eigen::VectorXd to_unconstrained(const SMKernelParams& params,
                                   const NoiseParam& noise) const;
  std::pair<SMKernelParams, NoiseParam> to_constrained(
      const Eigen::VectorXd& theta) const;

  /// log evidence + log prior at constrained parameters. Gradient (optional)
  /// over (log w, mu, log v, log noise). Returns -inf when the covariance
  /// cannot be factored.
  double penalized_log_likelihood(const SMKernelParams& params,
                                  const NoiseParam& noise,
                                  Eigen::VectorXd* grad = nullptr) const;

  /// MAP objective in unconstrained coordinates (no Jacobian term).
  double map_objective(const Eigen::VectorXd& theta,
                       Eigen::VectorXd& grad) const;

  /// -(log evidence + log prior + log |Jacobian|); +inf with zero gradient
  /// for states whose covariance cannot be factored.
  double neg_log_posterior(const Eigen::VectorXd& theta,
                           Eigen::VectorXd& grad) const;

  GpModel model_at(const SMKernelParams& params, const NoiseParam& noise) const;
  GpModel model_at(const Eigen::VectorXd& theta) const;

 private:
  std::size_t num_components_;
  std::vector<double> x_;
  std::vector<double> y_;
  ScalingParams scaling_;
  HyperPrior prior_;
  double x_range_ = 1.0;
};

/// Random starting point: frequencies ~ U(0, f_nyq), scales ~
/// |Normal(0, (2 / x_range)^2)| floored at 1e-6, weights var(y) / Q, noise
/// 0.1 var(y). Standardized units; deterministic per seed.
std::pair<SMKernelParams, NoiseParam> init_hyperparams(const TimeSeries& train,
                                                       std::size_t num_components,
                                                       std::uint64_t seed);

struct MapFit {
  GpModel model;
  double objective = 0.0;          // log evidence + log prior at the optimum
  double initial_objective = 0.0;  // same, at the winning restart's start
  std::size_t best_restart = 0;
  std::vector<double> restart_objectives;  // -inf for failed restarts
};

struct MapOptions {
  std::size_t restarts = 10;
  std::uint64_t seed = 42;
  MinimizeOptions optimizer = {};
};

/// Restart r starts from init_hyperparams(train, Q, derive_seed(seed, r)), so
/// restart 0 uses `seed` itself. Throws NumericalError if every restart
/// fails to factor its covariance.
MapFit map_estimate(const TimeSeries& train, std::size_t num_components,
                    const MapOptions& options);
MapFit map_estimate(const TimeSeries& train, std::size_t num_components,
                    std::size_t restarts, std::uint64_t seed);

double neg_log_posterior(const Eigen::VectorXd& theta, const TimeSeries& train,
                         Eigen::VectorXd& grad);

/// NUTS over the unconstrained hyperparameters. Chains start from the best
/// MAP point (config.warm_start_restarts > 0) plus a small seeded
/// perturbation, or from per-chain Nyquist initializations otherwise.
HmcChain hmc_sample(const TimeSeries& train, std::size_t num_components,
                    const HmcConfig& config);

/// Up to `max_draws` evenly spaced draw indices.
std::vector<std::size_t> thin_indices(std::size_t n, std::size_t max_draws = 200);

/// Constrained hyperparameters of the thinned draws.
std::vector<std::pair<SMKernelParams, NoiseParam>> thinned_draws(
    const HmcChain& chain, const TimeSeries& train, std::size_t max_draws = 200);

/// Gaussian summary of the posterior mixture: mean of per-draw means and
/// variance by the law of total variance, in native units.
PredictiveDistribution predictive_from_draws(
    std::span<const std::pair<SMKernelParams, NoiseParam>> draws,
    const TimeSeries& train, std::span<const double> query_x,
    IntervalMode mode = IntervalMode::kLatent);

PredictiveDistribution predictive_from_chain(
    const HmcChain& chain, const TimeSeries& train,
    std::span<const double> query_x, IntervalMode mode = IntervalMode::kLatent);

/// CSV with columns chain,draw,log_posterior,w_*,mu_*,v_*,noise_var in
/// constrained standardized units.
void write_chain_csv(const HmcChain& chain, const TimeSeries& train,
                     std::ostream& out);

}  // namespace specmix

#endif  // SPECMIX_INFERENCE_HPP
