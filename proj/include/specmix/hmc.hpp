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
 * @file hmc.hpp
 * @brief No-U-Turn Hamiltonian Monte Carlo over an arbitrary differentiable
 * log density, with dual-averaging step-size adaptation, a diagonal metric
 * estimated during warmup, and split-R-hat / ESS diagnostics.
 *
 * Trajectories are built by repeated doubling with slice sampling as in
 * Hoffman & Gelman (2014), Algorithm 6, and stop on a U-turn, a divergence
 * (energy error above 1000) or after max_leapfrog leapfrog steps.
 */

#ifndef SPECMIX_HMC_HPP
#define SPECMIX_HMC_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace specmix {

/// log p(theta) up to a constant; writes d log p / d theta into `grad`.
/// Returns -inf (any gradient) for rejected states.
using LogDensity =
    std::function<double(const Eigen::VectorXd& theta, Eigen::VectorXd& grad)>;

struct HmcConfig {
  std::size_t n_warmup = 500;
  std::size_t n_samples = 1000;
  std::size_t n_chains = 2;
  double target_accept = 0.8;
  std::size_t max_leapfrog = 1024;
  std::uint64_t seed = 42;
  /// MAP restarts used to place the chains before warmup (GP sampling only);
  /// 0 starts each chain from its own Nyquist initialization.
  std::size_t warm_start_restarts = 4;

  /// Throws InputError on zero counts or target_accept outside (0, 1).
  void validate() const;
};

struct HmcChain {
  std::size_t dim = 0;
  std::size_t n_chains = 0;
  std::size_t n_samples = 0;
  /// Post-warmup draws in unconstrained space, chain-major: chain c, draw d
  /// lives at index c * n_samples + d.
  std::vector<Eigen::VectorXd> draws;
  std::vector<double> log_posterior;
  double accept_rate = 0.0;
  std::size_t divergences = 0;
  std::vector<double> step_sizes;  // per chain, after adaptation
  std::vector<double> ess;         // per parameter
  std::vector<double> rhat;        // per parameter, split R-hat
  std::vector<std::string> warnings;

  std::size_t chain_of(std::size_t index) const { return index / n_samples; }
};

/// Runs one NUTS chain per initial point. Chains are independent and are
/// assembled by chain index.
HmcChain run_nuts(const LogDensity& target,
                  std::span<const Eigen::VectorXd> inits,
                  const HmcConfig& config);

/// Split R-hat of one scalar quantity given per-chain sequences of equal
/// length (>= 4).
double split_rhat(std::span<const std::vector<double>> chains);

/// Multi-chain effective sample size (split chains, Geyer initial monotone
/// sequence).
double effective_sample_size(std::span<const std::vector<double>> chains);

}  // namespace specmix

#endif  // SPECMIX_HMC_HPP
