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
 * @file bayesopt.hpp
 * @brief Expected-improvement Bayesian optimization, and its use for tuning
 * spectral mixture frequencies and scales.
 *
 * The surrogate is an exact GP with an isotropic RBF kernel on inputs
 * normalized to the unit box; its hyperparameters are refit by MAP at every
 * iteration. The first n_init points come from a randomly shifted Sobol
 * sequence, the rest maximize expected improvement over 2048 random box
 * samples followed by a compass-search polish of the best three.
 */

#ifndef SPECMIX_BAYESOPT_HPP
#define SPECMIX_BAYESOPT_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specmix/gp.hpp"
#include "specmix/kernels.hpp"
#include "specmix/timeseries.hpp"

namespace specmix {

/// EI for maximization: (mean - best) Phi(z) + sd phi(z), z = (mean - best) / sd.
double expected_improvement(double mean, double sd, double best);

struct BoxBounds {
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t dim() const { return lower.size(); }
};

struct TuneConfig {
  std::size_t budget = 30;
  std::size_t n_init = 8;
  std::uint64_t seed = 42;
  std::size_t acquisition_samples = 2048;
  std::size_t polish_starts = 3;
  /// Inner MAP over weights and noise per candidate.
  int inner_iterations = 100;

  /// Throws InputError unless budget >= n_init >= 2.
  void validate() const;
};

struct TuneIteration {
  std::vector<double> candidate;
  double objective = 0.0;  // -inf for failed evaluations
  double best_so_far = 0.0;
};

struct TuneTrace {
  std::vector<TuneIteration> iterations;
  std::vector<std::string> dimension_names;
  std::size_t best_index = 0;
  /// Set by tune(): the winning kernel after the full refit.
  std::optional<SMKernelParams> best_params;
  std::optional<NoiseParam> best_noise;

  double best_objective() const { return iterations.at(best_index).objective; }
};

/// Maximizes `objective` over `bounds` using exactly config.budget
/// evaluations. Non-finite objective values count toward the budget but are
/// excluded from the surrogate. Throws NumericalError if all evaluations fail.
TuneTrace bayes_optimize(
    const std::function<double(std::span<const double>)>& objective,
    const BoxBounds& bounds, const TuneConfig& config);

struct TuneResult {
  GpModel model;
  TuneTrace trace;
  /// Penalized log likelihood of the returned model.
  double objective = 0.0;
};

/// Search box in standardized units: mu_q in [0, f_nyq], log v_q in
/// [log(0.1 / x_range), log(10 f_nyq)].
BoxBounds tuning_bounds(const TimeSeries& train, std::size_t num_components);

/// Tunes the 2Q frequencies and scales of a Q-component kernel, profiling
/// weights and noise out by a short inner MAP, then refits weights and noise
/// to convergence at the winning candidate.
TuneResult tune(const TimeSeries& train, std::size_t num_components,
                const TuneConfig& config);

/// CSV `iter,objective,best_so_far,<one column per tuned dimension>`.
void export_trace(const TuneTrace& trace, std::ostream& out);

}  // namespace specmix

#endif  // SPECMIX_BAYESOPT_HPP
