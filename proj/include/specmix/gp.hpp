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
 * @file gp.hpp
 * @brief Exact Gaussian-process regression with a spectral mixture kernel.
 *
 * Models are fitted on standardized data with a zero mean function. All
 * public prediction entry points take and return native units; the
 * `_standardized` variants are used by the estimation code.
 */

#ifndef SPECMIX_GP_HPP
#define SPECMIX_GP_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "specmix/kernels.hpp"
#include "specmix/timeseries.hpp"

namespace specmix {

/// Which variance the predictive intervals describe. Latent is the variance
/// of f(x*) alone; Observation adds the noise variance.
enum class IntervalMode { kLatent, kObservation };

std::string to_string(IntervalMode mode);
IntervalMode interval_mode_from_string(const std::string& text);

inline constexpr double kZ95 = 1.96;

/// Per-query Gaussian predictive marginals in native units.
struct PredictiveDistribution {
  std::vector<double> query_x;
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> lo95;
  std::vector<double> hi95;

  std::size_t size() const { return mean.size(); }
  /// Fills lo95/hi95 from mean and sd.
  void fill_intervals();
};

/// Lower Cholesky factor of `a + jitter * I` for the first jitter in the
/// ladder {0, 1e-10, 1e-8, 1e-6, 1e-4} x mean(diag(a)) that factors cleanly.
struct JitteredCholesky {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

/// Throws NumericalError when even the largest jitter fails. A pivot below
/// 1e-13 x mean diagonal counts as a failure.
JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& a);

/// Value and gradient of the log evidence. Gradient layout (length 3Q + 1):
/// [d log w_1..Q | d mu_1..Q | d log v_1..Q | d log noise].
struct LogEvidence {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Standardized-unit predictive moments (latent variance).
struct StandardizedPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

class GpModel {
 public:
  /// Conditions on standardized inputs. `scaling` is carried along so that
  /// predictions can be reported in native units.
  GpModel(std::vector<double> train_x, std::vector<double> train_y,
          SMKernelParams params, NoiseParam noise,
          ScalingParams scaling = ScalingParams::identity());

  const std::vector<double>& train_x() const { return train_x_; }
  const std::vector<double>& train_y() const { return train_y_; }
  const SMKernelParams& params() const { return params_; }
  const NoiseParam& noise() const { return noise_; }
  const ScalingParams& scaling() const { return scaling_; }
  const Eigen::MatrixXd& chol_lower() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double jitter_used() const { return jitter_; }

  LogEvidence log_marginal_likelihood() const;
  /// Value only; skips the O(N^3) inverse needed for the gradient.
  double log_marginal_likelihood_value() const;

  StandardizedPrediction predict_standardized(
      std::span<const double> query_x) const;

  /// Predictive distribution at native-unit query times. Latent mode matches
  /// the textbook posterior variance; observation mode adds the noise.
  PredictiveDistribution predict(std::span<const double> query_x,
                                 IntervalMode mode = IntervalMode::kLatent) const;

 private:
  std::vector<double> train_x_;
  std::vector<double> train_y_;
  SMKernelParams params_;
  NoiseParam noise_;
  ScalingParams scaling_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

/// Standardizes `train` and conditions on it.
GpModel build_model(const TimeSeries& train, const SMKernelParams& params,
                    const NoiseParam& noise);

/// Clamps tiny negative latent variances to zero (logging a warning) and
/// rejects anything below -1e-10 k(0) with NumericalError.
double checked_variance(double raw, double prior_variance);

/// One draw of y = f(xs) + eps from the prior, f ~ GP(0, k), eps ~ N(0, noise).
std::vector<double> sample_prior(const SMKernelParams& params,
                                 const NoiseParam& noise,
                                 std::span<const double> xs,
                                 std::uint64_t seed);

}  // namespace specmix

#endif  // SPECMIX_GP_HPP
