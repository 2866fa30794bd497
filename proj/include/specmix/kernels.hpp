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
 * @file kernels.hpp
 * @brief Spectral mixture covariance, its spectral density, kernel matrices
 * and analytic hyperparameter gradients.
 *
 * For Q components with weights w_q, frequencies mu_q and spectral scales
 * v_q the covariance at lag tau is
 *
 *   k(tau) = sum_q w_q exp(-2 pi^2 tau^2 v_q^2) cos(2 pi tau mu_q)
 *
 * which is the Fourier dual of the symmetrized Gaussian mixture density
 *
 *   S(s) = sum_q w_q [N(s; mu_q, v_q^2) + N(-s; mu_q, v_q^2)] / 2.
 *
 * v_q is the standard deviation of the spectral Gaussian; the time-domain
 * length scale of component q is 1 / (2 pi v_q).
 */

#ifndef SPECMIX_KERNELS_HPP
#define SPECMIX_KERNELS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace specmix {

inline constexpr double kPi = 3.14159265358979323846;

/// Hyperparameters of a Q-component spectral mixture kernel.
class SMKernelParams {
 public:
  /// Throws std::invalid_argument unless Q >= 1, the three lists have equal
  /// length, every weight and scale is positive and finite, and every
  /// frequency is finite and nonnegative.
  SMKernelParams(std::vector<double> weights, std::vector<double> frequencies,
                 std::vector<double> scales);

  std::size_t num_components() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& frequencies() const { return frequencies_; }
  const std::vector<double>& scales() const { return scales_; }

  /// k(0) = sum of weights.
  double total_weight() const;

  friend bool operator==(const SMKernelParams&, const SMKernelParams&) = default;

 private:
  std::vector<double> weights_;
  std::vector<double> frequencies_;
  std::vector<double> scales_;
};

/// Observation-noise variance sigma_eps^2 (> 0).
class NoiseParam {
 public:
  explicit NoiseParam(double variance);
  double variance() const { return variance_; }
  friend bool operator==(const NoiseParam&, const NoiseParam&) = default;

 private:
  double variance_;
};

/// dk/dtheta at one lag; theta = (log w_q, mu_q, log v_q).
struct SMKernelGradient {
  std::vector<double> d_log_weight;
  std::vector<double> d_frequency;
  std::vector<double> d_log_scale;
};

double sm_kernel(const SMKernelParams& params, double tau);

SMKernelGradient sm_kernel_grad(const SMKernelParams& params, double tau);

/// Writes the gradient into a preallocated buffer of length 3Q laid out as
/// [d log w | d mu | d log v]; avoids allocation in inner loops.
void sm_kernel_grad(const SMKernelParams& params, double tau,
                    std::span<double> out);

double spectral_density(const SMKernelParams& params, double s);

/// Gram matrix K(xs, xs) + noise * I.
Eigen::MatrixXd kernel_matrix(const SMKernelParams& params,
                              const NoiseParam& noise,
                              std::span<const double> xs);

/// Noise-free Gram matrix K(xs, xs).
Eigen::MatrixXd kernel_matrix(const SMKernelParams& params,
                              std::span<const double> xs);

/// Cross-covariance K(rows, cols).
Eigen::MatrixXd cross_kernel_matrix(const SMKernelParams& params,
                                    std::span<const double> rows,
                                    std::span<const double> cols);

double rbf_kernel(double lengthscale, double variance, double tau);

}  // namespace specmix

#endif  // SPECMIX_KERNELS_HPP
