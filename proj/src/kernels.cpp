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

#include "specmix/kernels.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace specmix {

SMKernelParams::SMKernelParams(std::vector<double> weights,
                               std::vector<double> frequencies,
                               std::vector<double> scales)
    : weights_(std::move(weights)),
      frequencies_(std::move(frequencies)),
      scales_(std::move(scales)) {
  const std::size_t q = weights_.size();
  if (q == 0) throw std::invalid_argument("spectral mixture needs Q >= 1");
  if (frequencies_.size() != q || scales_.size() != q) {
    throw std::invalid_argument(fmt::format(
        "spectral mixture lists differ in length ({} weights, {} "
        "frequencies, {} scales)",
        q, frequencies_.size(), scales_.size()));
  }
  for (std::size_t i = 0; i < q; ++i) {
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
      throw std::invalid_argument(
          fmt::format("weight {} must be positive, got {}", i + 1, weights_[i]));
    }
    if (!(frequencies_[i] >= 0.0) || !std::isfinite(frequencies_[i])) {
      throw std::invalid_argument(fmt::format(
          "frequency {} must be nonnegative, got {}", i + 1, frequencies_[i]));
    }
    if (!(scales_[i] > 0.0) || !std::isfinite(scales_[i])) {
      throw std::invalid_argument(
          fmt::format("scale {} must be positive, got {}", i + 1, scales_[i]));
    }
  }
}

double SMKernelParams::total_weight() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

NoiseParam::NoiseParam(double variance) : variance_(variance) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument(
        fmt::format("noise variance must be positive, got {}", variance));
  }
}

double sm_kernel(const SMKernelParams& params, double tau) {
  const double tau2 = tau * tau;
  const double abs_tau = std::fabs(tau);
  const auto& w = params.weights();
  const auto& mu = params.frequencies();
  const auto& v = params.scales();
  double k = 0.0;
  for (std::size_t q = 0; q < w.size(); ++q) {
    k += w[q] * std::exp(-2.0 * kPi * kPi * tau2 * v[q] * v[q]) *
         std::cos(2.0 * kPi * abs_tau * mu[q]);
  }
  return k;
}

void sm_kernel_grad(const SMKernelParams& params, double tau,
                    std::span<double> out) {
  const std::size_t nq = params.num_components();
  const double tau2 = tau * tau;
  const auto& w = params.weights();
  const auto& mu = params.frequencies();
  const auto& v = params.scales();
  for (std::size_t q = 0; q < nq; ++q) {
    const double envelope = std::exp(-2.0 * kPi * kPi * tau2 * v[q] * v[q]);
    const double phase = 2.0 * kPi * tau * mu[q];
    const double c = std::cos(phase);
    const double term = w[q] * envelope * c;
    out[q] = term;
    out[nq + q] = -w[q] * envelope * std::sin(phase) * 2.0 * kPi * tau;
    out[2 * nq + q] = term * (-4.0 * kPi * kPi * tau2 * v[q] * v[q]);
  }
}

SMKernelGradient sm_kernel_grad(const SMKernelParams& params, double tau) {
  const std::size_t nq = params.num_components();
  std::vector<double> flat(3 * nq);
  sm_kernel_grad(params, tau, flat);
  SMKernelGradient g;
  g.d_log_weight.assign(flat.begin(), flat.begin() + nq);
  g.d_frequency.assign(flat.begin() + nq, flat.begin() + 2 * nq);
  g.d_log_scale.assign(flat.begin() + 2 * nq, flat.end());
  return g;
}

double spectral_density(const SMKernelParams& params, double s) {
  const auto& w = params.weights();
  const auto& mu = params.frequencies();
  const auto& v = params.scales();
  const double norm = 1.0 / std::sqrt(2.0 * kPi);
  double density = 0.0;
  for (std::size_t q = 0; q < w.size(); ++q) {
    const double zp = (s - mu[q]) / v[q];
    const double zm = (-s - mu[q]) / v[q];
    density += w[q] * 0.5 * norm / v[q] *
               (std::exp(-0.5 * zp * zp) + std::exp(-0.5 * zm * zm));
  }
  return density;
}

Eigen::MatrixXd kernel_matrix(const SMKernelParams& params,
                              std::span<const double> xs) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd k(n, n);
  const double k0 = params.total_weight();
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = k0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double value = sm_kernel(params, xs[i] - xs[j]);
      k(i, j) = value;
      k(j, i) = value;
    }
  }
  return k;
}

Eigen::MatrixXd kernel_matrix(const SMKernelParams& params,
                              const NoiseParam& noise,
                              std::span<const double> xs) {
  Eigen::MatrixXd k = kernel_matrix(params, xs);
  k.diagonal().array() += noise.variance();
  return k;
}

Eigen::MatrixXd cross_kernel_matrix(const SMKernelParams& params,
                                    std::span<const double> rows,
                                    std::span<const double> cols) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          sm_kernel(params, rows[i] - cols[j]);
    }
  }
  return k;
}

double rbf_kernel(double lengthscale, double variance, double tau) {
  return variance * std::exp(-tau * tau / (2.0 * lengthscale * lengthscale));
}

}  // namespace specmix
