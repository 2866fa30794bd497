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

#include "specmix/gp.hpp"

#include <array>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "specmix/error.hpp"
#include "specmix/random.hpp"

namespace specmix {

namespace {

constexpr std::array<double, 5> kJitterLadder = {0.0, 1e-10, 1e-8, 1e-6, 1e-4};
constexpr double kMinRelativePivot = 1e-13;
constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

std::string to_string(IntervalMode mode) {
  return mode == IntervalMode::kLatent ? "latent" : "observation";
}

IntervalMode interval_mode_from_string(const std::string& text) {
  if (text == "latent") return IntervalMode::kLatent;
  if (text == "observation") return IntervalMode::kObservation;
  throw InputError(fmt::format(
      "unknown interval mode '{}' (expected latent or observation)", text));
}

void PredictiveDistribution::fill_intervals() {
  lo95.resize(mean.size());
  hi95.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    lo95[i] = mean[i] - kZ95 * sd[i];
    hi95[i] = mean[i] + kZ95 * sd[i];
  }
}

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  const double mean_diag = a.diagonal().mean();
  for (double rel : kJitterLadder) {
    const double jitter = rel * mean_diag;
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd lower = llt.matrixL();
    const double min_pivot = lower.diagonal().minCoeff();
    if (!std::isfinite(min_pivot) ||
        min_pivot * min_pivot <= kMinRelativePivot * mean_diag) {
      continue;
    }
    return {std::move(lower), jitter};
  }
  throw NumericalError(fmt::format(
      "covariance matrix ({}x{}) is not positive definite even with jitter "
      "ladder {{0, 1e-10, 1e-8, 1e-6, 1e-4}} x mean diagonal ({:.6g})",
      n, n, mean_diag));
}

double checked_variance(double raw, double prior_variance) {
  if (raw >= 0.0) return raw;
  if (raw > -1e-10 * prior_variance) {
    spdlog::warn("clamping slightly negative predictive variance {:.3e} to 0",
                 raw);
    return 0.0;
  }
  throw NumericalError(fmt::format(
      "predictive variance {:.6e} is negative beyond round-off (k(0) = {:.6g})",
      raw, prior_variance));
}

GpModel::GpModel(std::vector<double> train_x, std::vector<double> train_y,
                 SMKernelParams params, NoiseParam noise,
                 ScalingParams scaling)
    : train_x_(std::move(train_x)),
      train_y_(std::move(train_y)),
      params_(std::move(params)),
      noise_(noise),
      scaling_(scaling) {
  if (train_x_.size() != train_y_.size() || train_x_.empty()) {
    throw InputError("GP training inputs and targets must be nonempty and "
                     "of equal length");
  }
  auto factor = jittered_cholesky(kernel_matrix(params_, noise_, train_x_));
  chol_ = std::move(factor.lower);
  jitter_ = factor.jitter;
  const Eigen::Map<const Eigen::VectorXd> y(
      train_y_.data(), static_cast<Eigen::Index>(train_y_.size()));
  alpha_ = chol_.triangularView<Eigen::Lower>().solve(y);
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

double GpModel::log_marginal_likelihood_value() const {
  const Eigen::Map<const Eigen::VectorXd> y(
      train_y_.data(), static_cast<Eigen::Index>(train_y_.size()));
  const double n = static_cast<double>(train_y_.size());
  return -0.5 * y.dot(alpha_) - chol_.diagonal().array().log().sum() -
         0.5 * n * kLog2Pi;
}

LogEvidence GpModel::log_marginal_likelihood() const {
  const auto n = static_cast<Eigen::Index>(train_x_.size());
  const std::size_t nq = params_.num_components();

  LogEvidence out;
  out.value = log_marginal_likelihood_value();

  // W = alpha alpha^T - (K + s^2 I)^{-1}; dL/dtheta = 1/2 tr(W dK/dtheta).
  Eigen::MatrixXd linv = chol_.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd w = alpha_ * alpha_.transpose();
  w.noalias() -= linv.transpose() * linv;

  out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * nq + 1));
  std::vector<double> buf(3 * nq);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double wij = w(i, j);
      sm_kernel_grad(params_, train_x_[i] - train_x_[j], buf);
      for (std::size_t k = 0; k < 3 * nq; ++k) {
        out.gradient[static_cast<Eigen::Index>(k)] += wij * buf[k];
      }
    }
  }
  const double trace_w = w.trace();
  for (std::size_t q = 0; q < nq; ++q) {
    out.gradient[static_cast<Eigen::Index>(q)] +=
        0.5 * trace_w * params_.weights()[q];
  }
  out.gradient[static_cast<Eigen::Index>(3 * nq)] =
      0.5 * trace_w * noise_.variance();
  return out;
}

StandardizedPrediction GpModel::predict_standardized(
    std::span<const double> query_x) const {
  const Eigen::MatrixXd k_star =
      cross_kernel_matrix(params_, train_x_, query_x);  // N x M
  StandardizedPrediction out;
  out.mean = k_star.transpose() * alpha_;
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(k_star);
  const double k0 = params_.total_weight();
  out.variance = (k0 - v.colwise().squaredNorm().array()).matrix();
  return out;
}

PredictiveDistribution GpModel::predict(std::span<const double> query_x,
                                        IntervalMode mode) const {
  std::vector<double> xs(query_x.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(query_x[i])) {
      throw InputError("query inputs must be finite");
    }
    xs[i] = scaling_.to_std_x(query_x[i]);
  }
  const auto raw = predict_standardized(xs);
  const double k0 = params_.total_weight();
  const double extra =
      mode == IntervalMode::kObservation ? noise_.variance() : 0.0;

  PredictiveDistribution out;
  out.query_x.assign(query_x.begin(), query_x.end());
  out.mean.resize(xs.size());
  out.sd.resize(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const double var = checked_variance(raw.variance[idx], k0) + extra;
    out.mean[i] = scaling_.from_std_y(raw.mean[idx]);
    out.sd[i] = std::sqrt(var) * scaling_.y_std;
  }
  out.fill_intervals();
  return out;
}

GpModel build_model(const TimeSeries& train, const SMKernelParams& params,
                    const NoiseParam& noise) {
  if (train.size() < 2) {
    throw InputError("a GP model needs at least two training points");
  }
  auto [standardized, scaling] = standardize(train);
  return GpModel(standardized.timestamps(), standardized.values(), params,
                 noise, scaling);
}

std::vector<double> sample_prior(const SMKernelParams& params,
                                 const NoiseParam& noise,
                                 std::span<const double> xs,
                                 std::uint64_t seed) {
  const auto factor = jittered_cholesky(kernel_matrix(params, xs));
  const auto n = static_cast<Eigen::Index>(xs.size());
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
  Eigen::VectorXd f = factor.lower.triangularView<Eigen::Lower>() * z;
  const double noise_sd = std::sqrt(noise.variance());
  std::vector<double> out(xs.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = f[i] + noise_sd * normal(rng);
  }
  return out;
}

}  // namespace specmix
