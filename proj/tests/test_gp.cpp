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

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "specmix/error.hpp"
#include "specmix/gp.hpp"
#include "specmix/kernels.hpp"
#include "test_util.hpp"

namespace specmix {
namespace {

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> y(n);
  for (auto& v : y) v = normal(rng);
  return y;
}

TEST(JitterTest, WellSeparatedPointsNeedNoJitter) {
  const SMKernelParams p({1.0}, {0.1}, {0.1});
  const auto model = build_model(TimeSeries({0.0, 5.0}, {1.0, 2.0}), p, NoiseParam(0.1));
  EXPECT_EQ(model.jitter_used(), 0.0);
}

TEST(JitterTest, DuplicateInputsEscalate) {
  const SMKernelParams p({1.0}, {0.1}, {0.1});
  const GpModel model({0.0, 0.0, 1.0}, {1.0, 1.0, 0.0}, p, NoiseParam(1e-15));
  EXPECT_GT(model.jitter_used(), 0.0);
}

TEST(JitterTest, LadderExhaustionIsNumericalError) {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(jittered_cholesky(a), NumericalError);
}

TEST(GpModelTest, FactorAndWeightsReconstruct) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = testing::random_params(rng, 1 + trial % 3);
    const NoiseParam noise(0.01 + 0.1 * (trial % 4));
    const auto xs = testing::sorted_uniform(rng, 5 + trial % 20, 0.0, 20.0);
    const auto ys = random_values(rng, xs.size());
    const GpModel model(xs, ys, p, noise);
    Eigen::MatrixXd k = kernel_matrix(p, noise, xs);
    k.diagonal().array() += model.jitter_used();
    const Eigen::MatrixXd l = model.chol_lower();
    EXPECT_LT((l * l.transpose() - k).norm() / k.norm(), 1e-8);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), ys.size());
    EXPECT_LT((k * model.alpha() - y).norm() / y.norm(), 1e-8);
  }
}

TEST(LogEvidenceTest, SinglePointClosedForm) {
  const SMKernelParams p({0.7, 0.4}, {0.1, 0.3}, {0.2, 0.05});
  const GpModel model({2.0}, {0.0}, p, NoiseParam(0.3));
  EXPECT_NEAR(model.log_marginal_likelihood_value(),
              -0.5 * std::log(1.1 + 0.3) - 0.5 * std::log(2.0 * kPi), 1e-14);
}

TEST(LogEvidenceTest, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nq = 1 + trial % 3;
    const auto p = testing::random_params(rng, nq);
    const double noise = 0.05 + 0.05 * (trial % 5);
    const auto xs = testing::sorted_uniform(rng, 3 + trial % 13, 0.0, 10.0);
    const auto ys = random_values(rng, xs.size());
    Eigen::VectorXd theta(3 * nq + 1);
    for (std::size_t q = 0; q < nq; ++q) {
      theta[q] = std::log(p.weights()[q]);
      theta[nq + q] = p.frequencies()[q];
      theta[2 * nq + q] = std::log(p.scales()[q]);
    }
    theta[3 * nq] = std::log(noise);
    const auto f = [&](const Eigen::VectorXd& x) {
      std::vector<double> w(nq), mu(nq), v(nq);
      for (std::size_t q = 0; q < nq; ++q) {
        w[q] = std::exp(x[q]);
        mu[q] = x[nq + q];
        v[q] = std::exp(x[2 * nq + q]);
      }
      return GpModel(xs, ys, SMKernelParams(w, mu, v), NoiseParam(std::exp(x[3 * nq])))
          .log_marginal_likelihood_value();
    };
    const auto fd = testing::central_difference(f, theta);
    const auto analytic = GpModel(xs, ys, p, NoiseParam(noise)).log_marginal_likelihood();
    EXPECT_NEAR(analytic.value, f(theta), 1e-12 * std::max(1.0, std::fabs(f(theta))));
    EXPECT_LT(testing::max_relative_error(analytic.gradient, fd, fd.cwiseAbs().maxCoeff()),
              1e-5)
        << "trial " << trial;
  }
}

TEST(LogEvidenceTest, PermutationInvariant) {
  std::mt19937_64 rng(14);
  const auto p = testing::random_params(rng, 2);
  auto xs = testing::sorted_uniform(rng, 12, 0.0, 10.0);
  auto ys = random_values(rng, 12);
  const double base = GpModel(xs, ys, p, NoiseParam(0.1)).log_marginal_likelihood_value();
  std::vector<std::size_t> perm{5, 2, 9, 0, 11, 1, 3, 7, 6, 10, 4, 8};
  std::vector<double> px, py;
  for (auto i : perm) {
    px.push_back(xs[i]);
    py.push_back(ys[i]);
  }
  EXPECT_NEAR(GpModel(px, py, p, NoiseParam(0.1)).log_marginal_likelihood_value(), base,
              1e-10 * std::fabs(base));
}

TEST(LogEvidenceTest, PrefersGeneratingNoiseScale) {
  const SMKernelParams p({1.0}, {0.15}, {0.05});
  std::vector<double> xs(30);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ys = sample_prior(p, NoiseParam(1e-12), xs, seed);
    const double at_truth = GpModel(xs, ys, p, NoiseParam(0.01)).log_marginal_likelihood_value();
    const double inflated = GpModel(xs, ys, p, NoiseParam(1.0)).log_marginal_likelihood_value();
    passes += inflated < at_truth;
  }
  EXPECT_GE(passes, 18);
}

struct BruteForce {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

// Conditions the joint Gaussian over (train, query) by explicit inversion.
BruteForce condition(const SMKernelParams& p, double noise,
                     const std::vector<double>& xs, const std::vector<double>& ys,
                     const std::vector<double>& qs) {
  std::vector<double> all = xs;
  all.insert(all.end(), qs.begin(), qs.end());
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto m = static_cast<Eigen::Index>(qs.size());
  Eigen::MatrixXd joint(n + m, n + m);
  for (Eigen::Index i = 0; i < n + m; ++i) {
    for (Eigen::Index j = 0; j < n + m; ++j) joint(i, j) = sm_kernel(p, all[i] - all[j]);
  }
  Eigen::MatrixXd knn = joint.topLeftCorner(n, n);
  knn.diagonal().array() += noise;
  const Eigen::MatrixXd inv = knn.inverse();
  const Eigen::MatrixXd kqn = joint.bottomLeftCorner(m, n);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);
  BruteForce out;
  out.mean = kqn * inv * y;
  out.variance = (joint.bottomRightCorner(m, m) - kqn * inv * kqn.transpose()).diagonal();
  return out;
}

TEST(PredictTest, MatchesBruteForceConditioning) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = testing::random_params(rng, 1 + trial % 3);
    const double noise = 0.05 + 0.1 * (trial % 3);
    const auto xs = testing::sorted_uniform(rng, 2 + trial % 19, 0.0, 10.0);
    const auto ys = random_values(rng, xs.size());
    const auto qs = testing::sorted_uniform(rng, 7, -2.0, 14.0);
    const GpModel model(xs, ys, p, NoiseParam(noise));
    const auto pred = model.predict(qs);
    const auto oracle = condition(p, noise, xs, ys, qs);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      EXPECT_NEAR(pred.mean[i], oracle.mean[static_cast<Eigen::Index>(i)], 1e-8);
      EXPECT_NEAR(pred.sd[i] * pred.sd[i], oracle.variance[static_cast<Eigen::Index>(i)],
                  1e-8);
    }
  }
}

TEST(PredictTest, InterpolatesWithTinyNoise) {
  const SMKernelParams p({1.0}, {0.05}, {0.05});
  const TimeSeries train({0, 1, 2, 3, 4, 5}, {3.0, 5.0, 4.0, 6.0, 7.5, 6.5});
  const auto model = build_model(train, p, NoiseParam(1e-12));
  const auto pred = model.predict(train.timestamps(), IntervalMode::kLatent);
  for (std::size_t i = 0; i < train.size(); ++i) {
    EXPECT_NEAR(pred.mean[i], train.values()[i], 1e-5);
  }
}

TEST(PredictTest, FarQueryRevertsToPrior) {
  const SMKernelParams p({0.6, 0.4}, {0.1, 0.2}, {0.1, 0.2});
  const TimeSeries train({0, 1, 2, 3, 4}, {1.0, 3.0, 2.0, 5.0, 4.0});
  const auto model = build_model(train, p, NoiseParam(0.1));
  const std::vector<double> far{1e4};
  const auto pred = model.predict(far, IntervalMode::kLatent);
  const double prior_sd = std::sqrt(p.total_weight()) * model.scaling().y_std;
  EXPECT_NEAR(pred.sd[0], prior_sd, 0.01 * prior_sd);
  EXPECT_NEAR(pred.mean[0], model.scaling().y_mean, 1e-6);
}

TEST(PredictTest, VarianceBoundedAndMonotoneInData) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = testing::random_params(rng, 1 + trial % 3);
    const NoiseParam noise(0.05);
    auto xs = testing::sorted_uniform(rng, 12, 0.0, 10.0);
    const auto ys = random_values(rng, 12);
    const auto qs = testing::sorted_uniform(rng, 10, -3.0, 13.0);
    const auto full = GpModel(xs, ys, p, noise).predict_standardized(qs);
    const GpModel fewer({xs.begin(), xs.end() - 1}, {ys.begin(), ys.end() - 1}, p, noise);
    const auto partial = fewer.predict_standardized(qs);
    for (Eigen::Index i = 0; i < full.variance.size(); ++i) {
      EXPECT_LE(full.variance[i], p.total_weight() + noise.variance() + 1e-8);
      EXPECT_LE(full.variance[i], partial.variance[i] + 1e-8);
    }
  }
}

TEST(PredictTest, ObservationModeAddsNoise) {
  const SMKernelParams p({1.0}, {0.1}, {0.1});
  const TimeSeries train({0, 1, 2, 3}, {10.0, 12.0, 11.0, 13.0});
  const auto model = build_model(train, p, NoiseParam(0.2));
  const std::vector<double> qs{4.0, 5.0};
  const auto latent = model.predict(qs, IntervalMode::kLatent);
  const auto observed = model.predict(qs, IntervalMode::kObservation);
  const double ys2 = model.scaling().y_std * model.scaling().y_std;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    EXPECT_DOUBLE_EQ(latent.mean[i], observed.mean[i]);
    EXPECT_NEAR(observed.sd[i] * observed.sd[i], latent.sd[i] * latent.sd[i] + 0.2 * ys2,
                1e-10);
    EXPECT_LE(observed.lo95[i], observed.mean[i]);
    EXPECT_GE(observed.hi95[i], observed.mean[i]);
    EXPECT_NEAR(observed.hi95[i] - observed.mean[i], 1.96 * observed.sd[i], 1e-12);
  }
}

TEST(PredictTest, CholeskyPathMatchesDirectInversion) {
  std::mt19937_64 rng(17);
  const auto p = testing::random_params(rng, 2);
  const auto xs = testing::sorted_uniform(rng, 50, 0.0, 25.0);
  const auto ys = random_values(rng, 50);
  const auto qs = testing::sorted_uniform(rng, 5, 0.0, 30.0);
  const auto pred = GpModel(xs, ys, p, NoiseParam(0.1)).predict(qs);
  const auto oracle = condition(p, 0.1, xs, ys, qs);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    EXPECT_NEAR(pred.mean[i], oracle.mean[static_cast<Eigen::Index>(i)], 1e-8);
  }
}

TEST(CheckedVarianceTest, ClampsRoundOffOnly) {
  EXPECT_EQ(checked_variance(0.5, 1.0), 0.5);
  EXPECT_EQ(checked_variance(-1e-12, 1.0), 0.0);
  EXPECT_THROW(checked_variance(-1e-6, 1.0), NumericalError);
}

TEST(IntervalModeTest, StringRoundTrip) {
  EXPECT_EQ(interval_mode_from_string("latent"), IntervalMode::kLatent);
  EXPECT_EQ(interval_mode_from_string(to_string(IntervalMode::kObservation)),
            IntervalMode::kObservation);
  EXPECT_THROW(interval_mode_from_string("both"), InputError);
}

TEST(SamplePriorTest, DeterministicPerSeed) {
  const SMKernelParams p({1.0}, {0.2}, {0.05});
  const std::vector<double> xs{0, 1, 2, 3, 4};
  EXPECT_EQ(sample_prior(p, NoiseParam(0.1), xs, 7), sample_prior(p, NoiseParam(0.1), xs, 7));
  EXPECT_NE(sample_prior(p, NoiseParam(0.1), xs, 7), sample_prior(p, NoiseParam(0.1), xs, 8));
}

TEST(SamplePriorTest, MonteCarloMomentsMatchCovariance) {
  const SMKernelParams p({0.8, 0.5}, {0.1, 0.3}, {0.05, 0.1});
  const NoiseParam noise(0.05);
  std::vector<double> xs(10);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = 0.7 * static_cast<double>(i);
  const int draws = 5000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(10);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(10, 10);
  for (int s = 0; s < draws; ++s) {
    const auto y = sample_prior(p, noise, xs, static_cast<std::uint64_t>(s) + 1000);
    const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(y.data(), 10);
    sum += v;
    outer += v * v.transpose();
  }
  const Eigen::VectorXd mean = sum / draws;
  const Eigen::MatrixXd cov = outer / draws - mean * mean.transpose();
  const double bound = 4.0 * std::sqrt(p.total_weight()) / std::sqrt(double(draws));
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_LT(std::fabs(mean[i]), bound);
  const Eigen::MatrixXd expected = kernel_matrix(p, noise, xs);
  EXPECT_LT((cov - expected).norm() / expected.norm(), 0.10);
}

}  // namespace
}  // namespace specmix
