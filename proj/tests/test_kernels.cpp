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
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "specmix/kernels.hpp"
#include "test_util.hpp"

namespace specmix {
namespace {

using Float50 = boost::multiprecision::cpp_bin_float_50;

Float50 kernel_oracle(const SMKernelParams& p, double tau) {
  const Float50 pi = boost::math::constants::pi<Float50>();
  const Float50 t(tau);
  Float50 sum = 0;
  for (std::size_t q = 0; q < p.num_components(); ++q) {
    const Float50 w(p.weights()[q]);
    const Float50 mu(p.frequencies()[q]);
    const Float50 v(p.scales()[q]);
    sum += w * exp(-2 * pi * pi * t * t * v * v) * cos(2 * pi * t * mu);
  }
  return sum;
}

TEST(SMKernelParamsTest, ValidatesInvariants) {
  EXPECT_THROW(SMKernelParams({}, {}, {}), std::invalid_argument);
  EXPECT_THROW(SMKernelParams({1.0}, {0.1, 0.2}, {0.1}), std::invalid_argument);
  EXPECT_THROW(SMKernelParams({0.0}, {0.1}, {0.1}), std::invalid_argument);
  EXPECT_THROW(SMKernelParams({1.0}, {-0.1}, {0.1}), std::invalid_argument);
  EXPECT_THROW(SMKernelParams({1.0}, {0.1}, {0.0}), std::invalid_argument);
  EXPECT_THROW(SMKernelParams({1.0}, {NAN}, {0.1}), std::invalid_argument);
  EXPECT_THROW(NoiseParam(0.0), std::invalid_argument);
  EXPECT_THROW(NoiseParam(-1.0), std::invalid_argument);
  EXPECT_NO_THROW(SMKernelParams({1.0}, {0.0}, {0.1}));
}

TEST(SMKernelTest, ZeroLagIsTotalWeight) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto p = testing::random_params(rng, 1 + i % 5);
    EXPECT_DOUBLE_EQ(sm_kernel(p, 0.0), p.total_weight());
  }
}

TEST(SMKernelTest, QuarterFrequencyZeroCrossing) {
  const SMKernelParams p({1.0}, {0.25}, {0.1});
  EXPECT_NEAR(sm_kernel(p, 1.0), 0.0, 1e-15);
}

TEST(SMKernelTest, MatchesExtendedPrecisionOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = testing::random_params(rng, 2, 2.0);
    for (double tau : {0.1, 0.5, 2.0}) {
      const double oracle = static_cast<double>(kernel_oracle(p, tau));
      EXPECT_NEAR(sm_kernel(p, tau), oracle, 1e-14 * p.total_weight());
    }
  }
}

TEST(SMKernelTest, SymmetricAndBounded) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lag(-20.0, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = testing::random_params(rng, 1 + trial % 4);
    const double tau = lag(rng);
    EXPECT_EQ(sm_kernel(p, tau), sm_kernel(p, -tau));
    EXPECT_LE(std::fabs(sm_kernel(p, tau)), sm_kernel(p, 0.0) + 1e-15);
  }
}

TEST(SMKernelGradTest, LogWeightDerivativeIsSummand) {
  std::mt19937_64 rng(4);
  const auto p = testing::random_params(rng, 3);
  const auto g = sm_kernel_grad(p, 0.7);
  for (std::size_t q = 0; q < 3; ++q) {
    const SMKernelParams single({p.weights()[q]}, {p.frequencies()[q]},
                                {p.scales()[q]});
    EXPECT_NEAR(g.d_log_weight[q], sm_kernel(single, 0.7), 1e-15);
  }
}

TEST(SMKernelGradTest, FrequencyDerivativeVanishesAtZeroLag) {
  std::mt19937_64 rng(5);
  const auto g = sm_kernel_grad(testing::random_params(rng, 4), 0.0);
  for (double d : g.d_frequency) EXPECT_EQ(d, 0.0);
  for (double d : g.d_log_scale) EXPECT_EQ(d, 0.0);
}

TEST(SMKernelGradTest, FlatLayoutMatchesStruct) {
  std::mt19937_64 rng(6);
  const auto p = testing::random_params(rng, 3);
  const auto g = sm_kernel_grad(p, 1.3);
  std::vector<double> flat(9);
  sm_kernel_grad(p, 1.3, flat);
  for (std::size_t q = 0; q < 3; ++q) {
    EXPECT_EQ(flat[q], g.d_log_weight[q]);
    EXPECT_EQ(flat[3 + q], g.d_frequency[q]);
    EXPECT_EQ(flat[6 + q], g.d_log_scale[q]);
  }
}

TEST(SMKernelGradTest, MatchesCentralDifferences) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lag(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t nq = 1 + trial % 4;
    const auto p = testing::random_params(rng, nq);
    const double tau = lag(rng);
    Eigen::VectorXd theta(3 * nq);
    for (std::size_t q = 0; q < nq; ++q) {
      theta[q] = std::log(p.weights()[q]);
      theta[nq + q] = p.frequencies()[q];
      theta[2 * nq + q] = std::log(p.scales()[q]);
    }
    const auto f = [nq, tau](const Eigen::VectorXd& x) {
      std::vector<double> w(nq), mu(nq), v(nq);
      for (std::size_t q = 0; q < nq; ++q) {
        w[q] = std::exp(x[q]);
        mu[q] = x[nq + q];
        v[q] = std::exp(x[2 * nq + q]);
      }
      return sm_kernel(SMKernelParams(w, mu, v), tau);
    };
    const Eigen::VectorXd fd = testing::central_difference(f, theta);
    std::vector<double> flat(3 * nq);
    sm_kernel_grad(p, tau, flat);
    const Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(flat.data(), 3 * nq);
    EXPECT_LT(testing::max_relative_error(analytic, fd, fd.cwiseAbs().maxCoeff()), 1e-6)
        << "trial " << trial;
  }
}

TEST(SpectralDensityTest, EvenAndNonnegative) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> s_dist(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = testing::random_params(rng, 1 + trial % 3);
    const double s = s_dist(rng);
    EXPECT_DOUBLE_EQ(spectral_density(p, s) - spectral_density(p, -s), 0.0);
    EXPECT_GE(spectral_density(p, s), 0.0);
  }
}

TEST(SpectralDensityTest, IntegratesToTotalWeight) {
  using boost::math::quadrature::gauss_kronrod;
  for (auto [mu, v] : {std::pair{0.0, 0.1}, std::pair{0.3, 0.05}, std::pair{1.0, 0.4}}) {
    const SMKernelParams p({1.0}, {mu}, {v});
    const double bound = 50.0 * v + mu;
    const double total = gauss_kronrod<double, 61>::integrate(
        [&](double s) { return spectral_density(p, s); }, -bound, bound, 15, 1e-12);
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(SpectralDensityTest, ModeAtFrequency) {
  const SMKernelParams p({1.0}, {1.0}, {0.05});
  double best_s = 0.0;
  double best = -1.0;
  for (int i = 1; i <= 4000; ++i) {
    const double s = i * 0.0005;
    if (spectral_density(p, s) > best) {
      best = spectral_density(p, s);
      best_s = s;
    }
  }
  EXPECT_NEAR(best_s, 1.0, 0.0005);
}

TEST(SpectralDensityTest, FourierDualOfKernel) {
  using boost::math::quadrature::gauss_kronrod;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> lag(-3.0, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = testing::random_params(rng, 1 + trial % 3);
    const double tau = lag(rng);
    double upper = 0.0;
    for (std::size_t q = 0; q < p.num_components(); ++q) {
      upper = std::max(upper, p.frequencies()[q] + 12.0 * p.scales()[q]);
    }
    const double value = 2.0 * gauss_kronrod<double, 61>::integrate(
        [&](double s) { return spectral_density(p, s) * std::cos(2.0 * kPi * s * tau); },
        0.0, upper, 20, 1e-12);
    EXPECT_NEAR(value, sm_kernel(p, tau), 1e-5);
  }
}

TEST(KernelMatrixTest, SingleInput) {
  const SMKernelParams p({0.5, 1.5}, {0.1, 0.2}, {0.1, 0.1});
  const std::vector<double> xs{3.0};
  const auto k = kernel_matrix(p, NoiseParam(0.25), xs);
  ASSERT_EQ(k.rows(), 1);
  EXPECT_DOUBLE_EQ(k(0, 0), 2.25);
}

TEST(KernelMatrixTest, ExactSymmetryDiagonalAndPermutation) {
  std::mt19937_64 rng(10);
  const auto p = testing::random_params(rng, 3);
  auto xs = testing::sorted_uniform(rng, 20, 0.0, 10.0);
  const NoiseParam noise(0.1);
  const auto k = kernel_matrix(p, noise, xs);
  EXPECT_TRUE(k == k.transpose());
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    EXPECT_DOUBLE_EQ(k(i, i), p.total_weight() + 0.1);
  }
  std::vector<int> perm(xs.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> permuted(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) permuted[i] = xs[perm[i]];
  const auto kp = kernel_matrix(p, noise, permuted);
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      EXPECT_EQ(kp(i, j), k(perm[i], perm[j]));
    }
  }
}

TEST(KernelMatrixTest, PositiveSemidefinite) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = testing::random_params(rng, 1 + trial % 10);
    const auto xs = testing::sorted_uniform(rng, 50, 0.0, 30.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        kernel_matrix(p, NoiseParam(1e-12), xs), Eigen::EigenvaluesOnly);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8 * p.total_weight());
  }
}

TEST(RbfKernelTest, ZeroLagAndDecay) {
  EXPECT_DOUBLE_EQ(rbf_kernel(0.7, 2.5, 0.0), 2.5);
  double previous = rbf_kernel(0.7, 2.5, 0.0);
  for (int i = 1; i < 200; ++i) {
    const double value = rbf_kernel(0.7, 2.5, 0.05 * i);
    EXPECT_LT(value, previous);
    previous = value;
  }
  EXPECT_LT(previous, 1e-12);
}

TEST(RbfKernelTest, SpectralMixtureReduction) {
  for (double v : {0.01, 0.1, 0.7}) {
    const double w = 1.7;
    const SMKernelParams p({w}, {0.0}, {v});
    const double ell = 1.0 / (2.0 * kPi * v);
    for (int i = 0; i < 1000; ++i) {
      const double tau = -10.0 + 20.0 * i / 999.0;
      EXPECT_NEAR(sm_kernel(p, tau), rbf_kernel(ell, w, tau), 1e-12);
    }
  }
}

}  // namespace
}  // namespace specmix
