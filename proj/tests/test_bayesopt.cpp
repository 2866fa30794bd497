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
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "specmix/bayesopt.hpp"
#include "specmix/error.hpp"
#include "specmix/gp.hpp"
#include "specmix/inference.hpp"

namespace specmix {
namespace {

double convex(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s -= (v - 0.3) * (v - 0.3);
  return s;
}

BoxBounds unit_box(std::size_t dim) {
  return BoxBounds{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

TEST(ExpectedImprovementTest, ClosedFormCases) {
  EXPECT_EQ(expected_improvement(0.5, 0.0, 1.0), 0.0);
  EXPECT_EQ(expected_improvement(1.0, 0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(expected_improvement(1.5, 0.0, 1.0), 0.5);
  EXPECT_NEAR(expected_improvement(2.0, 1.0, 2.0), 1.0 / std::sqrt(2.0 * M_PI), 1e-15);
}

TEST(ExpectedImprovementTest, NonnegativeAndContinuousAtZeroSd) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_GE(expected_improvement(normal(rng), std::fabs(normal(rng)), normal(rng)), 0.0);
  }
  EXPECT_NEAR(expected_improvement(1.3, 1e-12, 1.0), 0.3, 1e-12);
  EXPECT_NEAR(expected_improvement(0.7, 1e-12, 1.0), 0.0, 1e-12);
}

TEST(ExpectedImprovementTest, MatchesMonteCarlo) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double mean = u(rng);
    const double sd = 0.2 + std::fabs(u(rng));
    const double best = u(rng);
    std::normal_distribution<double> x(mean, sd);
    const int n = 1000000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double gain = std::max(x(rng) - best, 0.0);
      sum += gain;
      sum_sq += gain * gain;
    }
    const double mc = sum / n;
    const double se = std::sqrt((sum_sq / n - mc * mc) / n);
    EXPECT_NEAR(expected_improvement(mean, sd, best), mc, 3.0 * se);
  }
}

TEST(TuneConfigTest, Validation) {
  TuneConfig config;
  EXPECT_NO_THROW(config.validate());
  config.n_init = 1;
  EXPECT_THROW(config.validate(), InputError);
  config.n_init = 10;
  config.budget = 9;
  EXPECT_THROW(config.validate(), InputError);
}

TEST(BayesOptimizeTest, BudgetRespectedAndTraceMonotone) {
  TuneConfig config;
  const auto trace = bayes_optimize(convex, unit_box(2), config);
  ASSERT_EQ(trace.iterations.size(), 30u);
  for (std::size_t i = 1; i < trace.iterations.size(); ++i) {
    EXPECT_GE(trace.iterations[i].best_so_far, trace.iterations[i - 1].best_so_far);
  }
  EXPECT_EQ(trace.iterations.back().best_so_far, trace.best_objective());
  for (const auto& it : trace.iterations) {
    for (double x : it.candidate) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  }
}

TEST(BayesOptimizeTest, FindsConvexOptimum) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TuneConfig config;
    config.seed = seed;
    hits += bayes_optimize(convex, unit_box(2), config).best_objective() >= -0.01;
  }
  EXPECT_GE(hits, 9);
}

TEST(BayesOptimizeTest, DeterministicPerSeed) {
  TuneConfig config;
  config.budget = 12;
  config.seed = 4;
  const auto a = bayes_optimize(convex, unit_box(3), config);
  const auto b = bayes_optimize(convex, unit_box(3), config);
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    EXPECT_EQ(a.iterations[i].candidate, b.iterations[i].candidate);
  }
}

TEST(BayesOptimizeTest, InfeasibleEvaluationsAreRecordedNotModelled) {
  const auto objective = [](std::span<const double> x) {
    return x[0] > 0.8 ? -std::numeric_limits<double>::infinity() : convex(x);
  };
  TuneConfig config;
  config.budget = 15;
  const auto trace = bayes_optimize(objective, unit_box(2), config);
  EXPECT_EQ(trace.iterations.size(), 15u);
  EXPECT_TRUE(std::isfinite(trace.best_objective()));
  const auto never = [](std::span<const double>) {
    return -std::numeric_limits<double>::infinity();
  };
  EXPECT_THROW(bayes_optimize(never, unit_box(2), config), NumericalError);
}

TEST(BayesOptimizeTest, RejectsBadBounds) {
  EXPECT_THROW(bayes_optimize(convex, BoxBounds{{0.0}, {0.0}}, TuneConfig{}), InputError);
  EXPECT_THROW(bayes_optimize(convex, BoxBounds{{0.0, 0.0}, {1.0}}, TuneConfig{}),
               InputError);
}

TimeSeries tune_series() {
  const SMKernelParams p({1.0, 0.5}, {0.1, 0.27}, {0.02, 0.03});
  std::vector<double> t(14);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  return TimeSeries(t, sample_prior(p, NoiseParam(0.05), t, 3));
}

TEST(TuneTest, BoundsFollowSamplingGrid) {
  const auto train = tune_series();
  const auto box = tuning_bounds(train, 3);
  ASSERT_EQ(box.dim(), 6u);
  const HyperPosterior posterior(train, 3);
  EXPECT_DOUBLE_EQ(box.upper[0], posterior.nyquist());
  EXPECT_DOUBLE_EQ(box.lower[3], std::log(0.1 / posterior.x_range()));
  EXPECT_DOUBLE_EQ(box.upper[3], std::log(10.0 * posterior.nyquist()));
}

TEST(TuneTest, TraceAndRefitInvariants) {
  const auto train = tune_series();
  TuneConfig config;
  const auto result = tune(train, 3, config);
  const auto& trace = result.trace;
  ASSERT_EQ(trace.iterations.size(), 30u);
  ASSERT_EQ(trace.dimension_names.size(), 6u);
  EXPECT_EQ(trace.dimension_names[0], "mu_1");
  EXPECT_EQ(trace.dimension_names[5], "log_v_3");
  double best_init = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < config.n_init; ++i) {
    best_init = std::max(best_init, trace.iterations[i].objective);
  }
  EXPECT_GE(result.objective, best_init);
  EXPECT_GE(result.objective, trace.best_objective());
  ASSERT_TRUE(trace.best_params.has_value());
  EXPECT_EQ(*trace.best_params, result.model.params());
  const auto& winner = trace.iterations[trace.best_index].candidate;
  for (std::size_t q = 0; q < 3; ++q) {
    EXPECT_EQ(result.model.params().frequencies()[q], winner[q]);
  }
}

TEST(TuneTest, ExportedTraceRows) {
  const auto train = tune_series();
  TuneConfig config;
  config.budget = 10;
  const auto result = tune(train, 2, config);
  std::ostringstream out;
  export_trace(result.trace, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iter,objective,best_so_far,mu_1,mu_2,log_v_1,log_v_2");
  std::vector<double> best;
  while (std::getline(in, line)) {
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    const auto third = line.find(',', second + 1);
    best.push_back(std::stod(line.substr(second + 1, third - second - 1)));
  }
  ASSERT_EQ(best.size(), 10u);
  for (std::size_t i = 1; i < best.size(); ++i) EXPECT_GE(best[i], best[i - 1]);
  EXPECT_EQ(best.back(), result.trace.best_objective());
  EXPECT_THROW(export_trace(TuneTrace{}, out), InputError);
}

}  // namespace
}  // namespace specmix
