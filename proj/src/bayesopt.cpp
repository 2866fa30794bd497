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

#include "specmix/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include <Eigen/Cholesky>
#include <boost/random/sobol.hpp>
#include <fmt/format.h>

#include "specmix/error.hpp"
#include "specmix/inference.hpp"
#include "specmix/optimize.hpp"
#include "specmix/random.hpp"

namespace specmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Exact GP with an isotropic RBF kernel over unit-box inputs. Targets are
// standardized internally.
class RbfSurrogate {
 public:
  RbfSurrogate(const std::vector<Eigen::VectorXd>& inputs,
               const std::vector<double>& targets)
      : x_(inputs), dim_(inputs.front().size()) {
    const auto n = static_cast<Eigen::Index>(targets.size());
    y_.resize(n);
    const double m = std::accumulate(targets.begin(), targets.end(), 0.0) /
                     static_cast<double>(n);
    double ss = 0.0;
    for (double t : targets) ss += (t - m) * (t - m);
    y_mean_ = m;
    y_scale_ = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 1.0;
    if (!(y_scale_ > 0.0)) y_scale_ = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      y_[i] = (targets[static_cast<std::size_t>(i)] - y_mean_) / y_scale_;
    }
    sq_dist_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        sq_dist_(i, j) = (x_[static_cast<std::size_t>(i)] -
                          x_[static_cast<std::size_t>(j)])
                             .squaredNorm();
      }
    }
  }

  // MAP over (log lengthscale, log signal variance, log noise variance).
  void fit(const Eigen::Vector3d& start) {
    const double d = static_cast<double>(dim_);
    prior_mean_ << std::log(0.5 * std::sqrt(d)), 0.0, std::log(1e-4);
    const DifferentiableObjective objective = [this](const Eigen::VectorXd& h,
                                                     Eigen::VectorXd& g) {
      return -log_posterior(h, g);
    };
    Eigen::VectorXd best = prior_mean_;
    double best_value = std::numeric_limits<double>::infinity();
    MinimizeOptions options;
    options.max_iterations = 200;
    for (const Eigen::VectorXd& x0 :
         {Eigen::VectorXd(prior_mean_), Eigen::VectorXd(start)}) {
      const auto result = minimize_bfgs(objective, x0, options);
      if (result.value < best_value) {
        best_value = result.value;
        best = result.x;
      }
    }
    hyper_ = best;
    condition();
  }

  const Eigen::Vector3d& hyper() const { return hyper_; }

  // Predictive mean and latent sd in original objective units.
  std::pair<double, double> predict(const Eigen::VectorXd& x) const {
    const double ls = std::exp(hyper_[0]);
    const double var = std::exp(hyper_[1]);
    Eigen::VectorXd k(static_cast<Eigen::Index>(x_.size()));
    for (std::size_t i = 0; i < x_.size(); ++i) {
      k[static_cast<Eigen::Index>(i)] =
          rbf_kernel(ls, var, (x - x_[i]).norm());
    }
    const double mean = k.dot(alpha_);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    const double latent = std::max(var - v.squaredNorm(), 0.0);
    return {mean * y_scale_ + y_mean_, std::sqrt(latent) * y_scale_};
  }

 private:
  Eigen::MatrixXd gram(const Eigen::Vector3d& h) const {
    const double ls = std::exp(h[0]);
    const double var = std::exp(h[1]);
    Eigen::MatrixXd k = sq_dist_.unaryExpr([&](double r2) {
      return rbf_kernel(ls, var, std::sqrt(r2));
    });
    k.diagonal().array() += std::exp(h[2]);
    return k;
  }

  double log_posterior(const Eigen::VectorXd& h, Eigen::VectorXd& grad) const {
    grad.setZero(3);
    if (!h.allFinite() || h.cwiseAbs().maxCoeff() > 30.0) return kNegInf;
    const Eigen::MatrixXd k = gram(h);
    JitteredCholesky factor;
    try {
      factor = jittered_cholesky(k);
    } catch (const NumericalError&) {
      return kNegInf;
    }
    const auto n = y_.size();
    const auto lower = factor.lower.triangularView<Eigen::Lower>();
    Eigen::VectorXd alpha = lower.solve(y_);
    factor.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);
    double value = -0.5 * y_.dot(alpha) -
                   factor.lower.diagonal().array().log().sum() -
                   0.5 * static_cast<double>(n) * std::log(2.0 * kPi);
    const Eigen::MatrixXd linv = lower.solve(Eigen::MatrixXd::Identity(n, n));
    Eigen::MatrixXd w = alpha * alpha.transpose();
    w.noalias() -= linv.transpose() * linv;
    Eigen::MatrixXd kf = k;
    kf.diagonal().array() -= std::exp(h[2]);
    const double ls2 = std::exp(2.0 * h[0]);
    grad[0] = 0.5 * (w.array() * kf.array() * sq_dist_.array() / ls2).sum();
    grad[1] = 0.5 * (w.array() * kf.array()).sum();
    grad[2] = 0.5 * w.trace() * std::exp(h[2]);
    constexpr double kPriorSd[3] = {1.0, 1.0, 2.0};
    for (int i = 0; i < 3; ++i) {
      const double z = (h[i] - prior_mean_[i]) / kPriorSd[i];
      value -= 0.5 * z * z;
      grad[i] -= z / kPriorSd[i];
    }
    return value;
  }

  void condition() {
    const auto factor = jittered_cholesky(gram(hyper_));
    chol_ = factor.lower;
    alpha_ = chol_.triangularView<Eigen::Lower>().solve(y_);
    chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
  }

  std::vector<Eigen::VectorXd> x_;
  Eigen::Index dim_;
  Eigen::VectorXd y_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  Eigen::MatrixXd sq_dist_;
  Eigen::Vector3d prior_mean_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d hyper_ = Eigen::Vector3d::Zero();
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
};

// Randomly shifted Sobol points in the unit cube.
std::vector<Eigen::VectorXd> shifted_sobol(std::size_t count, std::size_t dim,
                                           Rng& rng) {
  boost::random::sobol sobol(static_cast<std::size_t>(dim));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Eigen::VectorXd shift(static_cast<Eigen::Index>(dim));
  for (Eigen::Index d = 0; d < shift.size(); ++d) shift[d] = uniform(rng);
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(dim));
    for (Eigen::Index d = 0; d < u.size(); ++d) {
      const double raw = std::ldexp(static_cast<double>(sobol()), -64);
      u[d] = std::fmod(raw + shift[d], 1.0);
    }
    out.push_back(std::move(u));
  }
  return out;
}

// Coordinate (compass) search on the unit box, maximizing f.
Eigen::VectorXd compass_polish(const std::function<double(const Eigen::VectorXd&)>& f,
                               Eigen::VectorXd x, double fx) {
  double step = 0.05;
  int evaluations = 0;
  while (step > 1e-4 && evaluations < 400) {
    bool improved = false;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd probe = x;
        probe[d] = std::clamp(probe[d] + sign * step, 0.0, 1.0);
        if (probe[d] == x[d]) continue;
        const double value = f(probe);
        ++evaluations;
        if (value > fx) {
          x = std::move(probe);
          fx = value;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return x;
}

}  // namespace

double expected_improvement(double mean, double sd, double best) {
  const double delta = mean - best;
  if (!(sd > 0.0)) return std::max(delta, 0.0);
  const double z = delta / sd;
  return std::max(delta * normal_cdf(z) + sd * normal_pdf(z), 0.0);
}

void TuneConfig::validate() const {
  if (n_init < 2 || budget < n_init) {
    throw InputError(fmt::format(
        "tuning needs budget >= n_init >= 2 (budget {}, n_init {})", budget,
        n_init));
  }
  if (acquisition_samples < 1) {
    throw InputError("acquisition_samples must be at least 1");
  }
}

TuneTrace bayes_optimize(
    const std::function<double(std::span<const double>)>& objective,
    const BoxBounds& bounds, const TuneConfig& config) {
  config.validate();
  const std::size_t dim = bounds.dim();
  if (dim == 0 || bounds.upper.size() != dim) {
    throw InputError("search box bounds are empty or mismatched");
  }
  for (std::size_t d = 0; d < dim; ++d) {
    if (!std::isfinite(bounds.lower[d]) || !std::isfinite(bounds.upper[d]) ||
        !(bounds.lower[d] < bounds.upper[d])) {
      throw InputError(fmt::format("invalid bounds for dimension {}", d + 1));
    }
  }
  auto to_box = [&](const Eigen::VectorXd& u) {
    std::vector<double> x(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      x[d] = bounds.lower[d] +
             u[static_cast<Eigen::Index>(d)] * (bounds.upper[d] - bounds.lower[d]);
    }
    return x;
  };

  TuneTrace trace;
  for (std::size_t d = 1; d <= dim; ++d) {
    trace.dimension_names.push_back(fmt::format("x_{}", d));
  }
  std::vector<Eigen::VectorXd> seen;  // unit-box inputs with finite values
  std::vector<double> values;
  double best = kNegInf;
  bool any_finite = false;

  auto record = [&](const Eigen::VectorXd& u) {
    auto x = to_box(u);
    double value = objective(x);
    if (!std::isfinite(value)) value = kNegInf;
    if (std::isfinite(value) && (!any_finite || value > best)) {
      best = value;
      trace.best_index = trace.iterations.size();
      any_finite = true;
    }
    if (std::isfinite(value)) {
      seen.push_back(u);
      values.push_back(value);
    }
    trace.iterations.push_back({std::move(x), value, best});
  };

  Rng init_rng(config.seed);
  for (const auto& u : shifted_sobol(config.n_init, dim, init_rng)) record(u);

  Eigen::Vector3d surrogate_start = Eigen::Vector3d::Zero();
  for (std::size_t iter = config.n_init; iter < config.budget; ++iter) {
    Rng rng(derive_seed(config.seed, iter + 1));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Eigen::VectorXd next(static_cast<Eigen::Index>(dim));
    if (seen.size() < 2) {
      for (Eigen::Index d = 0; d < next.size(); ++d) next[d] = uniform(rng);
      record(next);
      continue;
    }
    RbfSurrogate surrogate(seen, values);
    surrogate.fit(surrogate_start);
    surrogate_start = surrogate.hyper();
    const auto acquisition = [&](const Eigen::VectorXd& u) {
      const auto [mean, sd] = surrogate.predict(u);
      return expected_improvement(mean, sd, best);
    };

    std::vector<std::pair<double, Eigen::VectorXd>> samples;
    samples.reserve(config.acquisition_samples);
    for (std::size_t s = 0; s < config.acquisition_samples; ++s) {
      Eigen::VectorXd u(static_cast<Eigen::Index>(dim));
      for (Eigen::Index d = 0; d < u.size(); ++d) u[d] = uniform(rng);
      const double ei = acquisition(u);
      samples.emplace_back(ei, std::move(u));
    }
    const std::size_t n_polish = std::min(config.polish_starts, samples.size());
    std::partial_sort(samples.begin(),
                      samples.begin() + static_cast<std::ptrdiff_t>(n_polish),
                      samples.end(), [](const auto& a, const auto& b) {
                        return a.first > b.first;
                      });
    next = samples.front().second;
    double next_ei = samples.front().first;
    for (std::size_t s = 0; s < n_polish; ++s) {
      Eigen::VectorXd polished =
          compass_polish(acquisition, samples[s].second, samples[s].first);
      const double ei = acquisition(polished);
      if (ei > next_ei) {
        next_ei = ei;
        next = std::move(polished);
      }
    }
    record(next);
  }
  if (!any_finite) {
    throw NumericalError(fmt::format(
        "Bayesian optimization failed: all {} evaluations were infeasible",
        trace.iterations.size()));
  }
  return trace;
}

BoxBounds tuning_bounds(const TimeSeries& train, std::size_t num_components) {
  const HyperPosterior posterior(train, num_components);
  const double f_nyq = posterior.nyquist();
  BoxBounds box;
  for (std::size_t q = 0; q < num_components; ++q) {
    box.lower.push_back(0.0);
    box.upper.push_back(f_nyq);
  }
  for (std::size_t q = 0; q < num_components; ++q) {
    box.lower.push_back(std::log(0.1 / posterior.x_range()));
    box.upper.push_back(std::log(10.0 * f_nyq));
  }
  return box;
}

namespace {

// Profiles weights and noise out of the penalized likelihood with the
// frequencies and scales held fixed. Returns the optimum in
// (log w_1..Q, log noise) and its value (-inf on failure).
std::pair<Eigen::VectorXd, double> profile_weights_and_noise(
    const HyperPosterior& posterior, const std::vector<double>& frequencies,
    const std::vector<double>& scales, const Eigen::VectorXd& start,
    const MinimizeOptions& options) {
  const std::size_t nq = posterior.num_components();
  const auto n = static_cast<Eigen::Index>(nq);
  const DifferentiableObjective objective = [&](const Eigen::VectorXd& z,
                                                Eigen::VectorXd& g) {
    g.setZero(n + 1);
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > 700.0) {
      return std::numeric_limits<double>::infinity();
    }
    std::vector<double> w(nq);
    for (std::size_t q = 0; q < nq; ++q) {
      w[q] = std::exp(z[static_cast<Eigen::Index>(q)]);
    }
    double value = kNegInf;
    Eigen::VectorXd full;
    try {
      const SMKernelParams params(std::move(w), frequencies, scales);
      value = posterior.penalized_log_likelihood(params, NoiseParam(std::exp(z[n])),
                                                 &full);
    } catch (const std::invalid_argument&) {
      return std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(value)) return std::numeric_limits<double>::infinity();
    g.head(n) = -full.head(n);
    g[n] = -full[3 * n];
    return -value;
  };
  const auto result = minimize_bfgs(objective, start, options);
  return {result.x, -result.value};
}

}  // namespace

TuneResult tune(const TimeSeries& train, std::size_t num_components,
                const TuneConfig& config) {
  config.validate();
  if (train.size() < 4) {
    throw InputError(fmt::format("tuning needs at least 4 points, got {}",
                                 train.size()));
  }
  const HyperPosterior posterior(train, num_components);
  const auto box = tuning_bounds(train, num_components);
  const std::size_t nq = num_components;
  const auto n = static_cast<Eigen::Index>(nq);

  Eigen::VectorXd start(n + 1);
  const double var = sample_variance(posterior.y());
  start.head(n).setConstant(std::log(var / static_cast<double>(nq)));
  start[n] = std::log(0.1 * var);

  MinimizeOptions inner;
  inner.max_iterations = config.inner_iterations;
  std::vector<Eigen::VectorXd> inner_optima;

  auto split_candidate = [nq](std::span<const double> c) {
    std::vector<double> mu(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(nq));
    std::vector<double> v(nq);
    for (std::size_t q = 0; q < nq; ++q) v[q] = std::exp(c[nq + q]);
    return std::make_pair(std::move(mu), std::move(v));
  };

  const auto objective = [&](std::span<const double> candidate) {
    const auto [mu, v] = split_candidate(candidate);
    auto [z, value] = profile_weights_and_noise(posterior, mu, v, start, inner);
    inner_optima.push_back(std::move(z));
    return value;
  };
  TuneTrace trace = bayes_optimize(objective, box, config);
  trace.dimension_names.clear();
  for (std::size_t q = 1; q <= nq; ++q) {
    trace.dimension_names.push_back(fmt::format("mu_{}", q));
  }
  for (std::size_t q = 1; q <= nq; ++q) {
    trace.dimension_names.push_back(fmt::format("log_v_{}", q));
  }

  const auto& winner = trace.iterations[trace.best_index];
  const auto [mu, v] = split_candidate(winner.candidate);
  MinimizeOptions full;
  full.max_iterations = 500;
  const auto [z, value] = profile_weights_and_noise(
      posterior, mu, v, inner_optima[trace.best_index], full);
  std::vector<double> w(nq);
  for (std::size_t q = 0; q < nq; ++q) w[q] = std::exp(z[static_cast<Eigen::Index>(q)]);
  SMKernelParams params(std::move(w), mu, v);
  NoiseParam noise(std::exp(z[n]));
  trace.best_params = params;
  trace.best_noise = noise;
  return TuneResult{posterior.model_at(params, noise), std::move(trace), value};
}

void export_trace(const TuneTrace& trace, std::ostream& out) {
  if (trace.iterations.empty()) throw InputError("tuning trace is empty");
  out << "iter,objective,best_so_far";
  for (const auto& name : trace.dimension_names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const auto& it = trace.iterations[i];
    out << i + 1 << ',' << format_real(it.objective) << ','
        << format_real(it.best_so_far);
    for (double value : it.candidate) out << ',' << format_real(value);
    out << '\n';
  }
}

}  // namespace specmix
