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

#include "specmix/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "specmix/error.hpp"
#include "specmix/random.hpp"

namespace specmix {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kHalfLog2Pi;
}

double sigmoid(double r) {
  if (r >= 0.0) return 1.0 / (1.0 + std::exp(-r));
  const double e = std::exp(r);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double x_range_of(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *hi - *lo;
}

}  // namespace

HyperPrior HyperPrior::for_data(std::span<const double> x,
                                std::span<const double> y,
                                std::size_t num_components) {
  const double var = sample_variance(y);
  HyperPrior prior;
  prior.log_weight_mean = std::log(var / static_cast<double>(num_components));
  prior.nyquist = 1.0 / (2.0 * median_spacing(x));
  prior.log_scale_mean = std::log(2.0 / x_range_of(x));
  prior.log_noise_mean = std::log(0.1 * var);
  return prior;
}

double HyperPrior::log_density(const SMKernelParams& params,
                               const NoiseParam& noise,
                               Eigen::VectorXd* grad) const {
  const std::size_t nq = params.num_components();
  if (grad) grad->setZero(static_cast<Eigen::Index>(3 * nq + 1));
  double lp = 0.0;
  for (std::size_t q = 0; q < nq; ++q) {
    const double mu = params.frequencies()[q];
    if (mu < 0.0 || mu > nyquist) return kNegInf;
    const double lw = std::log(params.weights()[q]);
    const double lv = std::log(params.scales()[q]);
    lp += log_normal_pdf(lw, log_weight_mean, log_weight_sd);
    lp += log_normal_pdf(lv, log_scale_mean, log_scale_sd);
    lp -= std::log(nyquist);
    if (grad) {
      (*grad)[static_cast<Eigen::Index>(q)] =
          -(lw - log_weight_mean) / (log_weight_sd * log_weight_sd);
      (*grad)[static_cast<Eigen::Index>(2 * nq + q)] =
          -(lv - log_scale_mean) / (log_scale_sd * log_scale_sd);
    }
  }
  const double ln = std::log(noise.variance());
  lp += log_normal_pdf(ln, log_noise_mean, log_noise_sd);
  if (grad) {
    (*grad)[static_cast<Eigen::Index>(3 * nq)] =
        -(ln - log_noise_mean) / (log_noise_sd * log_noise_sd);
  }
  return lp;
}

HyperPosterior::HyperPosterior(const TimeSeries& train,
                               std::size_t num_components)
    : num_components_(num_components) {
  if (num_components < 1) throw InputError("Q must be at least 1");
  auto [standardized, scaling] = standardize(train);
  x_ = standardized.timestamps();
  y_ = standardized.values();
  scaling_ = scaling;
  prior_ = HyperPrior::for_data(x_, y_, num_components);
  x_range_ = x_range_of(x_);
}

Eigen::VectorXd HyperPosterior::to_unconstrained(const SMKernelParams& params,
                                                 const NoiseParam& noise) const {
  const std::size_t nq = num_components_;
  if (params.num_components() != nq) {
    throw InputError(fmt::format("expected {} mixture components, got {}", nq,
                                 params.num_components()));
  }
  Eigen::VectorXd theta(static_cast<Eigen::Index>(dim()));
  for (std::size_t q = 0; q < nq; ++q) {
    const auto i = static_cast<Eigen::Index>(q);
    const auto n = static_cast<Eigen::Index>(nq);
    const double p =
        std::clamp(params.frequencies()[q] / nyquist(), 1e-9, 1.0 - 1e-9);
    theta[i] = std::log(params.weights()[q]);
    theta[n + i] = std::log(p / (1.0 - p));
    theta[2 * n + i] = std::log(params.scales()[q]);
  }
  theta[static_cast<Eigen::Index>(3 * nq)] = std::log(noise.variance());
  return theta;
}

std::pair<SMKernelParams, NoiseParam> HyperPosterior::to_constrained(
    const Eigen::VectorXd& theta) const {
  const std::size_t nq = num_components_;
  if (static_cast<std::size_t>(theta.size()) != dim()) {
    throw InputError(fmt::format("expected a {}-dimensional hyperparameter "
                                 "vector, got {}",
                                 dim(), theta.size()));
  }
  std::vector<double> w(nq);
  std::vector<double> mu(nq);
  std::vector<double> v(nq);
  const auto n = static_cast<Eigen::Index>(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    const auto i = static_cast<Eigen::Index>(q);
    w[q] = std::exp(theta[i]);
    mu[q] = nyquist() * sigmoid(theta[n + i]);
    v[q] = std::exp(theta[2 * n + i]);
  }
  return {SMKernelParams(std::move(w), std::move(mu), std::move(v)),
          NoiseParam(std::exp(theta[3 * n]))};
}

double HyperPosterior::penalized_log_likelihood(const SMKernelParams& params,
                                                const NoiseParam& noise,
                                                Eigen::VectorXd* grad) const {
  Eigen::VectorXd prior_grad;
  const double lp = prior_.log_density(params, noise, grad ? &prior_grad : nullptr);
  if (!std::isfinite(lp)) return kNegInf;
  try {
    const GpModel model(x_, y_, params, noise, scaling_);
    if (!grad) return model.log_marginal_likelihood_value() + lp;
    auto evidence = model.log_marginal_likelihood();
    *grad = evidence.gradient + prior_grad;
    return evidence.value + lp;
  } catch (const NumericalError&) {
    if (grad) grad->setZero(static_cast<Eigen::Index>(dim()));
    return kNegInf;
  }
}

double HyperPosterior::map_objective(const Eigen::VectorXd& theta,
                                     Eigen::VectorXd& grad) const {
  grad.setZero(static_cast<Eigen::Index>(dim()));
  if (!theta.allFinite()) return kNegInf;
  std::optional<std::pair<SMKernelParams, NoiseParam>> constrained;
  try {
    constrained.emplace(to_constrained(theta));
  } catch (const std::invalid_argument&) {
    return kNegInf;  // exp under/overflow
  }
  const double value =
      penalized_log_likelihood(constrained->first, constrained->second, &grad);
  if (!std::isfinite(value)) {
    grad.setZero();
    return kNegInf;
  }
  const auto n = static_cast<Eigen::Index>(num_components_);
  for (Eigen::Index q = 0; q < n; ++q) {
    const double s = sigmoid(theta[n + q]);
    grad[n + q] *= nyquist() * s * (1.0 - s);
  }
  return value;
}

double HyperPosterior::neg_log_posterior(const Eigen::VectorXd& theta,
                                         Eigen::VectorXd& grad) const {
  const double value = map_objective(theta, grad);
  if (!std::isfinite(value)) {
    grad.setZero(static_cast<Eigen::Index>(dim()));
    return std::numeric_limits<double>::infinity();
  }
  // log |d mu / d r| = log f_nyq + log s(r) + log(1 - s(r))
  double log_jacobian = 0.0;
  const auto n = static_cast<Eigen::Index>(num_components_);
  for (Eigen::Index q = 0; q < n; ++q) {
    const double r = theta[n + q];
    log_jacobian += std::log(nyquist()) - softplus(-r) - softplus(r);
    grad[n + q] += 1.0 - 2.0 * sigmoid(r);
  }
  grad = -grad;
  return -(value + log_jacobian);
}

GpModel HyperPosterior::model_at(const SMKernelParams& params,
                                 const NoiseParam& noise) const {
  return GpModel(x_, y_, params, noise, scaling_);
}

GpModel HyperPosterior::model_at(const Eigen::VectorXd& theta) const {
  auto [params, noise] = to_constrained(theta);
  return model_at(params, noise);
}

std::pair<SMKernelParams, NoiseParam> init_hyperparams(
    const TimeSeries& train, std::size_t num_components, std::uint64_t seed) {
  if (train.size() < 4) {
    throw InputError(fmt::format(
        "hyperparameter initialization needs at least 4 points, got {}",
        train.size()));
  }
  if (num_components < 1) throw InputError("Q must be at least 1");
  const auto [standardized, scaling] = standardize(train);
  const auto& x = standardized.timestamps();
  const double nyquist = 1.0 / (2.0 * median_spacing(x));
  const double range = x_range_of(x);
  const double var = sample_variance(standardized.values());

  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, nyquist);
  std::normal_distribution<double> normal(0.0, 2.0 / range);
  std::vector<double> frequencies(num_components);
  std::vector<double> scales(num_components);
  for (auto& f : frequencies) f = uniform(rng);
  for (auto& s : scales) s = std::max(std::fabs(normal(rng)), 1e-6);
  std::vector<double> weights(num_components,
                              var / static_cast<double>(num_components));
  return {SMKernelParams(std::move(weights), std::move(frequencies),
                         std::move(scales)),
          NoiseParam(0.1 * var)};
}

MapFit map_estimate(const TimeSeries& train, std::size_t num_components,
                    const MapOptions& options) {
  if (options.restarts < 1) throw InputError("restarts must be at least 1");
  const HyperPosterior posterior(train, num_components);
  const DifferentiableObjective negated = [&posterior](const Eigen::VectorXd& t,
                                                       Eigen::VectorXd& g) {
    const double value = posterior.map_objective(t, g);
    g = -g;
    return -value;
  };

  std::vector<double> objectives;
  std::optional<Eigen::VectorXd> best_theta;
  double best_value = kNegInf;
  double best_initial = kNegInf;
  std::size_t best_restart = 0;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    const auto [params, noise] =
        init_hyperparams(train, num_components, derive_seed(options.seed, r));
    const Eigen::VectorXd theta0 = posterior.to_unconstrained(params, noise);
    Eigen::VectorXd scratch;
    const double initial = posterior.map_objective(theta0, scratch);
    if (!std::isfinite(initial)) {
      objectives.push_back(kNegInf);
      continue;
    }
    const auto result = minimize_bfgs(negated, theta0, options.optimizer);
    const double value = -result.value;
    objectives.push_back(value);
    if (value > best_value) {
      best_value = value;
      best_initial = initial;
      best_theta = result.x;
      best_restart = r;
    }
  }
  if (!best_theta) {
    throw NumericalError(fmt::format(
        "MAP estimation failed: all {} restarts hit singular covariances",
        options.restarts));
  }
  return MapFit{posterior.model_at(*best_theta), best_value, best_initial,
                best_restart, std::move(objectives)};
}

MapFit map_estimate(const TimeSeries& train, std::size_t num_components,
                    std::size_t restarts, std::uint64_t seed) {
  MapOptions options;
  options.restarts = restarts;
  options.seed = seed;
  return map_estimate(train, num_components, options);
}

double neg_log_posterior(const Eigen::VectorXd& theta, const TimeSeries& train,
                         Eigen::VectorXd& grad) {
  const std::size_t nq = (static_cast<std::size_t>(theta.size()) - 1) / 3;
  return HyperPosterior(train, nq).neg_log_posterior(theta, grad);
}

HmcChain hmc_sample(const TimeSeries& train, std::size_t num_components,
                    const HmcConfig& config) {
  config.validate();
  const HyperPosterior posterior(train, num_components);

  std::vector<Eigen::VectorXd> inits;
  if (config.warm_start_restarts > 0) {
    MapOptions options;
    options.restarts = config.warm_start_restarts;
    options.seed = config.seed;
    options.optimizer.max_iterations = 200;
    const auto fit = map_estimate(train, num_components, options);
    const Eigen::VectorXd center = posterior.to_unconstrained(
        fit.model.params(), fit.model.noise());
    for (std::size_t c = 0; c < config.n_chains; ++c) {
      Rng rng(derive_seed(config.seed, 2000 + c));
      std::normal_distribution<double> normal(0.0, 0.05);
      Eigen::VectorXd theta = center;
      for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += normal(rng);
      Eigen::VectorXd scratch;
      if (!std::isfinite(posterior.neg_log_posterior(theta, scratch))) {
        theta = center;
      }
      inits.push_back(std::move(theta));
    }
  } else {
    for (std::size_t c = 0; c < config.n_chains; ++c) {
      const auto [params, noise] = init_hyperparams(
          train, num_components, derive_seed(config.seed, 2000 + c));
      inits.push_back(posterior.to_unconstrained(params, noise));
    }
  }

  const LogDensity target = [&posterior](const Eigen::VectorXd& theta,
                                         Eigen::VectorXd& grad) {
    const double value = posterior.neg_log_posterior(theta, grad);
    grad = -grad;
    return -value;
  };
  return run_nuts(target, inits, config);
}

std::vector<std::size_t> thin_indices(std::size_t n, std::size_t max_draws) {
  std::vector<std::size_t> out;
  if (n <= max_draws) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  for (std::size_t k = 0; k < max_draws; ++k) out.push_back(k * n / max_draws);
  return out;
}

std::vector<std::pair<SMKernelParams, NoiseParam>> thinned_draws(
    const HmcChain& chain, const TimeSeries& train, std::size_t max_draws) {
  if (chain.draws.empty()) throw InputError("HMC chain has no draws");
  const HyperPosterior posterior(train, (chain.dim - 1) / 3);
  std::vector<std::pair<SMKernelParams, NoiseParam>> out;
  for (std::size_t i : thin_indices(chain.draws.size(), max_draws)) {
    out.push_back(posterior.to_constrained(chain.draws[i]));
  }
  return out;
}

PredictiveDistribution predictive_from_draws(
    std::span<const std::pair<SMKernelParams, NoiseParam>> draws,
    const TimeSeries& train, std::span<const double> query_x,
    IntervalMode mode) {
  if (draws.empty()) throw InputError("posterior mixture needs at least one draw");
  const auto [standardized, scaling] = standardize(train);
  std::vector<double> xs(query_x.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = scaling.to_std_x(query_x[i]);
  }
  const auto m = static_cast<Eigen::Index>(xs.size());
  const auto n_draws = static_cast<double>(draws.size());
  Eigen::MatrixXd means(m, static_cast<Eigen::Index>(draws.size()));
  Eigen::VectorXd mean_variance = Eigen::VectorXd::Zero(m);
  for (std::size_t d = 0; d < draws.size(); ++d) {
    const auto& [params, noise] = draws[d];
    const GpModel model(standardized.timestamps(), standardized.values(),
                        params, noise, scaling);
    const auto raw = model.predict_standardized(xs);
    const double k0 = params.total_weight();
    const double extra =
        mode == IntervalMode::kObservation ? noise.variance() : 0.0;
    means.col(static_cast<Eigen::Index>(d)) = raw.mean;
    for (Eigen::Index i = 0; i < m; ++i) {
      mean_variance[i] += checked_variance(raw.variance[i], k0) + extra;
    }
  }
  PredictiveDistribution out;
  out.query_x.assign(query_x.begin(), query_x.end());
  out.mean.resize(xs.size());
  out.sd.resize(xs.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mixture_mean = means.row(i).mean();
    const double spread =
        (means.row(i).array() - mixture_mean).square().sum() / n_draws;
    const double variance = mean_variance[i] / n_draws + spread;
    out.mean[static_cast<std::size_t>(i)] = scaling.from_std_y(mixture_mean);
    out.sd[static_cast<std::size_t>(i)] = std::sqrt(variance) * scaling.y_std;
  }
  out.fill_intervals();
  return out;
}

PredictiveDistribution predictive_from_chain(const HmcChain& chain,
                                             const TimeSeries& train,
                                             std::span<const double> query_x,
                                             IntervalMode mode) {
  const auto draws = thinned_draws(chain, train);
  return predictive_from_draws(draws, train, query_x, mode);
}

void write_chain_csv(const HmcChain& chain, const TimeSeries& train,
                     std::ostream& out) {
  const std::size_t nq = (chain.dim - 1) / 3;
  const HyperPosterior posterior(train, nq);
  out << "chain,draw,log_posterior";
  for (const char* prefix : {"w", "mu", "v"}) {
    for (std::size_t q = 1; q <= nq; ++q) out << ',' << prefix << '_' << q;
  }
  out << ",noise_var\n";
  for (std::size_t i = 0; i < chain.draws.size(); ++i) {
    const auto [params, noise] = posterior.to_constrained(chain.draws[i]);
    out << chain.chain_of(i) << ',' << i % chain.n_samples << ','
        << format_real(chain.log_posterior[i]);
    for (const auto* list :
         {&params.weights(), &params.frequencies(), &params.scales()}) {
      for (double value : *list) out << ',' << format_real(value);
    }
    out << ',' << format_real(noise.variance()) << '\n';
  }
}

}  // namespace specmix
