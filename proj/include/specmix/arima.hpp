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
 * @file arima.hpp
 * @brief Non-seasonal ARIMA(p, d, q) baseline: conditional-sum-of-squares
 * estimation, AICc order selection and psi-weight interval forecasts.
 *
 * The differenced series w_t follows
 *   w_t = c + sum_i phi_i w_{t-i} + e_t + sum_j theta_j e_{t-j}
 * with the intercept c present only when d = 0.
 */

#ifndef SPECMIX_ARIMA_HPP
#define SPECMIX_ARIMA_HPP

#include <span>
#include <vector>

#include "specmix/gp.hpp"
#include "specmix/timeseries.hpp"

namespace specmix {

struct ArimaOrder {
  int p = 0;
  int d = 0;
  int q = 0;

  /// Throws InputError outside p <= 3, d <= 2, q <= 3 (all nonnegative).
  void validate() const;
  friend bool operator==(const ArimaOrder&, const ArimaOrder&) = default;
};

struct ArimaModel {
  ArimaOrder order;
  std::vector<double> ar_coeffs;
  std::vector<double> ma_coeffs;
  double intercept = 0.0;
  double innovation_variance = 1.0;
  double aicc = 0.0;
  double css = 0.0;
  /// Native-unit training data; the recursion state (differenced series
  /// and residuals) is derived from it.
  std::vector<double> train_t;
  std::vector<double> train_y;
  std::vector<double> differenced;
  std::vector<double> residuals;
};

std::vector<double> difference(std::span<const double> y, int d);

/// Autocovariances at lags 0..n-1 of the stationary ARMA process
/// w_t = sum_i phi_i w_{t-i} + e_t + sum_j theta_j e_{t-j} with unit
/// innovation variance.
std::vector<double> arma_autocovariance(std::span<const double> ar,
                                        std::span<const double> ma, std::size_t n);

/// Inverts difference(): `initial` holds the first d values of the original
/// series.
std::vector<double> integrate(std::span<const double> differenced, int d,
                              std::span<const double> initial);

/// Moduli of the roots of 1 - sum_i phi_i z^i (pass ma coefficients negated
/// for 1 + sum_j theta_j z^j).
std::vector<double> polynomial_root_moduli(std::span<const double> phi);

/// Conditional residuals e_t (zero for t < p) of the differenced series.
std::vector<double> css_residuals(std::span<const double> w, double intercept,
                                  std::span<const double> ar,
                                  std::span<const double> ma);

/// Fits by conditional sum of squares: Hannan-Rissanen start, then BFGS
/// over partial-autocorrelation coordinates that keep the AR part
/// stationary and the MA part invertible. Throws NumericalError when the
/// optimum sits on the unit circle (within 1e-6) or the series is too short
/// (fewer than p + q + 2 points after differencing).
ArimaModel fit_arima(const TimeSeries& train, const ArimaOrder& order);

/// Rebuilds the recursion state of a model from its coefficients and
/// training data (used when loading a saved model).
void restore_state(ArimaModel& model);

/// AICc grid search over p, q in [0, 3], d in [0, 2] with
/// n - d >= p + q + 2; ties go to smaller p + q, then d, then p.
ArimaOrder select_order(const TimeSeries& train);

/// Recursive forecasts with future innovations at zero; variance from the
/// psi weights of the integrated process. Query times continue the training
/// grid at its median spacing.
PredictiveDistribution forecast_arima(const ArimaModel& model, std::size_t horizon);

/// One-step-ahead in-sample fit at the training times (sd = innovation sd).
PredictiveDistribution fitted_arima(const ArimaModel& model);

}  // namespace specmix

#endif  // SPECMIX_ARIMA_HPP
