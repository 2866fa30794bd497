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

#include "specmix/arima.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "specmix/error.hpp"
#include "specmix/optimize.hpp"

namespace specmix {

namespace {

constexpr double kRootTolerance = 1e-6;
constexpr double kLog2Pi = 1.8378770664093454836;

// Durbin-Levinson map from partial autocorrelations in (-1, 1) to the
// coefficients of a stationary AR polynomial.
std::vector<double> pacf_to_coeffs(std::span<const double> r) {
  std::vector<double> phi;
  for (std::size_t k = 0; k < r.size(); ++k) {
    std::vector<double> next(k + 1);
    for (std::size_t j = 0; j < k; ++j) next[j] = phi[j] - r[k] * phi[k - 1 - j];
    next[k] = r[k];
    phi = std::move(next);
  }
  return phi;
}

// Inverse of pacf_to_coeffs; nullopt when phi is not strictly stationary.
std::optional<std::vector<double>> coeffs_to_pacf(std::vector<double> phi) {
  std::vector<double> r(phi.size());
  for (std::size_t k = phi.size(); k-- > 0;) {
    const double rk = phi[k];
    if (!(std::fabs(rk) < 1.0)) return std::nullopt;
    r[k] = rk;
    std::vector<double> prev(k);
    for (std::size_t j = 0; j < k; ++j) {
      prev[j] = (phi[j] + rk * phi[k - 1 - j]) / (1.0 - rk * rk);
    }
    phi = std::move(prev);
  }
  return r;
}

// Shrinks coefficients geometrically until the polynomial is stationary;
// returns the corresponding partial autocorrelations (clamped to 0.99).
std::vector<double> project_to_pacf(std::vector<double> phi) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    if (auto r = coeffs_to_pacf(phi)) {
      for (double& v : *r) v = std::clamp(v, -0.99, 0.99);
      return *r;
    }
    double factor = 0.9;
    for (double& v : phi) {
      v *= factor;
      factor *= 0.9;
    }
  }
  return std::vector<double>(phi.size(), 0.0);
}

struct Coefficients {
  double intercept = 0.0;
  std::vector<double> ar;
  std::vector<double> ma;
};

// OLS fit of y on the columns of x; nullopt if underdetermined.
std::optional<Eigen::VectorXd> least_squares(const Eigen::MatrixXd& x,
                                             const Eigen::VectorXd& y) {
  if (x.rows() < x.cols() + 1 || x.cols() == 0) return std::nullopt;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) return std::nullopt;
  return Eigen::VectorXd(qr.solve(y));
}

// Hannan-Rissanen: long-AR residuals, then a linear regression on lagged
// values and lagged residuals.
Coefficients hannan_rissanen(std::span<const double> w, int p, int q,
                             bool with_intercept) {
  const int n = static_cast<int>(w.size());
  Coefficients start;
  start.ar.assign(static_cast<std::size_t>(p), 0.0);
  start.ma.assign(static_cast<std::size_t>(q), 0.0);
  if (with_intercept) start.intercept = mean(w);

  std::vector<double> innovations(w.size(), 0.0);
  int first_innovation = 0;
  if (q > 0) {
    const int m = std::min((n - 2) / 2, std::max(p + q, 4));
    if (m < q) return start;
    Eigen::MatrixXd x(n - m, m + 1);
    Eigen::VectorXd y(n - m);
    for (int t = m; t < n; ++t) {
      x(t - m, 0) = 1.0;
      for (int i = 1; i <= m; ++i) x(t - m, i) = w[static_cast<std::size_t>(t - i)];
      y[t - m] = w[static_cast<std::size_t>(t)];
    }
    const auto beta = least_squares(x, y);
    if (!beta) return start;
    const Eigen::VectorXd fitted = x * *beta;
    for (int t = m; t < n; ++t) {
      innovations[static_cast<std::size_t>(t)] = y[t - m] - fitted[t - m];
    }
    first_innovation = m;
  }

  const int t0 = std::max(p, first_innovation + q);
  const int cols = p + q + (with_intercept ? 1 : 0);
  if (cols == 0 || n - t0 < cols + 1) return start;
  Eigen::MatrixXd x(n - t0, cols);
  Eigen::VectorXd y(n - t0);
  for (int t = t0; t < n; ++t) {
    int c = 0;
    if (with_intercept) x(t - t0, c++) = 1.0;
    for (int i = 1; i <= p; ++i) x(t - t0, c++) = w[static_cast<std::size_t>(t - i)];
    for (int j = 1; j <= q; ++j) {
      x(t - t0, c++) = innovations[static_cast<std::size_t>(t - j)];
    }
    y[t - t0] = w[static_cast<std::size_t>(t)];
  }
  const auto beta = least_squares(x, y);
  if (!beta) return start;
  int c = 0;
  if (with_intercept) start.intercept = (*beta)[c++];
  for (int i = 0; i < p; ++i) start.ar[static_cast<std::size_t>(i)] = (*beta)[c++];
  for (int j = 0; j < q; ++j) start.ma[static_cast<std::size_t>(j)] = (*beta)[c++];
  return start;
}

double sum_squares_from(std::span<const double> e, std::size_t from) {
  double ss = 0.0;
  for (std::size_t t = from; t < e.size(); ++t) ss += e[t] * e[t];
  return ss;
}

double min_modulus(std::span<const double> phi) {
  const auto moduli = polynomial_root_moduli(phi);
  return moduli.empty() ? std::numeric_limits<double>::infinity()
                        : *std::min_element(moduli.begin(), moduli.end());
}

std::vector<double> negated(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x = -x;
  return out;
}

// psi weights of the ARIMA process (differencing folded in), j = 0..h-1.
std::vector<double> psi_weights(const ArimaModel& model, std::size_t h) {
  std::vector<double> psi(h, 0.0);
  const auto& phi = model.ar_coeffs;
  const auto& theta = model.ma_coeffs;
  for (std::size_t j = 0; j < h; ++j) {
    double value = j == 0 ? 1.0 : 0.0;
    if (j >= 1 && j <= theta.size()) value += theta[j - 1];
    for (std::size_t i = 1; i <= std::min(j, phi.size()); ++i) {
      value += phi[i - 1] * psi[j - i];
    }
    psi[j] = value;
  }
  for (int k = 0; k < model.order.d; ++k) {
    for (std::size_t j = 1; j < h; ++j) psi[j] += psi[j - 1];
  }
  return psi;
}


// Exact Gaussian -2 log-likelihood of the stationary ARMA fit with the
// innovation variance profiled out, via Durbin-Levinson prediction errors.
// The profiled variance is extended to n_total points. Returns +inf when
// the prediction variances degenerate.
double exact_neg2_loglik(std::span<const double> w, double mean,
                         std::span<const double> ar, std::span<const double> ma,
                         double n_total) {
  const std::size_t n = w.size();
  const auto gamma = arma_autocovariance(ar, ma, n);
  std::vector<double> phi(n, 0.0);
  std::vector<double> prev(n, 0.0);
  double v = gamma[0];
  double weighted_ss = 0.0;
  double log_det = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (!(v > 0.0) || !std::isfinite(v)) return std::numeric_limits<double>::infinity();
    double pred = 0.0;
    for (std::size_t j = 1; j <= t; ++j) pred += phi[j - 1] * (w[t - j] - mean);
    const double e = w[t] - mean - pred;
    weighted_ss += e * e / v;
    log_det += std::log(v);
    if (t + 1 == n) break;
    double num = gamma[t + 1];
    for (std::size_t j = 1; j <= t; ++j) num -= phi[j - 1] * gamma[t + 1 - j];
    const double reflection = num / v;
    std::copy(phi.begin(), phi.begin() + static_cast<std::ptrdiff_t>(t), prev.begin());
    phi[t] = reflection;
    for (std::size_t j = 1; j <= t; ++j) phi[j - 1] = prev[j - 1] - reflection * prev[t - j];
    v *= 1.0 - reflection * reflection;
  }
  const double sigma2 = weighted_ss / static_cast<double>(n);
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    return std::numeric_limits<double>::infinity();
  }
  return n_total * (kLog2Pi + std::log(sigma2) + 1.0) + log_det;
}

}  // namespace

void ArimaOrder::validate() const {
  if (p < 0 || p > 3 || q < 0 || q > 3 || d < 0 || d > 2) {
    throw InputError(fmt::format(
        "ARIMA order ({},{},{}) outside p,q in [0,3], d in [0,2]", p, d, q));
  }
}

std::vector<double> arma_autocovariance(std::span<const double> ar,
                                        std::span<const double> ma,
                                        std::size_t n) {
  const std::size_t p = ar.size();
  const std::size_t q = ma.size();
  std::vector<double> theta(q + 1, 1.0);
  for (std::size_t j = 0; j < q; ++j) theta[j + 1] = ma[j];
  std::vector<double> psi(q + 1, 0.0);
  for (std::size_t j = 0; j <= q; ++j) {
    psi[j] = theta[j];
    for (std::size_t i = 1; i <= p && i <= j; ++i) psi[j] += ar[i - 1] * psi[j - i];
  }
  auto forcing = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t j = k; j <= q; ++j) s += theta[j] * psi[j - k];
    return s;
  };
  const auto m = static_cast<Eigen::Index>(p + 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd b(m);
  for (std::size_t k = 0; k <= p; ++k) {
    for (std::size_t i = 1; i <= p; ++i) {
      const std::size_t lag = k > i ? k - i : i - k;
      a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(lag)) -= ar[i - 1];
    }
    b[static_cast<Eigen::Index>(k)] = forcing(k);
  }
  const Eigen::VectorXd head = a.colPivHouseholderQr().solve(b);
  std::vector<double> gamma(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (k <= p) {
      gamma[k] = head[static_cast<Eigen::Index>(k)];
      continue;
    }
    double s = k <= q ? forcing(k) : 0.0;
    for (std::size_t i = 1; i <= p; ++i) s += ar[i - 1] * gamma[k - i];
    gamma[k] = s;
  }
  return gamma;
}

std::vector<double> difference(std::span<const double> y, int d) {
  std::vector<double> out(y.begin(), y.end());
  for (int k = 0; k < d; ++k) {
    if (out.empty()) break;
    for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
    out.pop_back();
  }
  return out;
}

std::vector<double> integrate(std::span<const double> differenced, int d,
                              std::span<const double> initial) {
  if (initial.size() != static_cast<std::size_t>(d)) {
    throw InputError(fmt::format(
        "integration of order {} needs {} initial values, got {}", d, d,
        initial.size()));
  }
  std::vector<double> out(differenced.begin(), differenced.end());
  for (int k = d - 1; k >= 0; --k) {
    // First value of the k-th difference of the original series.
    const double anchor = difference(initial, k).front();
    std::vector<double> level(out.size() + 1);
    level[0] = anchor;
    for (std::size_t i = 0; i < out.size(); ++i) level[i + 1] = level[i] + out[i];
    out = std::move(level);
  }
  return out;
}

std::vector<double> polynomial_root_moduli(std::span<const double> phi) {
  std::size_t degree = phi.size();
  while (degree > 0 && phi[degree - 1] == 0.0) --degree;
  if (degree == 0) return {};
  // Roots of 1 - phi_1 z - ... - phi_k z^k are reciprocals of the
  // eigenvalues of the companion matrix of z^k - phi_1 z^{k-1} - ... - phi_k.
  const auto k = static_cast<Eigen::Index>(degree);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) companion(0, i) = phi[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < k; ++i) companion(i, i - 1) = 1.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<double> moduli;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double abs_eig = std::abs(solver.eigenvalues()[i]);
    moduli.push_back(abs_eig > 0.0 ? 1.0 / abs_eig
                                   : std::numeric_limits<double>::infinity());
  }
  return moduli;
}

std::vector<double> css_residuals(std::span<const double> w, double intercept,
                                  std::span<const double> ar,
                                  std::span<const double> ma) {
  const std::size_t p = ar.size();
  std::vector<double> e(w.size(), 0.0);
  for (std::size_t t = p; t < w.size(); ++t) {
    double pred = intercept;
    for (std::size_t i = 1; i <= p; ++i) pred += ar[i - 1] * w[t - i];
    for (std::size_t j = 1; j <= ma.size() && j <= t; ++j) {
      pred += ma[j - 1] * e[t - j];
    }
    e[t] = w[t] - pred;
  }
  return e;
}

void restore_state(ArimaModel& model) {
  model.differenced = difference(model.train_y, model.order.d);
  model.residuals = css_residuals(model.differenced, model.intercept,
                                  model.ar_coeffs, model.ma_coeffs);
}

ArimaModel fit_arima(const TimeSeries& train, const ArimaOrder& order) {
  order.validate();
  const int p = order.p;
  const int q = order.q;
  const bool with_intercept = order.d == 0;
  const auto w = difference(train.values(), order.d);
  const int n = static_cast<int>(w.size());
  if (n < p + q + 2) {
    throw InputError(fmt::format(
        "ARIMA({},{},{}) needs at least {} points after differencing, have {}",
        p, order.d, q, p + q + 2, n));
  }
  const double n_eff = static_cast<double>(n - p);

  Coefficients coeffs = hannan_rissanen(w, p, q, with_intercept);
  const bool ar_ok =
      min_modulus(coeffs.ar) > 1.0 + kRootTolerance;
  const bool needs_search = q > 0 || (p > 0 && !ar_ok);

  if (needs_search) {
    const auto ar_pacf = project_to_pacf(coeffs.ar);
    const auto ma_pacf = project_to_pacf(negated(coeffs.ma));
    const int offset = with_intercept ? 1 : 0;
    Eigen::VectorXd raw(offset + p + q);
    if (with_intercept) raw[0] = coeffs.intercept;
    for (int i = 0; i < p; ++i) raw[offset + i] = std::atanh(ar_pacf[static_cast<std::size_t>(i)]);
    for (int j = 0; j < q; ++j) {
      raw[offset + p + j] = std::atanh(ma_pacf[static_cast<std::size_t>(j)]);
    }
    auto unpack = [&](const Eigen::VectorXd& x) {
      Coefficients c;
      c.intercept = with_intercept ? x[0] : 0.0;
      std::vector<double> ra(static_cast<std::size_t>(p));
      std::vector<double> rm(static_cast<std::size_t>(q));
      for (int i = 0; i < p; ++i) ra[static_cast<std::size_t>(i)] = std::tanh(x[offset + i]);
      for (int j = 0; j < q; ++j) rm[static_cast<std::size_t>(j)] = std::tanh(x[offset + p + j]);
      c.ar = pacf_to_coeffs(ra);
      c.ma = negated(pacf_to_coeffs(rm));
      return c;
    };
    auto concentrated = [&](const Eigen::VectorXd& x) {
      if (!x.allFinite()) return std::numeric_limits<double>::infinity();
      const auto c = unpack(x);
      const auto e = css_residuals(w, c.intercept, c.ar, c.ma);
      const double ss = sum_squares_from(e, static_cast<std::size_t>(p));
      if (!std::isfinite(ss) || ss <= 0.0) {
        return std::numeric_limits<double>::infinity();
      }
      return 0.5 * n_eff * std::log(ss / n_eff);
    };
    const auto result = minimize_bfgs(with_numeric_gradient(concentrated), raw);
    coeffs = unpack(result.x);
  }

  if (min_modulus(coeffs.ar) < 1.0 + kRootTolerance) {
    throw NumericalError(fmt::format(
        "ARIMA({},{},{}) optimum is not stationary", p, order.d, q));
  }
  if (min_modulus(negated(coeffs.ma)) < 1.0 + kRootTolerance) {
    throw NumericalError(fmt::format(
        "ARIMA({},{},{}) optimum is not invertible", p, order.d, q));
  }

  ArimaModel model;
  model.order = order;
  model.ar_coeffs = std::move(coeffs.ar);
  model.ma_coeffs = std::move(coeffs.ma);
  model.intercept = coeffs.intercept;
  model.train_t = train.timestamps();
  model.train_y = train.values();
  restore_state(model);

  model.css = sum_squares_from(model.residuals, static_cast<std::size_t>(p));
  if (!(model.css > 0.0) || !std::isfinite(model.css)) {
    throw NumericalError(fmt::format(
        "ARIMA({},{},{}) leaves no residual variance", p, order.d, q));
  }
  const int n_params = p + q + (with_intercept ? 1 : 0);
  model.innovation_variance =
      model.css / std::max(n_eff - static_cast<double>(n_params), 1.0);

  // Scored by the exact Gaussian likelihood at the CSS estimates, extended to
  // every training point so that all (p, d, q) cells share one sample size.
  double ar_sum = 0.0;
  for (double a : model.ar_coeffs) ar_sum += a;
  const double mean = with_intercept ? model.intercept / (1.0 - ar_sum) : 0.0;
  const double n_all = static_cast<double>(train.size());
  const double k = static_cast<double>(n_params + 1);
  const double neg2_loglik = exact_neg2_loglik(model.differenced, mean, model.ar_coeffs,
                                               model.ma_coeffs, n_all);
  const double denom = n_all - k - 1.0;
  model.aicc = denom > 0.0 && std::isfinite(neg2_loglik)
                   ? neg2_loglik + 2.0 * k + 2.0 * k * (k + 1.0) / denom
                   : std::numeric_limits<double>::infinity();
  return model;
}

ArimaOrder select_order(const TimeSeries& train) {
  const int n = static_cast<int>(train.size());
  if (n < 8) {
    throw InputError(fmt::format(
        "ARIMA order selection needs at least 8 points, got {}", n));
  }
  std::optional<std::tuple<double, int, int, int>> best_key;
  ArimaOrder best;
  for (int d = 0; d <= 2; ++d) {
    for (int p = 0; p <= 3; ++p) {
      for (int q = 0; q <= 3; ++q) {
        if (n - d < p + q + 2) continue;
        const ArimaOrder order{p, d, q};
        double aicc = 0.0;
        try {
          aicc = fit_arima(train, order).aicc;
        } catch (const Error&) {
          continue;
        }
        if (!std::isfinite(aicc)) continue;
        const auto key = std::make_tuple(aicc, p + q, d, p);
        if (!best_key || key < *best_key) {
          best_key = key;
          best = order;
        }
      }
    }
  }
  if (!best_key) {
    throw NumericalError("no ARIMA order in the grid could be fitted");
  }
  return best;
}

PredictiveDistribution forecast_arima(const ArimaModel& model,
                                      std::size_t horizon) {
  if (horizon < 1) throw InputError("forecast horizon must be at least 1");
  const std::size_t p = model.ar_coeffs.size();
  const std::size_t q = model.ma_coeffs.size();
  const int d = model.order.d;

  std::vector<double> w = model.differenced;
  std::vector<double> e = model.residuals;
  // Last value of each difference level 0..d-1.
  std::vector<double> last(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    last[static_cast<std::size_t>(k)] = difference(model.train_y, k).back();
  }

  const double spacing = model.train_t.size() >= 2
                             ? median_spacing(model.train_t)
                             : 1.0;
  const auto psi = psi_weights(model, horizon);

  PredictiveDistribution out;
  double cumulative = 0.0;
  for (std::size_t h = 1; h <= horizon; ++h) {
    const std::size_t t = w.size();
    double pred = model.intercept;
    for (std::size_t i = 1; i <= p; ++i) {
      if (t >= i) pred += model.ar_coeffs[i - 1] * w[t - i];
    }
    for (std::size_t j = 1; j <= q; ++j) {
      if (t >= j) pred += model.ma_coeffs[j - 1] * e[t - j];
    }
    w.push_back(pred);
    e.push_back(0.0);

    double level = pred;
    for (int k = d - 1; k >= 0; --k) {
      level += last[static_cast<std::size_t>(k)];
      last[static_cast<std::size_t>(k)] = level;
    }
    cumulative += psi[h - 1] * psi[h - 1];
    out.query_x.push_back(model.train_t.back() + static_cast<double>(h) * spacing);
    out.mean.push_back(level);
    out.sd.push_back(std::sqrt(model.innovation_variance * cumulative));
  }
  out.fill_intervals();
  return out;
}

PredictiveDistribution fitted_arima(const ArimaModel& model) {
  PredictiveDistribution out;
  const auto d = static_cast<std::size_t>(model.order.d);
  const double sd = std::sqrt(model.innovation_variance);
  for (std::size_t t = 0; t < model.train_y.size(); ++t) {
    const double residual = t >= d ? model.residuals[t - d] : 0.0;
    out.query_x.push_back(model.train_t[t]);
    out.mean.push_back(model.train_y[t] - residual);
    out.sd.push_back(sd);
  }
  out.fill_intervals();
  return out;
}

}  // namespace specmix
