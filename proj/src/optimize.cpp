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

#include "specmix/optimize.hpp"

#include <cmath>
#include <limits>

namespace specmix {

MinimizeResult minimize_bfgs(const DifferentiableObjective& objective,
                             const Eigen::VectorXd& x0,
                             const MinimizeOptions& options) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 50;
  const auto n = x0.size();

  MinimizeResult result;
  result.x = x0;
  result.gradient = Eigen::VectorXd::Zero(n);
  result.value = objective(result.x, result.gradient);
  if (!std::isfinite(result.value) || !result.gradient.allFinite()) {
    result.value = std::numeric_limits<double>::infinity();
    return result;
  }

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  bool first_update = true;
  Eigen::VectorXd grad_new(n);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (result.gradient.norm() < options.gradient_tolerance) {
      result.converged = true;
      break;
    }
    Eigen::VectorXd direction = -inv_hessian * result.gradient;
    double slope = result.gradient.dot(direction);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      first_update = true;
      direction = -result.gradient;
      slope = -result.gradient.squaredNorm();
    }
    // Keep the very first step from leaping across the whole domain.
    double step = first_update ? std::min(1.0, 1.0 / direction.norm()) : 1.0;

    bool accepted = false;
    Eigen::VectorXd x_new(n);
    double f_new = 0.0;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      x_new = result.x + step * direction;
      f_new = objective(x_new, grad_new);
      if (std::isfinite(f_new) && grad_new.allFinite() &&
          f_new <= result.value + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - result.x;
    const Eigen::VectorXd y = grad_new - result.gradient;
    const double sy = s.dot(y);
    result.x = x_new;
    result.value = f_new;
    result.gradient = grad_new;
    result.iterations = iter + 1;

    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (first_update) {
        inv_hessian *= sy / y.squaredNorm();
        first_update = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inv_hessian * y;
      // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded.
      inv_hessian += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
                     rho * (hy * s.transpose() + s * hy.transpose());
    }
  }
  if (!result.converged &&
      result.gradient.norm() < options.gradient_tolerance) {
    result.converged = true;
  }
  return result;
}

DifferentiableObjective with_numeric_gradient(
    std::function<double(const Eigen::VectorXd&)> f, double rel_step) {
  return [f = std::move(f), rel_step](const Eigen::VectorXd& x,
                                      Eigen::VectorXd& grad) {
    const double value = f(x);
    grad.resize(x.size());
    if (!std::isfinite(value)) {
      grad.setZero();
      return value;
    }
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = rel_step * std::max(1.0, std::fabs(x[i]));
      probe[i] = x[i] + h;
      const double up = f(probe);
      probe[i] = x[i] - h;
      const double down = f(probe);
      probe[i] = x[i];
      grad[i] = (up - down) / (2.0 * h);
    }
    return value;
  };
}

}  // namespace specmix
