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

#ifndef SPECMIX_OPTIMIZE_HPP
#define SPECMIX_OPTIMIZE_HPP

#include <functional>

#include <Eigen/Core>

namespace specmix {

/// Returns f(x) and writes df/dx into `grad`. Non-finite values mark x as
/// infeasible; the line search backs away from such points.
using DifferentiableObjective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct MinimizeOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
};

/// BFGS with Armijo backtracking. Every accepted step decreases the
/// objective, so the result is never worse than the starting point.
MinimizeResult minimize_bfgs(const DifferentiableObjective& objective,
                             const Eigen::VectorXd& x0,
                             const MinimizeOptions& options = {});

/// Wraps a value-only objective with central finite-difference gradients
/// (step = rel_step * max(1, |x_i|)).
DifferentiableObjective with_numeric_gradient(
    std::function<double(const Eigen::VectorXd&)> f, double rel_step = 1e-6);

}  // namespace specmix

#endif  // SPECMIX_OPTIMIZE_HPP
