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
 * @file eval.hpp
 * @brief Point-forecast accuracy, interval coverage and comparison tables.
 */

#ifndef SPECMIX_EVAL_HPP
#define SPECMIX_EVAL_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace specmix {

double rmse(std::span<const double> actual, std::span<const double> predicted);

/// Mean absolute percentage error in percent. A zero actual value is an
/// InputError naming its index.
double mape(std::span<const double> actual, std::span<const double> predicted);

/// Fraction of points inside the closed interval [lo, hi].
double interval_coverage(std::span<const double> actual,
                         std::span<const double> lo,
                         std::span<const double> hi);

struct MetricsReport {
  std::string model_name;
  double rmse = 0.0;
  double mape = 0.0;
  double coverage95 = 0.0;
  std::size_t n_test = 0;
};

MetricsReport evaluate_forecast(std::string model_name,
                                std::span<const double> actual,
                                std::span<const double> mean,
                                std::span<const double> lo,
                                std::span<const double> hi);

struct ComparisonRow {
  MetricsReport report;
  bool best_rmse = false;
  bool best_mape = false;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
};

/// Flags every row attaining the minimum RMSE (and MAPE); ties flag all.
ComparisonTable compare_models(std::span<const MetricsReport> reports);

/// `model,rmse,mape,coverage95,n_test`
void write_metrics_csv(std::span<const MetricsReport> reports, std::ostream& out);
void write_comparison_csv(const ComparisonTable& table, std::ostream& out);

/// Aligned plain-text table; best values are marked with '*'.
void write_comparison_text(const ComparisonTable& table, std::ostream& out);

}  // namespace specmix

#endif  // SPECMIX_EVAL_HPP
