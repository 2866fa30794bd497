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

#include "specmix/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "specmix/error.hpp"
#include "specmix/timeseries.hpp"

namespace specmix {

namespace {

void check_paired(std::span<const double> a, std::span<const double> b,
                  const char* what) {
  if (a.size() != b.size()) {
    throw InputError(fmt::format("{}: length mismatch ({} vs {})", what,
                                 a.size(), b.size()));
  }
  if (a.empty()) throw InputError(fmt::format("{}: empty input", what));
}

}  // namespace

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  check_paired(actual, predicted, "rmse");
  double ss = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double r = actual[i] - predicted[i];
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(actual.size()));
}

double mape(std::span<const double> actual, std::span<const double> predicted) {
  check_paired(actual, predicted, "mape");
  double total = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) {
      throw InputError(fmt::format(
          "mape undefined: actual value at index {} is zero", i));
    }
    total += std::fabs(actual[i] - predicted[i]) / std::fabs(actual[i]);
  }
  return 100.0 * total / static_cast<double>(actual.size());
}

double interval_coverage(std::span<const double> actual,
                         std::span<const double> lo,
                         std::span<const double> hi) {
  check_paired(actual, lo, "interval_coverage");
  check_paired(actual, hi, "interval_coverage");
  std::size_t inside = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (lo[i] > hi[i]) {
      throw InputError(fmt::format(
          "interval_coverage: lower bound exceeds upper bound at index {}", i));
    }
    if (lo[i] <= actual[i] && actual[i] <= hi[i]) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(actual.size());
}

MetricsReport evaluate_forecast(std::string model_name,
                                std::span<const double> actual,
                                std::span<const double> mean,
                                std::span<const double> lo,
                                std::span<const double> hi) {
  MetricsReport report;
  report.model_name = std::move(model_name);
  report.rmse = rmse(actual, mean);
  report.mape = mape(actual, mean);
  report.coverage95 = interval_coverage(actual, lo, hi);
  report.n_test = actual.size();
  return report;
}

ComparisonTable compare_models(std::span<const MetricsReport> reports) {
  ComparisonTable table;
  if (reports.empty()) return table;
  double best_rmse = reports[0].rmse;
  double best_mape = reports[0].mape;
  for (const auto& r : reports) {
    best_rmse = std::min(best_rmse, r.rmse);
    best_mape = std::min(best_mape, r.mape);
  }
  for (const auto& r : reports) {
    table.rows.push_back({r, r.rmse == best_rmse, r.mape == best_mape});
  }
  return table;
}

void write_metrics_csv(std::span<const MetricsReport> reports, std::ostream& out) {
  out << "model,rmse,mape,coverage95,n_test\n";
  for (const auto& r : reports) {
    out << r.model_name << ',' << format_real(r.rmse) << ','
        << format_real(r.mape) << ',' << format_real(r.coverage95) << ','
        << r.n_test << '\n';
  }
}

void write_comparison_csv(const ComparisonTable& table, std::ostream& out) {
  std::vector<MetricsReport> reports;
  for (const auto& row : table.rows) reports.push_back(row.report);
  write_metrics_csv(reports, out);
}

void write_comparison_text(const ComparisonTable& table, std::ostream& out) {
  std::size_t name_width = 5;
  for (const auto& row : table.rows) {
    name_width = std::max(name_width, row.report.model_name.size());
  }
  out << fmt::format("{:<{}}  {:>10}  {:>10}  {:>10}  {:>6}\n", "MODEL",
                     name_width, "RMSE", "MAPE (%)", "COVER95", "N_TEST");
  for (const auto& row : table.rows) {
    const auto& r = row.report;
    out << fmt::format("{:<{}}  {:>10}  {:>10}  {:>10.4f}  {:>6}\n",
                       r.model_name, name_width,
                       fmt::format("{:.4f}{}", r.rmse, row.best_rmse ? "*" : " "),
                       fmt::format("{:.2f}{}", r.mape, row.best_mape ? "*" : " "),
                       r.coverage95, r.n_test);
  }
  out << "* best value in column\n";
}

}  // namespace specmix
