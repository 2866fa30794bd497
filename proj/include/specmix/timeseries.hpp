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
 * @file timeseries.hpp
 * @brief Univariate time-series data model, CSV ingestion, splitting and
 * standardization.
 */

#ifndef SPECMIX_TIMESERIES_HPP
#define SPECMIX_TIMESERIES_HPP

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace specmix {

/**
 * Ordered (timestamp, value) observations.
 *
 * Timestamps are strictly increasing, both arrays have the same length
 * (at least one) and every entry is finite. Violations throw InputError at
 * construction, so a constructed series is always valid.
 */
class TimeSeries {
 public:
  TimeSeries(std::vector<double> timestamps, std::vector<double> values,
             std::string name = {});

  const std::vector<double>& timestamps() const { return timestamps_; }
  const std::vector<double>& values() const { return values_; }
  const std::string& name() const { return name_; }
  std::size_t size() const { return values_.size(); }

  friend bool operator==(const TimeSeries& a, const TimeSeries& b) {
    return a.timestamps_ == b.timestamps_ && a.values_ == b.values_;
  }

 private:
  std::vector<double> timestamps_;
  std::vector<double> values_;
  std::string name_;
};

/// Affine maps between native and standardized units.
///   y_std = (y - y_mean) / y_std,  x_std = (x - x_origin) / x_scale
struct ScalingParams {
  double y_mean = 0.0;
  double y_std = 1.0;
  double x_origin = 0.0;
  double x_scale = 1.0;

  double to_std_x(double x) const { return (x - x_origin) / x_scale; }
  double from_std_x(double x) const { return x * x_scale + x_origin; }
  double to_std_y(double y) const { return (y - y_mean) / y_std; }
  double from_std_y(double y) const { return y * y_std + y_mean; }

  static ScalingParams identity() { return {}; }
};

/// Train/test partition. The test part may be empty, hence the optional-like
/// vectors instead of a second TimeSeries.
struct SplitSeries {
  TimeSeries train;
  std::vector<double> test_timestamps;
  std::vector<double> test_values;

  std::size_t test_size() const { return test_values.size(); }
  /// Test part as a series; throws InputError when empty.
  TimeSeries test() const;
};

/// Reads a `t,y` CSV. `t` is either a real number or an ISO `YYYY-MM` month;
/// months map to integer indices counted from the first month.
TimeSeries load_csv(const std::filesystem::path& path);
TimeSeries parse_csv(std::istream& in, const std::string& name = {});

/// Writes a `t,y` CSV with 17 significant digits, so load_csv reproduces the
/// series exactly.
void write_csv(const TimeSeries& series, std::ostream& out);
void write_csv(const TimeSeries& series, const std::filesystem::path& path);

/// First n_train points become the training series, the rest the test part.
SplitSeries split(const TimeSeries& series, std::size_t n_train);

/// Returns the series with zero-mean unit-sample-variance values and
/// timestamps shifted to start at 0 with the median spacing as the unit.
std::pair<TimeSeries, ScalingParams> standardize(const TimeSeries& series);

/// Inverse of standardize.
TimeSeries unstandardize(const TimeSeries& series, const ScalingParams& scaling);

/// Median of consecutive timestamp differences (requires size >= 2).
double median_spacing(std::span<const double> timestamps);

/// Sample variance (n - 1 denominator).
double sample_variance(std::span<const double> values);
double mean(std::span<const double> values);

/// Formats a double with 17 significant digits (round-trip safe).
std::string format_real(double value);

}  // namespace specmix

#endif  // SPECMIX_TIMESERIES_HPP
