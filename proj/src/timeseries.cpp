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

#include "specmix/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "specmix/error.hpp"

namespace specmix {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_real(std::string_view field) {
  if (field.empty()) return std::nullopt;
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Months since year 0 for a `YYYY-MM` field, nullopt for anything else.
std::optional<long> parse_month(std::string_view field) {
  if (field.size() != 7 || field[4] != '-') return std::nullopt;
  for (std::size_t i = 0; i < 7; ++i) {
    if (i != 4 && (field[i] < '0' || field[i] > '9')) return std::nullopt;
  }
  int year = 0;
  int month = 0;
  std::from_chars(field.data(), field.data() + 4, year);
  std::from_chars(field.data() + 5, field.data() + 7, month);
  if (month < 1 || month > 12) return std::nullopt;
  return static_cast<long>(year) * 12 + (month - 1);
}

}  // namespace

TimeSeries::TimeSeries(std::vector<double> timestamps,
                       std::vector<double> values, std::string name)
    : timestamps_(std::move(timestamps)),
      values_(std::move(values)),
      name_(std::move(name)) {
  if (timestamps_.size() != values_.size()) {
    throw InputError(fmt::format(
        "time series has {} timestamps but {} values", timestamps_.size(),
        values_.size()));
  }
  if (values_.empty()) throw InputError("time series is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(timestamps_[i]) || !std::isfinite(values_[i])) {
      throw InputError(
          fmt::format("time series entry {} is not finite", i));
    }
    if (i > 0 && !(timestamps_[i] > timestamps_[i - 1])) {
      throw InputError(fmt::format(
          "timestamps must be strictly increasing (entry {}: {} after {})", i,
          timestamps_[i], timestamps_[i - 1]));
    }
  }
}

TimeSeries SplitSeries::test() const {
  return TimeSeries(test_timestamps, test_values, train.name());
}

TimeSeries parse_csv(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::optional<bool> monthly;
  long first_month = 0;
  std::vector<double> ts;
  std::vector<double> ys;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (line_no == 1 && row.size() >= 3 &&
        static_cast<unsigned char>(row[0]) == 0xEF) {
      row.remove_prefix(3);  // UTF-8 BOM
    }
    if (row.empty()) continue;
    if (!header_seen) {
      const auto comma = row.find(',');
      if (comma == std::string_view::npos ||
          trim(row.substr(0, comma)) != "t" ||
          trim(row.substr(comma + 1)) != "y") {
        throw InputError(fmt::format(
            "{}: line {}: expected header 't,y'", name, line_no));
      }
      header_seen = true;
      continue;
    }
    const auto comma = row.find(',');
    if (comma == std::string_view::npos ||
        row.find(',', comma + 1) != std::string_view::npos) {
      throw InputError(fmt::format(
          "{}: line {}: malformed row, expected two fields", name, line_no));
    }
    const auto t_field = trim(row.substr(0, comma));
    const auto y_field = trim(row.substr(comma + 1));

    const auto month = parse_month(t_field);
    if (!monthly) monthly = month.has_value();
    double t = 0.0;
    if (*monthly) {
      if (!month) {
        throw InputError(fmt::format(
            "{}: line {}: malformed row, expected YYYY-MM timestamp", name,
            line_no));
      }
      if (ts.empty()) first_month = *month;
      t = static_cast<double>(*month - first_month);
    } else {
      const auto value = parse_real(t_field);
      if (!value) {
        throw InputError(fmt::format(
            "{}: line {}: malformed row, non-numeric timestamp '{}'", name,
            line_no, t_field));
      }
      t = *value;
    }
    const auto y = parse_real(y_field);
    if (!y) {
      throw InputError(fmt::format(
          "{}: line {}: malformed row, non-numeric value '{}'", name, line_no,
          y_field));
    }
    if (!ts.empty() && !(t > ts.back())) {
      throw InputError(fmt::format(
          "{}: line {}: timestamps must be strictly increasing "
          "(unsorted or duplicate timestamp)",
          name, line_no));
    }
    ts.push_back(t);
    ys.push_back(*y);
  }
  if (!header_seen) throw InputError(fmt::format("{}: empty file", name));
  if (ts.empty()) throw InputError(fmt::format("{}: no data rows", name));
  return TimeSeries(std::move(ts), std::move(ys), name);
}

TimeSeries load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError(
        fmt::format("cannot open data file '{}'", path.string()));
  }
  return parse_csv(in, path.string());
}

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

void write_csv(const TimeSeries& series, std::ostream& out) {
  out << "t,y\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_real(series.timestamps()[i]) << ','
        << format_real(series.values()[i]) << '\n';
  }
}

void write_csv(const TimeSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw InputError(
        fmt::format("cannot write file '{}'", path.string()));
  }
  write_csv(series, out);
}

SplitSeries split(const TimeSeries& series, std::size_t n_train) {
  if (n_train < 1 || n_train > series.size()) {
    throw InputError(fmt::format(
        "n_train must be in [1, {}], got {}", series.size(), n_train));
  }
  const auto& t = series.timestamps();
  const auto& y = series.values();
  const auto cut = static_cast<std::ptrdiff_t>(n_train);
  return SplitSeries{
      TimeSeries({t.begin(), t.begin() + cut}, {y.begin(), y.begin() + cut},
                 series.name()),
      {t.begin() + cut, t.end()},
      {y.begin() + cut, y.end()}};
}

double mean(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

double median_spacing(std::span<const double> timestamps) {
  if (timestamps.size() < 2) {
    throw InputError("median spacing needs at least two timestamps");
  }
  std::vector<double> gaps(timestamps.size() - 1);
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    gaps[i - 1] = timestamps[i] - timestamps[i - 1];
  }
  std::sort(gaps.begin(), gaps.end());
  const std::size_t n = gaps.size();
  return n % 2 == 1 ? gaps[n / 2] : 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]);
}

std::pair<TimeSeries, ScalingParams> standardize(const TimeSeries& series) {
  if (series.size() < 2) {
    throw InputError("standardize needs at least two observations");
  }
  const auto& y = series.values();
  const auto& t = series.timestamps();
  ScalingParams scaling;
  scaling.y_mean = mean(y);
  const double var = sample_variance(y);
  if (!(var > 0.0)) {
    throw InputError("series has zero variance; nothing to forecast");
  }
  scaling.y_std = std::sqrt(var);
  scaling.x_origin = t.front();
  scaling.x_scale = median_spacing(t);

  std::vector<double> xs(t.size());
  std::vector<double> ys(y.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    xs[i] = scaling.to_std_x(t[i]);
    ys[i] = scaling.to_std_y(y[i]);
  }
  return {TimeSeries(std::move(xs), std::move(ys), series.name()), scaling};
}

TimeSeries unstandardize(const TimeSeries& series,
                         const ScalingParams& scaling) {
  std::vector<double> xs(series.size());
  std::vector<double> ys(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    xs[i] = scaling.from_std_x(series.timestamps()[i]);
    ys[i] = scaling.from_std_y(series.values()[i]);
  }
  return TimeSeries(std::move(xs), std::move(ys), series.name());
}

}  // namespace specmix
