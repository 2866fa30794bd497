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

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "specmix/error.hpp"
#include "specmix/timeseries.hpp"
#include "test_util.hpp"

namespace specmix {
namespace {

TimeSeries parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in, "inline");
}

std::string message_of(const std::string& text) {
  try {
    parse(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

TEST(TimeSeriesTest, RejectsInvalidConstruction) {
  EXPECT_THROW(TimeSeries({}, {}), InputError);
  EXPECT_THROW(TimeSeries({0.0, 1.0}, {1.0}), InputError);
  EXPECT_THROW(TimeSeries({1.0, 0.0}, {1.0, 2.0}), InputError);
  EXPECT_THROW(TimeSeries({0.0, 0.0}, {1.0, 2.0}), InputError);
  EXPECT_THROW(TimeSeries({0.0, 1.0}, {1.0, NAN}), InputError);
  EXPECT_THROW(TimeSeries({0.0, INFINITY}, {1.0, 2.0}), InputError);
  EXPECT_NO_THROW(TimeSeries({3.0}, {1.0}));
}

TEST(CsvTest, ParsesThreeRows) {
  const auto s = parse("t,y\n0,1.5\n1,2.5\n2.5,-3\n");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s.timestamps()[2], 2.5);
  EXPECT_DOUBLE_EQ(s.values()[2], -3.0);
}

TEST(CsvTest, MapsMonthsToConsecutiveIntegers) {
  const auto s = parse("t,y\n2010-11,1\n2010-12,2\n2011-01,3\n2011-03,4\n");
  EXPECT_EQ(s.timestamps(), (std::vector<double>{0, 1, 2, 4}));
}

TEST(CsvTest, FourteenMonthSeries) {
  std::string text = "t,y\n";
  for (int m = 0; m < 14; ++m) {
    text += fmt::format("{:04d}-{:02d},{}\n", 2010 + (m + 1) / 12, (m + 1) % 12 + 1,
                        10 + m);
  }
  EXPECT_EQ(parse(text).size(), 14u);
}

TEST(CsvTest, MalformedRowNamesLine) {
  const auto msg = message_of("t,y\n2010-01,abc\n");
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(CsvTest, ErrorsNameTheirLine) {
  EXPECT_NE(message_of("t,y\n1,2\n0,3\n").find("line 3"), std::string::npos);
  EXPECT_NE(message_of("t,y\n1,2\n1,3\n").find("line 3"), std::string::npos);
  EXPECT_NE(message_of("t,y\n1,2,3\n").find("line 2"), std::string::npos);
  EXPECT_NE(message_of("x,y\n1,2\n").find("line 1"), std::string::npos);
  EXPECT_FALSE(message_of("t,y\n").empty());
  EXPECT_FALSE(message_of("").empty());
}

TEST(CsvTest, ToleratesBomCrlfAndBlankLines) {
  const auto s = parse("\xEF\xBB\xBFt,y\r\n\r\n0,1\r\n1,2\r\n\n");
  EXPECT_EQ(s.size(), 2u);
}

TEST(CsvTest, MissingFileNamesPath) {
  try {
    load_csv("/nonexistent/specmix.csv");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/specmix.csv"),
              std::string::npos);
  }
}

TEST(CsvTest, WriteThenLoadRoundTripsExactly) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1e3);
  const auto dir = testing::scratch_dir("csv_round_trip");
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = testing::sorted_uniform(rng, 1 + trial % 20, -1e6, 1e6);
    std::vector<double> y(t.size());
    for (auto& v : y) v = normal(rng) * std::pow(10.0, trial % 7 - 3);
    const TimeSeries s(t, y);
    write_csv(s, dir / "s.csv");
    EXPECT_EQ(load_csv(dir / "s.csv"), s);
  }
}

TEST(SplitTest, SplitSizes) {
  std::vector<double> t(21), y(21);
  for (int i = 0; i < 21; ++i) {
    t[i] = i;
    y[i] = i * i;
  }
  const TimeSeries s21(t, y);
  const TimeSeries s14({t.begin(), t.begin() + 14}, {y.begin(), y.begin() + 14});
  EXPECT_EQ(split(s14, 11).test_size(), 3u);
  EXPECT_EQ(split(s21, 17).test_size(), 4u);
  EXPECT_EQ(split(s21, 21).test_size(), 0u);
  EXPECT_THROW(split(s21, 0), InputError);
  EXPECT_THROW(split(s21, 22), InputError);
}

TEST(SplitTest, ConcatenationEqualsInput) {
  std::mt19937_64 rng(9);
  for (std::size_t n = 1; n <= 12; ++n) {
    const auto t = testing::sorted_uniform(rng, n, 0.0, 100.0);
    const auto y = testing::sorted_uniform(rng, n, -5.0, 5.0);
    const TimeSeries s(t, y);
    for (std::size_t k = 1; k <= n; ++k) {
      const auto parts = split(s, k);
      auto tt = parts.train.timestamps();
      auto yy = parts.train.values();
      tt.insert(tt.end(), parts.test_timestamps.begin(), parts.test_timestamps.end());
      yy.insert(yy.end(), parts.test_values.begin(), parts.test_values.end());
      EXPECT_EQ(tt, t);
      EXPECT_EQ(yy, y);
      if (k < n) EXPECT_LT(parts.train.timestamps().back(), parts.test_timestamps.front());
    }
  }
}

TEST(StandardizeTest, UnitMeanAndVariance) {
  const auto [s, scaling] = standardize(TimeSeries({0, 1, 2}, {1, 2, 3}));
  EXPECT_NEAR(mean(s.values()), 0.0, 1e-10);
  EXPECT_NEAR(std::sqrt(sample_variance(s.values())), 1.0, 1e-10);
  EXPECT_DOUBLE_EQ(s.timestamps()[0], 0.0);
}

TEST(StandardizeTest, TimeAxisUsesMedianSpacing) {
  const auto [s, scaling] = standardize(TimeSeries({10, 12, 14, 20}, {1, 5, 2, 3}));
  EXPECT_DOUBLE_EQ(scaling.x_origin, 10.0);
  EXPECT_DOUBLE_EQ(scaling.x_scale, 2.0);
  EXPECT_EQ(s.timestamps(), (std::vector<double>{0, 1, 2, 5}));
}

TEST(StandardizeTest, RoundTripProperty) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 30;
    const auto t = testing::sorted_uniform(rng, n, 1990.0, 2020.0);
    std::vector<double> y(n);
    for (auto& v : y) v = 1e3 + 50.0 * normal(rng);
    const TimeSeries s(t, y);
    const auto [z, scaling] = standardize(s);
    EXPECT_NEAR(mean(z.values()), 0.0, 1e-10);
    EXPECT_NEAR(std::sqrt(sample_variance(z.values())), 1.0, 1e-10);
    const auto back = unstandardize(z, scaling);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(back.values()[i], y[i], 1e-12 * std::fabs(y[i]));
      EXPECT_NEAR(back.timestamps()[i], t[i], 1e-12 * std::fabs(t[i]));
    }
  }
}

TEST(StandardizeTest, DegenerateInputs) {
  EXPECT_THROW(standardize(TimeSeries({0, 1, 2}, {5, 5, 5})), InputError);
  EXPECT_THROW(standardize(TimeSeries({0}, {5})), InputError);
}

}  // namespace
}  // namespace specmix
