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
 * @file cli.hpp
 * @brief Command-line front end (fit, forecast, evaluate, compare, simulate)
 * and the fitting pipeline it shares with library users.
 *
 * Exit codes: 0 success, 1 model or numerical failure, 2 usage or I/O error.
 */

#ifndef SPECMIX_CLI_HPP
#define SPECMIX_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specmix/bayesopt.hpp"
#include "specmix/hmc.hpp"
#include "specmix/model_file.hpp"
#include "specmix/timeseries.hpp"

namespace specmix {

inline constexpr int kExitOk = 0;
inline constexpr int kExitModelFailure = 1;
inline constexpr int kExitUsage = 2;

struct FitSettings {
  FitMethod method = FitMethod::kMap;
  std::size_t num_components = 10;
  std::uint64_t seed = 42;
  std::size_t restarts = 10;
  HmcConfig hmc = {};
  TuneConfig tune = {};
};

struct FitOutcome {
  explicit FitOutcome(FittedModel fitted) : model(std::move(fitted)) {}

  FittedModel model;
  std::vector<std::string> summary;
  std::optional<TuneTrace> trace;
  std::optional<HmcChain> chain;
};

/// Fits `train` with the selected method; the settings' seed overrides the
/// seeds inside the HMC and tuning configurations.
FitOutcome fit_model(const TimeSeries& train, const FitSettings& settings);

/// Reads a forecast table (`t,mean,sd,lo95,hi95`, '#' comment lines allowed).
PredictiveDistribution read_forecast_csv(std::istream& in);
void write_forecast_csv(const PredictiveDistribution& forecast, IntervalMode mode,
                        std::ostream& out);

/// Runs the tool with `args` excluding the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace specmix

#endif  // SPECMIX_CLI_HPP
