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
 * @file model_file.hpp
 * @brief Fitted-model envelope shared by the command-line tools: JSON
 * persistence and the forecasting path used for both saved and in-memory
 * models.
 */

#ifndef SPECMIX_MODEL_FILE_HPP
#define SPECMIX_MODEL_FILE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "specmix/arima.hpp"
#include "specmix/gp.hpp"
#include "specmix/kernels.hpp"
#include "specmix/timeseries.hpp"

namespace specmix {

enum class FitMethod { kMap, kHmc, kBo, kArima };

std::string to_string(FitMethod method);
FitMethod fit_method_from_string(const std::string& text);

inline constexpr int kModelFileVersion = 1;

struct FittedModel {
  FittedModel(FitMethod fit_method, std::uint64_t fit_seed, TimeSeries training)
      : method(fit_method), seed(fit_seed), train(std::move(training)) {}

  FitMethod method = FitMethod::kMap;
  std::uint64_t seed = 0;
  TimeSeries train;
  double objective = 0.0;

  // GP-SM models; hyperparameters are in standardized units.
  std::optional<SMKernelParams> params;
  std::optional<NoiseParam> noise;
  ScalingParams scaling;
  double jitter_used = 0.0;
  /// Thinned posterior draws; when present, forecasts mix over them.
  std::vector<std::pair<SMKernelParams, NoiseParam>> posterior_draws;

  std::optional<ArimaModel> arima;

  bool is_arima() const { return method == FitMethod::kArima; }
};

/// JSON envelope `{model_type, version, fit_method, ...}`.
std::string serialize_model(const FittedModel& model);

/// Throws InputError on a malformed or inconsistent envelope.
FittedModel parse_model(const std::string& text);

void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

/// t_last + h * median spacing, h = 1..horizon.
std::vector<double> forecast_times(const TimeSeries& train, std::size_t horizon);

PredictiveDistribution forecast(const FittedModel& model, std::size_t horizon,
                                IntervalMode mode);

/// Predictions at the training times (one-step fits for ARIMA).
PredictiveDistribution in_sample(const FittedModel& model, IntervalMode mode);

}  // namespace specmix

#endif  // SPECMIX_MODEL_FILE_HPP
