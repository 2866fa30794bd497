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

#include "specmix/model_file.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "json.hpp"
#include "specmix/error.hpp"
#include "specmix/inference.hpp"

namespace specmix {

namespace {

using nlohmann::json;

json kernel_json(const SMKernelParams& params) {
  return json{{"weights", params.weights()},
              {"frequencies", params.frequencies()},
              {"scales", params.scales()}};
}

SMKernelParams kernel_from_json(const json& j) {
  return SMKernelParams(j.at("weights").get<std::vector<double>>(),
                        j.at("frequencies").get<std::vector<double>>(),
                        j.at("scales").get<std::vector<double>>());
}

json train_json(const TimeSeries& train) {
  return json{{"t", train.timestamps()}, {"y", train.values()}};
}

TimeSeries train_from_json(const json& j) {
  return TimeSeries(j.at("t").get<std::vector<double>>(),
                    j.at("y").get<std::vector<double>>(), "train");
}

bool close(double a, double b) {
  return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

double finite_or_inf(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::numeric_limits<double>::infinity();
  }
  return j.at(key).get<double>();
}

FittedModel parse_envelope(const json& j) {
  const int version = j.at("version").get<int>();
  if (version != kModelFileVersion) {
    throw InputError(fmt::format("unsupported model file version {}", version));
  }
  const auto type = j.at("model_type").get<std::string>();
  FittedModel model(fit_method_from_string(j.at("fit_method").get<std::string>()),
                    j.at("seed").get<std::uint64_t>(),
                    train_from_json(j.at("train")));
  model.objective = finite_or_inf(j, "objective");

  if (type == "arima") {
    if (!model.is_arima()) {
      throw InputError("model_type arima requires fit_method arima");
    }
    ArimaModel arima;
    const auto& order = j.at("order");
    arima.order = {order.at("p").get<int>(), order.at("d").get<int>(),
                   order.at("q").get<int>()};
    arima.order.validate();
    arima.ar_coeffs = j.at("ar").get<std::vector<double>>();
    arima.ma_coeffs = j.at("ma").get<std::vector<double>>();
    if (arima.ar_coeffs.size() != static_cast<std::size_t>(arima.order.p) ||
        arima.ma_coeffs.size() != static_cast<std::size_t>(arima.order.q)) {
      throw InputError("ARIMA coefficient counts do not match the order");
    }
    arima.intercept = j.at("intercept").get<double>();
    arima.innovation_variance = j.at("innovation_variance").get<double>();
    if (!(arima.innovation_variance > 0.0)) {
      throw InputError("ARIMA innovation variance must be positive");
    }
    arima.aicc = finite_or_inf(j, "aicc");
    arima.css = j.value("css", 0.0);
    arima.train_t = model.train.timestamps();
    arima.train_y = model.train.values();
    if (arima.train_y.size() <= static_cast<std::size_t>(arima.order.d)) {
      throw InputError("ARIMA training series shorter than the differencing order");
    }
    restore_state(arima);
    model.arima = std::move(arima);
    return model;
  }
  if (type != "gp-sm") {
    throw InputError(fmt::format("unknown model_type '{}'", type));
  }
  if (model.is_arima()) throw InputError("model_type gp-sm cannot use fit_method arima");

  model.params = kernel_from_json(j.at("kernel"));
  model.noise = NoiseParam(j.at("noise_variance").get<double>());
  model.jitter_used = j.value("jitter_used", 0.0);
  const auto& s = j.at("scaling");
  model.scaling = {s.at("y_mean").get<double>(), s.at("y_std").get<double>(),
                   s.at("x_origin").get<double>(), s.at("x_scale").get<double>()};
  const auto expected = standardize(model.train).second;
  if (!close(expected.y_mean, model.scaling.y_mean) ||
      !close(expected.y_std, model.scaling.y_std) ||
      !close(expected.x_origin, model.scaling.x_origin) ||
      !close(expected.x_scale, model.scaling.x_scale)) {
    throw InputError("scaling parameters are inconsistent with the training data");
  }
  if (j.contains("posterior_draws")) {
    for (const auto& draw : j.at("posterior_draws")) {
      model.posterior_draws.emplace_back(
          kernel_from_json(draw), NoiseParam(draw.at("noise_variance").get<double>()));
    }
  }
  return model;
}

}  // namespace

std::string to_string(FitMethod method) {
  switch (method) {
    case FitMethod::kMap:
      return "map";
    case FitMethod::kHmc:
      return "hmc";
    case FitMethod::kBo:
      return "bo";
    case FitMethod::kArima:
      return "arima";
  }
  return "map";
}

FitMethod fit_method_from_string(const std::string& text) {
  if (text == "map") return FitMethod::kMap;
  if (text == "hmc") return FitMethod::kHmc;
  if (text == "bo") return FitMethod::kBo;
  if (text == "arima") return FitMethod::kArima;
  throw InputError(fmt::format(
      "unknown fit method '{}' (expected map, hmc, bo or arima)", text));
}

std::string serialize_model(const FittedModel& model) {
  json j;
  j["model_type"] = model.is_arima() ? "arima" : "gp-sm";
  j["version"] = kModelFileVersion;
  j["fit_method"] = to_string(model.method);
  j["seed"] = model.seed;
  if (std::isfinite(model.objective)) j["objective"] = model.objective;
  j["train"] = train_json(model.train);
  if (model.is_arima()) {
    const auto& a = model.arima.value();
    j["order"] = {{"p", a.order.p}, {"d", a.order.d}, {"q", a.order.q}};
    j["ar"] = a.ar_coeffs;
    j["ma"] = a.ma_coeffs;
    j["intercept"] = a.intercept;
    j["innovation_variance"] = a.innovation_variance;
    if (std::isfinite(a.aicc)) j["aicc"] = a.aicc;
    j["css"] = a.css;
  } else {
    j["kernel"] = kernel_json(model.params.value());
    j["noise_variance"] = model.noise.value().variance();
    j["scaling"] = {{"y_mean", model.scaling.y_mean},
                    {"y_std", model.scaling.y_std},
                    {"x_origin", model.scaling.x_origin},
                    {"x_scale", model.scaling.x_scale}};
    j["jitter_used"] = model.jitter_used;
    if (!model.posterior_draws.empty()) {
      json draws = json::array();
      for (const auto& [params, noise] : model.posterior_draws) {
        json d = kernel_json(params);
        d["noise_variance"] = noise.variance();
        draws.push_back(std::move(d));
      }
      j["posterior_draws"] = std::move(draws);
    }
  }
  return j.dump(2) + "\n";
}

FittedModel parse_model(const std::string& text) {
  try {
    return parse_envelope(json::parse(text));
  } catch (const json::exception& e) {
    throw InputError(fmt::format("corrupt model file: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw InputError(fmt::format("corrupt model file: {}", e.what()));
  }
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write model file {}", path.string()));
  out << serialize_model(model);
  if (!out) throw InputError(fmt::format("failed writing model file {}", path.string()));
}

FittedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open model file {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_model(buffer.str());
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<double> forecast_times(const TimeSeries& train, std::size_t horizon) {
  const auto& t = train.timestamps();
  const double spacing = t.size() >= 2 ? median_spacing(t) : 1.0;
  std::vector<double> out(horizon);
  for (std::size_t h = 1; h <= horizon; ++h) {
    out[h - 1] = t.back() + static_cast<double>(h) * spacing;
  }
  return out;
}

namespace {

PredictiveDistribution gp_predict(const FittedModel& model,
                                  std::span<const double> query,
                                  IntervalMode mode) {
  if (!model.posterior_draws.empty()) {
    return predictive_from_draws(model.posterior_draws, model.train, query, mode);
  }
  return build_model(model.train, model.params.value(), model.noise.value())
      .predict(query, mode);
}

}  // namespace

PredictiveDistribution forecast(const FittedModel& model, std::size_t horizon,
                                IntervalMode mode) {
  if (horizon < 1) throw InputError("forecast horizon must be at least 1");
  if (model.is_arima()) return forecast_arima(model.arima.value(), horizon);
  return gp_predict(model, forecast_times(model.train, horizon), mode);
}

PredictiveDistribution in_sample(const FittedModel& model, IntervalMode mode) {
  if (model.is_arima()) return fitted_arima(model.arima.value());
  return gp_predict(model, model.train.timestamps(), mode);
}

}  // namespace specmix
