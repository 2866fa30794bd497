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

#include "specmix/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "specmix/arima.hpp"
#include "specmix/error.hpp"
#include "specmix/eval.hpp"
#include "specmix/gp.hpp"
#include "specmix/inference.hpp"

namespace specmix {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
  return out;
}

TimeSeries load_training(const std::string& data_path, std::size_t n_train) {
  const auto series = load_csv(data_path);
  if (n_train == 0) return series;
  return split(series, n_train).train;
}

SplitSeries load_split(const std::string& data_path, std::size_t n_train) {
  const auto series = load_csv(data_path);
  auto parts = split(series, n_train);
  if (parts.test_size() == 0) {
    throw InputError(fmt::format(
        "--n-train {} leaves no test points in {} ({} rows)", n_train,
        data_path, series.size()));
  }
  return parts;
}

double max_of(const std::vector<double>& v) {
  double out = -std::numeric_limits<double>::infinity();
  for (double x : v) {
    if (std::isfinite(x)) out = std::max(out, x);
  }
  return out;
}

double min_of(const std::vector<double>& v) {
  double out = std::numeric_limits<double>::infinity();
  for (double x : v) {
    if (std::isfinite(x)) out = std::min(out, x);
  }
  return out;
}

void write_plot_csv(const SplitSeries& data, const PredictiveDistribution& fit,
                    const PredictiveDistribution& fc, std::ostream& out) {
  out << "t,y_true,mean,lo95,hi95,is_test\n";
  const auto& t = data.train.timestamps();
  const auto& y = data.train.values();
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << format_real(t[i]) << ',' << format_real(y[i]) << ','
        << format_real(fit.mean[i]) << ',' << format_real(fit.lo95[i]) << ','
        << format_real(fit.hi95[i]) << ",0\n";
  }
  for (std::size_t i = 0; i < data.test_size(); ++i) {
    out << format_real(data.test_timestamps[i]) << ','
        << format_real(data.test_values[i]) << ',' << format_real(fc.mean[i])
        << ',' << format_real(fc.lo95[i]) << ',' << format_real(fc.hi95[i])
        << ",1\n";
  }
}

MetricsReport score(const std::string& name, const SplitSeries& data,
                    const PredictiveDistribution& fc) {
  const std::size_t n = data.test_size();
  if (fc.size() < n) {
    throw InputError(fmt::format("forecast has {} rows but the test split has {}",
                                 fc.size(), n));
  }
  const std::span<const double> mean(fc.mean.data(), n);
  const std::span<const double> lo(fc.lo95.data(), n);
  const std::span<const double> hi(fc.hi95.data(), n);
  return evaluate_forecast(name, data.test_values, mean, lo, hi);
}

SMKernelParams parse_kernel_spec(const std::string& spec, double& noise_variance) {
  std::string text = spec;
  if (!spec.empty() && spec.front() != '{') {
    std::ifstream in(spec, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open kernel spec {}", spec));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    text = buffer.str();
  }
  try {
    const auto j = nlohmann::json::parse(text);
    noise_variance = j.value("noise_variance", 0.0);
    return SMKernelParams(j.at("weights").get<std::vector<double>>(),
                          j.at("frequencies").get<std::vector<double>>(),
                          j.at("scales").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("invalid kernel spec: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw InputError(fmt::format("invalid kernel spec: {}", e.what()));
  }
}

struct Options {
  std::string data;
  std::size_t n_train = 0;
  std::string method = "map";
  std::size_t q = 10;
  std::uint64_t seed = 42;
  std::size_t horizon = 0;
  std::string out;
  std::string trace_out;
  std::string chain_out;
  std::string interval = "observation";
  std::size_t restarts = 10;
  std::string model;
  std::string forecast;
  std::string name = "model";
  std::string kernel;
  std::size_t n = 0;
  std::size_t warmup = 500;
  std::size_t samples = 1000;
  std::size_t chains = 2;
  std::size_t budget = 30;
};

FitSettings settings_from(const Options& o, FitMethod method) {
  FitSettings s;
  s.method = method;
  s.num_components = o.q;
  s.seed = o.seed;
  s.restarts = o.restarts;
  s.hmc.n_warmup = o.warmup;
  s.hmc.n_samples = o.samples;
  s.hmc.n_chains = o.chains;
  s.tune.budget = o.budget;
  s.tune.n_init = std::min<std::size_t>(s.tune.n_init, o.budget);
  return s;
}

int cmd_fit(const Options& o, std::ostream& out) {
  const auto train = load_training(o.data, o.n_train);
  const auto outcome = fit_model(train, settings_from(o, fit_method_from_string(o.method)));
  save_model(outcome.model, o.out);
  if (!o.trace_out.empty()) {
    if (!outcome.trace) throw InputError("--trace-out requires --method bo");
    auto file = open_output(o.trace_out);
    export_trace(*outcome.trace, file);
  }
  if (!o.chain_out.empty()) {
    if (!outcome.chain) throw InputError("--chain-out requires --method hmc");
    auto file = open_output(o.chain_out);
    write_chain_csv(*outcome.chain, train, file);
  }
  for (const auto& line : outcome.summary) out << line << '\n';
  out << "model written to " << o.out << '\n';
  return kExitOk;
}

int cmd_forecast(const Options& o, std::ostream& out) {
  if (o.horizon < 1) throw InputError("--horizon must be at least 1");
  const auto mode = interval_mode_from_string(o.interval);
  const auto model = load_model(o.model);
  const auto fc = forecast(model, o.horizon, mode);
  if (o.out.empty()) {
    write_forecast_csv(fc, mode, out);
  } else {
    auto file = open_output(o.out);
    write_forecast_csv(fc, mode, file);
    out << fmt::format("{} forecast rows written to {}\n", fc.size(), o.out);
  }
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const auto data = load_split(o.data, o.n_train);
  std::ifstream in(o.forecast, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open forecast file {}", o.forecast));
  const auto fc = read_forecast_csv(in);
  for (std::size_t i = 0; i < std::min(fc.size(), data.test_size()); ++i) {
    const double expected = data.test_timestamps[i];
    if (std::fabs(fc.query_x[i] - expected) > 1e-6 * std::max(1.0, std::fabs(expected))) {
      spdlog::warn("forecast row {} is at t={} but the test point is at t={}", i,
                   fc.query_x[i], expected);
    }
  }
  const std::vector<MetricsReport> reports{score(o.name, data, fc)};
  if (!o.out.empty()) {
    auto file = open_output(o.out);
    write_metrics_csv(reports, file);
  }
  write_comparison_text(compare_models(reports), out);
  return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
  const auto mode = interval_mode_from_string(o.interval);
  const auto data = load_split(o.data, o.n_train);
  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) {
    throw InputError(fmt::format("cannot create output directory {}", o.out));
  }

  struct Entry {
    const char* label;
    const char* file;
    FitMethod method;
  };
  const Entry entries[] = {{"GP-SM", "plot_gp_sm.csv", FitMethod::kHmc},
                           {"GP-SM Optimized", "plot_gp_sm_optimized.csv", FitMethod::kBo},
                           {"ARIMA", "plot_arima.csv", FitMethod::kArima}};
  std::vector<MetricsReport> reports;
  for (const auto& entry : entries) {
    try {
      const auto outcome = fit_model(data.train, settings_from(o, entry.method));
      const auto fc = forecast(outcome.model, data.test_size(), mode);
      const auto fit = in_sample(outcome.model, mode);
      reports.push_back(score(entry.label, data, fc));
      auto plot = open_output(dir / entry.file);
      write_plot_csv(data, fit, fc, plot);
      if (outcome.trace) {
        auto trace = open_output(o.trace_out.empty() ? dir / "bo_trace.csv"
                                                     : fs::path(o.trace_out));
        export_trace(*outcome.trace, trace);
      }
    } catch (const Error& e) {
      err << fmt::format("{} failed: {}\n", entry.label, e.what());
    }
  }
  if (reports.empty()) {
    err << "all models failed\n";
    return kExitModelFailure;
  }
  const auto table = compare_models(reports);
  {
    auto csv = open_output(dir / "comparison.csv");
    write_comparison_csv(table, csv);
    auto txt = open_output(dir / "comparison.txt");
    write_comparison_text(table, txt);
  }
  write_comparison_text(table, out);
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  if (o.n < 2) throw InputError("--n must be at least 2");
  double noise_variance = 0.0;
  const auto params = parse_kernel_spec(o.kernel, noise_variance);
  const NoiseParam noise(noise_variance);
  std::vector<double> t(o.n);
  for (std::size_t i = 0; i < o.n; ++i) t[i] = static_cast<double>(i);
  auto y = sample_prior(params, noise, t, o.seed);
  const TimeSeries series(std::move(t), std::move(y), "simulated");
  if (o.out.empty()) {
    write_csv(series, out);
  } else {
    auto file = open_output(o.out);
    write_csv(series, file);
    out << fmt::format("{} rows written to {}\n", series.size(), o.out);
  }
  return kExitOk;
}

}  // namespace

FitOutcome fit_model(const TimeSeries& train, const FitSettings& settings) {
  if (settings.num_components < 1) throw InputError("--q must be at least 1");
  FitOutcome outcome(FittedModel(settings.method, settings.seed, train));
  auto& model = outcome.model;
  auto& summary = outcome.summary;
  auto set_gp = [&model](const GpModel& gp) {
    model.params = gp.params();
    model.noise = gp.noise();
    model.scaling = gp.scaling();
    model.jitter_used = gp.jitter_used();
  };

  switch (settings.method) {
    case FitMethod::kMap: {
      MapOptions options;
      options.restarts = settings.restarts;
      options.seed = settings.seed;
      const auto fit = map_estimate(train, settings.num_components, options);
      set_gp(fit.model);
      model.objective = fit.objective;
      summary.push_back(fmt::format(
          "map: log posterior {:.6f} (restart {} of {})", fit.objective,
          fit.best_restart + 1, fit.restart_objectives.size()));
      break;
    }
    case FitMethod::kHmc: {
      HmcConfig config = settings.hmc;
      config.seed = settings.seed;
      auto chain = hmc_sample(train, settings.num_components, config);
      const auto best = static_cast<std::size_t>(
          std::max_element(chain.log_posterior.begin(), chain.log_posterior.end()) -
          chain.log_posterior.begin());
      const HyperPosterior posterior(train, settings.num_components);
      set_gp(posterior.model_at(chain.draws[best]));
      model.objective = chain.log_posterior[best];
      model.posterior_draws = thinned_draws(chain, train);
      summary.push_back(fmt::format(
          "hmc: {} chains x {} draws, accept rate {:.3f}, divergences {}",
          chain.n_chains, chain.n_samples, chain.accept_rate, chain.divergences));
      if (!chain.rhat.empty()) {
        summary.push_back(fmt::format("hmc: max split R-hat {:.4f}, min ESS {:.1f}",
                                      max_of(chain.rhat), min_of(chain.ess)));
      }
      for (const auto& w : chain.warnings) summary.push_back("warning: " + w);
      outcome.chain = std::move(chain);
      break;
    }
    case FitMethod::kBo: {
      TuneConfig config = settings.tune;
      config.seed = settings.seed;
      auto result = tune(train, settings.num_components, config);
      set_gp(result.model);
      model.objective = result.objective;
      summary.push_back(fmt::format(
          "bo: {} evaluations, best search objective {:.6f} at iteration {}, "
          "refit objective {:.6f}",
          result.trace.iterations.size(), result.trace.best_objective(),
          result.trace.best_index + 1, result.objective));
      outcome.trace = std::move(result.trace);
      break;
    }
    case FitMethod::kArima: {
      const auto order = select_order(train);
      model.arima = fit_arima(train, order);
      model.objective = model.arima->aicc;
      summary.push_back(fmt::format("arima: order ({},{},{}), AICc {:.6f}",
                                    order.p, order.d, order.q, model.arima->aicc));
      break;
    }
  }
  if (!model.is_arima()) {
    const std::size_t q = settings.num_components;
    summary.push_back(fmt::format(
        "kernel: Q={} ({} frequency and scale hyperparameters, {} with weights and noise)",
        q, 2 * q, 3 * q + 1));
  }
  return outcome;
}

void write_forecast_csv(const PredictiveDistribution& fc, IntervalMode mode,
                        std::ostream& out) {
  out << "# interval: " << to_string(mode) << '\n';
  out << "t,mean,sd,lo95,hi95\n";
  for (std::size_t i = 0; i < fc.size(); ++i) {
    out << format_real(fc.query_x[i]) << ',' << format_real(fc.mean[i]) << ','
        << format_real(fc.sd[i]) << ',' << format_real(fc.lo95[i]) << ','
        << format_real(fc.hi95[i]) << '\n';
  }
}

PredictiveDistribution read_forecast_csv(std::istream& in) {
  PredictiveDistribution fc;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "t,mean,sd,lo95,hi95") {
        throw InputError(fmt::format(
            "forecast file line {}: expected header t,mean,sd,lo95,hi95", line_no));
      }
      header_seen = true;
      continue;
    }
    std::vector<double> fields;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        fields.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError(fmt::format("forecast file line {}: bad number '{}'",
                                     line_no, cell));
      }
    }
    if (fields.size() != 5) {
      throw InputError(fmt::format("forecast file line {}: expected 5 fields",
                                   line_no));
    }
    fc.query_x.push_back(fields[0]);
    fc.mean.push_back(fields[1]);
    fc.sd.push_back(fields[2]);
    fc.lo95.push_back(fields[3]);
    fc.hi95.push_back(fields[4]);
  }
  if (!header_seen) throw InputError("forecast file has no header");
  return fc;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Spectral-mixture Gaussian process forecasting", "specmix"};
  app.require_subcommand(1);
  Options o;

  auto add_common_fit = [&o](CLI::App* cmd) {
    cmd->add_option("--q", o.q, "number of mixture components")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--restarts", o.restarts, "MAP restarts")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--warmup", o.warmup, "HMC warmup iterations");
    cmd->add_option("--samples", o.samples, "HMC draws per chain");
    cmd->add_option("--chains", o.chains, "HMC chains");
    cmd->add_option("--budget", o.budget, "tuning evaluations")
        ->check(CLI::PositiveNumber);
  };
  const auto interval_check = CLI::IsMember({"latent", "observation"});

  auto* fit = app.add_subcommand("fit", "fit a model and write a model file");
  fit->add_option("--data", o.data, "CSV with columns t,y")->required();
  fit->add_option("--n-train", o.n_train, "leading rows used for training (default all)");
  fit->add_option("--method", o.method, "map, hmc, bo or arima")
      ->check(CLI::IsMember({"map", "hmc", "bo", "arima"}));
  fit->add_option("--out", o.out, "model file path")->required();
  fit->add_option("--trace-out", o.trace_out, "tuning trace CSV (bo)");
  fit->add_option("--chain-out", o.chain_out, "posterior draws CSV (hmc)");
  add_common_fit(fit);

  auto* fcst = app.add_subcommand("forecast", "forecast from a model file");
  fcst->add_option("--model", o.model, "model file")->required();
  fcst->add_option("--horizon", o.horizon, "steps ahead")->required();
  fcst->add_option("--out", o.out, "forecast CSV (default stdout)");
  fcst->add_option("--interval", o.interval, "latent or observation")
      ->check(interval_check);

  auto* eval = app.add_subcommand("evaluate", "score a forecast on the test split");
  eval->add_option("--data", o.data, "CSV with columns t,y")->required();
  eval->add_option("--n-train", o.n_train, "training rows")->required();
  eval->add_option("--forecast", o.forecast, "forecast CSV")->required();
  eval->add_option("--name", o.name, "model label");
  eval->add_option("--out", o.out, "metrics CSV");

  auto* cmp = app.add_subcommand("compare", "GP-SM, GP-SM Optimized and ARIMA");
  cmp->add_option("--data", o.data, "CSV with columns t,y")->required();
  cmp->add_option("--n-train", o.n_train, "training rows")->required();
  cmp->add_option("--out", o.out, "output directory")->required();
  cmp->add_option("--trace-out", o.trace_out, "tuning trace CSV");
  cmp->add_option("--interval", o.interval, "latent or observation")
      ->check(interval_check);
  add_common_fit(cmp);

  auto* sim = app.add_subcommand("simulate", "draw a series from an SM-kernel GP");
  sim->add_option("--kernel", o.kernel,
                  "JSON {weights, frequencies, scales, noise_variance} or a file")
      ->required();
  sim->add_option("--n", o.n, "number of points")->required();
  sim->add_option("--seed", o.seed, "random seed");
  sim->add_option("--out", o.out, "output CSV (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(o, out);
    if (fcst->parsed()) return cmd_forecast(o, out);
    if (eval->parsed()) return cmd_evaluate(o, out);
    if (cmp->parsed()) return cmd_compare(o, out, err);
    if (sim->parsed()) return cmd_simulate(o, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitModelFailure;
  }
  return kExitUsage;
}

}  // namespace specmix
