/* Copyright 2026 The Aberro Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "cli.h"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aberro/analysis.h"
#include "aberro/calibration_metrics.h"
#include "aberro/calibrators.h"
#include "aberro/errors.h"
#include "aberro/fourier_optics.h"
#include "aberro/image.h"
#include "aberro/json_io.h"
#include "aberro/synthetic.h"
#include "aberro/tensor_io.h"
#include "aberro/zernike.h"

namespace aberro {
namespace {

constexpr double kXiSelfTestTarget = 0.824;
constexpr double kXiSelfTestTolerance = 0.03;

struct Globals {
  uint64_t seed = 0;
  std::string report;
  bool no_timestamp = false;
};

std::string UtcTimestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void Emit(Json report, const std::string& command, const Globals& g, std::ostream& out) {
  Json wrapped{{"schema", kSchemaVersion}, {"command", command}, {"seed", g.seed}};
  if (!g.no_timestamp) wrapped["generated_at"] = UtcTimestamp();
  for (auto& [key, value] : report.items()) wrapped[key] = value;
  if (g.report.empty() || g.report == "-") {
    out << DumpJson(wrapped);
  } else {
    WriteJsonFile(g.report, wrapped);
  }
}

OpticalConfig LoadOptics(const std::string& path, int grid, const std::string& mtf_mode) {
  OpticalConfig cfg;
  if (!path.empty()) {
    const Json j = ReadJsonFile(path);
    RequireSchema(j, path);
    cfg = OpticalConfigFromJson(j);
  }
  if (grid > 0) cfg.grid_n = grid;
  if (mtf_mode == "modulus") cfg.mtf_mode = MtfMode::kModulus;
  if (mtf_mode == "real_part") cfg.mtf_mode = MtfMode::kRealPart;
  cfg.Validate();
  return cfg;
}

TrainConfig LoadTrainConfig(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  const Json j = ReadJsonFile(path);
  RequireSchema(j, path);
  return TrainConfigFromJson(j);
}

SampleSeries LoadSeries(const std::string& path) {
  const Json j = ReadJsonFile(path);
  RequireSchema(j, path);
  SampleSeries s;
  try {
    s.x = j.at("x").get<std::vector<double>>();
    s.y = j.at("y").get<std::vector<double>>();
    if (j.contains("sigma_y")) s.sigma_y = j["sigma_y"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what(), 0);
  }
  s.Validate();
  return s;
}

Json RadialProfileJson(const SpectralGrid& s) {
  const std::vector<double> profile = RadialMtfProfile(s);
  Json j = Json::array();
  for (double v : profile) j.push_back(v);
  return j;
}

Json PerClassJson(const std::vector<ReliabilityBins>& per_class) {
  Json classes = Json::array();
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    if (per_class[k].total_count == 0) continue;
    Json entry = ToJson(per_class[k]);
    entry["class"] = k;
    entry["ece"] = Ece(per_class[k]);
    entry["aurec"] = Aurec(per_class[k]);
    classes.push_back(entry);
  }
  return classes;
}

// Dataset directory, verified against its manifest.
struct LoadedData {
  Dataset data;
  std::vector<CalibrationSample> samples;
};

LoadedData LoadData(const std::string& dir) {
  LoadedData d;
  d.data = ReadDataset(dir);
  if (d.data.instances.empty()) throw InsufficientDataError(dir + " holds no instances");
  d.samples = AsCalibrationSamples(d.data.instances);
  return d;
}

std::vector<CalibratorVariant> ParseVariantList(const std::string& text) {
  std::vector<CalibratorVariant> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ParseVariant(item));
  if (out.empty()) throw std::invalid_argument("--variants is empty");
  return out;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"aberro: optics-aware calibration toolkit"};
  app.name("aberro");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--report", g.report, "Write the JSON report here instead of stdout");
  app.add_flag("--no-timestamp", g.no_timestamp, "Omit generated_at from reports");

  std::function<void()> action;
  std::string command;

  // degrade
  auto* degrade = app.add_subcommand("degrade", "Blur a PGM image with a Zernike PSF");
  std::string deg_in, deg_out, deg_zernike = "0,0,0", deg_optics;
  int deg_kernel = 15;
  degrade->add_option("--image", deg_in, "Input PGM")->required();
  degrade->add_option("--out", deg_out, "Output PGM")->required();
  degrade->add_option("--zernike", deg_zernike, "a3,a4,a5 in waves")->capture_default_str();
  degrade->add_option("--kernel", deg_kernel, "Pixel kernel size (odd)")->capture_default_str();
  degrade->add_option("--optics", deg_optics, "Optical config JSON");
  degrade->callback([&] {
    command = "degrade";
    action = [&] {
      const OpticalConfig cfg = LoadOptics(deg_optics, 0, "");
      const ZernikeVector alpha = ParseZernikeFlag(deg_zernike);
      const Psf psf = SimulatePsf(alpha, cfg);
      const Image blurred =
          DegradeImage(ReadPgm(deg_in), ResamplePsf(psf, cfg.pixel_pitch, deg_kernel));
      WritePgm(deg_out, blurred);
      Emit(Json{{"zernike", ToJson(alpha)},
                {"optics", ToJson(cfg)},
                {"metrics", ToJson(ComputeOpticalMetrics(alpha, cfg))},
                {"output", deg_out}},
           command, g, out);
    };
  });

  // optics-metrics
  auto* optics = app.add_subcommand("optics-metrics", "Strehl, OIG and MTF for a Zernike vector");
  std::string opt_zernike = "0,0,0", opt_config, opt_mode;
  int opt_grid = 0;
  bool opt_profile = false;
  optics->add_option("--zernike", opt_zernike, "a3,a4,a5 in waves")->capture_default_str();
  optics->add_option("--optics", opt_config, "Optical config JSON");
  optics->add_option("--grid", opt_grid, "Pupil grid size override");
  optics->add_option("--mtf-mode", opt_mode, "real_part or modulus")
      ->check(CLI::IsMember({"real_part", "modulus"}));
  optics->add_flag("--profile", opt_profile, "Include the radial MTF profile");
  optics->callback([&] {
    command = "optics-metrics";
    action = [&] {
      const OpticalConfig cfg = LoadOptics(opt_config, opt_grid, opt_mode);
      const ZernikeVector alpha = ParseZernikeFlag(opt_zernike);
      const SpectralGrid s = SimulateOtf(alpha, cfg);
      const SpectralGrid dl = SimulateOtf(ZernikeVector{}, cfg);
      Json report{{"zernike", ToJson(alpha)},
                  {"optics", ToJson(cfg)},
                  {"metrics", ToJson(ComputeOpticalMetrics(s, dl, cfg))},
                  {"mtf_monotone", MtfIsMonotone(s)}};
      if (opt_profile) report["radial_mtf"] = RadialProfileJson(s);
      Emit(report, command, g, out);
    };
  });

  // ece
  auto* ece = app.add_subcommand("ece", "Per-class ECE and mECE of logits against labels");
  std::string ece_logits, ece_labels, ece_data;
  double ece_t = 1.0;
  int ece_bins = kDefaultBins;
  std::optional<int32_t> ece_ignore;
  bool ece_true_t = false;
  ece->add_option("--logits", ece_logits, "Logit TNSR [H,W,C]");
  ece->add_option("--labels", ece_labels, "Label TNSR [H,W]");
  ece->add_option("--data", ece_data, "Dataset directory (pooled over instances)");
  ece->add_option("--t", ece_t, "Temperature")->capture_default_str();
  ece->add_option("--bins", ece_bins, "Confidence bins")->capture_default_str();
  ece->add_option("--ignore-id", ece_ignore, "Label id excluded from scoring");
  ece->add_flag("--at-true-t", ece_true_t, "Score each instance at its generator temperature");
  ece->callback([&] {
    command = "ece";
    action = [&] {
      if (ece_data.empty() == (ece_logits.empty() || ece_labels.empty())) {
        throw std::invalid_argument("ece needs either --data or both --logits and --labels");
      }
      std::vector<LogitTensor> logits;
      std::vector<LabelMap> labels;
      std::vector<double> temps;
      if (!ece_data.empty()) {
        Dataset d = ReadDataset(ece_data);
        for (auto& inst : d.instances) {
          logits.push_back(std::move(inst.logits));
          labels.push_back(std::move(inst.labels));
          temps.push_back(ece_true_t ? inst.true_optimal_t : ece_t);
        }
      } else {
        logits.push_back(TensorToLogits(ReadTensor(ece_logits)));
        labels.push_back(TensorToLabels(ReadTensor(ece_labels)));
        if (ece_true_t) throw std::invalid_argument("--at-true-t needs --data");
        temps.push_back(ece_t);
      }
      if (logits.empty()) throw InsufficientDataError("no instances to score");
      for (auto& l : labels) l.ignore_id = ece_ignore;
      std::vector<ReliabilityBins> per_class(logits[0].c, ReliabilityBins(ece_bins));
      double instance_sum = 0.0;
      for (std::size_t i = 0; i < logits.size(); ++i) {
        AccumulateClassBins(logits[i], labels[i], temps[i], per_class);
        instance_sum += Mece(logits[i], labels[i], temps[i], ece_bins);
      }
      Json report{{"temperature", ece_true_t ? Json("generator") : Json(ece_t)},
                  {"n_bins", ece_bins},
                  {"instances", logits.size()},
                  {"mece", MeanEce(per_class)},
                  {"mean_instance_mece", instance_sum / static_cast<double>(logits.size())},
                  {"classes", PerClassJson(per_class)}};
      if (logits.size() == 1) {
        report["miou"] = ComputeMiou(Predictions(logits[0]), labels[0], logits[0].c).miou;
      }
      Emit(report, command, g, out);
    };
  });

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Fit a TS, PTS or PIPTS calibrator");
  std::string cal_variant, cal_train, cal_val, cal_config, cal_out;
  calibrate->add_option("variant", cal_variant, "ts, pts or pipts")
      ->required()
      ->check(CLI::IsMember({"ts", "pts", "pipts"}));
  calibrate->add_option("--train", cal_train, "Training dataset directory")->required();
  calibrate->add_option("--val", cal_val, "Validation dataset directory");
  calibrate->add_option("--config", cal_config, "Training config JSON");
  calibrate->add_option("--out", cal_out, "Model JSON output")->required();
  calibrate->callback([&] {
    command = "calibrate";
    action = [&] {
      const TrainConfig cfg = LoadTrainConfig(cal_config);
      const CalibratorVariant variant = ParseVariant(cal_variant);
      LoadedData train = LoadData(cal_train);
      std::optional<LoadedData> val;
      if (!cal_val.empty()) val = LoadData(cal_val);
      TrainResult r = val ? TrainCalibrator(variant, train.samples, val->samples, cfg, g.seed)
                          : TrainCalibrator(variant, train.samples, cfg, g.seed);
      r.model.config_hash = ConfigHash(cfg);
      WriteJsonFile(cal_out, ModelToJson(r.model, cfg));
      Json report{{"variant", cal_variant},
                  {"model", cal_out},
                  {"config_hash", r.model.config_hash},
                  {"train_mece", EvaluateMece(r.model, train.samples)}};
      if (variant == CalibratorVariant::kTs) {
        report["temperature"] = r.model.temperature;
      } else {
        report["best_epoch"] = r.history.best_epoch;
        report["train_loss"] = r.history.train_loss;
        report["val_loss"] = r.history.val_loss;
      }
      if (val) report["val_mece"] = EvaluateMece(r.model, val->samples);
      Emit(report, command, g, out);
    };
  });

  // xi
  auto* xi = app.add_subcommand("xi", "Chatterjee xi and Pearson rho of a series");
  std::string xi_series;
  bool xi_self_test = false;
  int xi_seeds = 100;
  xi->add_option("--series", xi_series, "Series JSON with x and y arrays");
  xi->add_flag("--self-test", xi_self_test, "Run the n = 1001 toy study");
  xi->add_option("--seeds", xi_seeds, "Seeds in the self-test")->capture_default_str();
  xi->callback([&] {
    command = "xi";
    action = [&] {
      if (xi_self_test) {
        if (xi_seeds < 2) throw std::invalid_argument("--seeds must be at least 2");
        double xi_sum = 0.0, rho_sum = 0.0;
        for (int k = 0; k < xi_seeds; ++k) {
          const uint64_t s = g.seed + static_cast<uint64_t>(k);
          const SampleSeries series = GenerateTestSeries(1001, 0.3, s);
          xi_sum += ChatterjeeXi(series, s);
          rho_sum += PearsonRho(series);
        }
        const double mean_xi = xi_sum / xi_seeds;
        const bool pass = std::abs(mean_xi - kXiSelfTestTarget) <= kXiSelfTestTolerance;
        Emit(Json{{"n", 1001},
                  {"sigma_eps", 0.3},
                  {"seeds", xi_seeds},
                  {"mean_xi", mean_xi},
                  {"mean_pearson", rho_sum / xi_seeds},
                  {"target", kXiSelfTestTarget},
                  {"tolerance", kXiSelfTestTolerance},
                  {"pass", pass}},
             command, g, out);
        return;
      }
      if (xi_series.empty()) throw std::invalid_argument("xi needs --series or --self-test");
      const SampleSeries s = LoadSeries(xi_series);
      Emit(Json{{"n", s.size()}, {"xi", ChatterjeeXi(s, g.seed)}, {"pearson", PearsonRho(s)}},
           command, g, out);
    };
  });

  // fit-sensitivity
  auto* fit = app.add_subcommand("fit-sensitivity", "Fit the sensitivity model to a series");
  std::string fit_series;
  int fit_mc = 0, fit_band_points = 101;
  double fit_k = 2.0;
  fit->add_option("--series", fit_series, "Series JSON with x, y and optional sigma_y")
      ->required();
  fit->add_option("--mc", fit_mc, "Monte Carlo resamples for the covariance (0: analytic)");
  fit->add_option("--k", fit_k, "Band coverage factor")->capture_default_str();
  fit->add_option("--band-points", fit_band_points, "Band grid size")->capture_default_str();
  fit->callback([&] {
    command = "fit-sensitivity";
    action = [&] {
      const SampleSeries s = LoadSeries(fit_series);
      FitResult r = FitSensitivity(s);
      std::string source = "analytic";
      if (fit_mc > 0) {
        r.covariance = McCovariance(s, fit_mc, g.seed, {}, ThreadBudget());
        source = "monte_carlo";
      }
      if (fit_band_points < 2) throw std::invalid_argument("--band-points must be at least 2");
      const auto [lo, hi] = std::minmax_element(s.x.begin(), s.x.end());
      std::vector<double> grid(fit_band_points);
      for (int i = 0; i < fit_band_points; ++i) {
        grid[i] = *lo + (*hi - *lo) * i / (fit_band_points - 1);
      }
      r.band = ConfidenceBand(r, grid, fit_k);
      Json report = ToJson(r);
      report["covariance_source"] = source;
      report["k"] = fit_k;
      Emit(report, command, g, out);
    };
  });

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  std::string syn_out, syn_config, syn_law;
  int syn_n = 8;
  std::optional<double> syn_half_range, syn_gain, syn_constant_t;
  std::optional<int> syn_size;
  synth->add_option("--n", syn_n, "Instances")->capture_default_str();
  synth->add_option("--out", syn_out, "Output directory")->required();
  synth->add_option("--config", syn_config, "Synthetic config JSON");
  synth->add_option("--law", syn_law, "strehl, defocus or constant");
  synth->add_option("--gain", syn_gain, "Temperature law gain");
  synth->add_option("--constant-t", syn_constant_t, "Temperature of the constant law");
  synth->add_option("--half-range", syn_half_range, "Zernike half range in waves");
  synth->add_option("--size", syn_size, "Scene side in pixels");
  synth->callback([&] {
    command = "synth";
    action = [&] {
      SyntheticConfig cfg;
      if (!syn_config.empty()) {
        const Json j = ReadJsonFile(syn_config);
        RequireSchema(j, syn_config);
        cfg = SyntheticConfigFromJson(j);
      }
      if (!syn_law.empty()) cfg.law = ParseTemperatureLaw(syn_law);
      if (syn_gain) cfg.law_gain = *syn_gain;
      if (syn_constant_t) cfg.constant_temperature = *syn_constant_t;
      if (syn_half_range) cfg.half_range = *syn_half_range;
      if (syn_size) cfg.size = *syn_size;
      cfg.Validate();
      const auto data = SynthDataset(g.seed, syn_n, cfg, ThreadBudget());
      WriteDataset(syn_out, data, cfg, g.seed);
      Json temps = Json::array();
      for (const auto& inst : data) temps.push_back(inst.true_optimal_t);
      Emit(Json{{"out", syn_out},
                {"instances", data.size()},
                {"generator", ToJson(cfg)},
                {"true_optimal_t", temps}},
           command, g, out);
    };
  });

  // ensemble
  auto* ensemble = app.add_subcommand("ensemble", "Deep-ensemble comparison of calibrators");
  std::string ens_train, ens_eval, ens_config, ens_variants = "pts,pipts";
  int ens_members = 11;
  double ens_k = kEnsembleK10;
  ensemble->add_option("--train", ens_train, "Training dataset directory")->required();
  ensemble->add_option("--eval", ens_eval, "Held-out dataset directory")->required();
  ensemble->add_option("--config", ens_config, "Training config JSON");
  ensemble->add_option("--members", ens_members, "Members per ensemble")->capture_default_str();
  ensemble->add_option("--variants", ens_variants, "Comma list, two entries are compared")
      ->capture_default_str();
  ensemble->add_option("--k", ens_k, "Significance factor")->capture_default_str();
  ensemble->callback([&] {
    command = "ensemble";
    action = [&] {
      if (ens_members < 2) throw std::invalid_argument("--members must be at least 2");
      const TrainConfig cfg = LoadTrainConfig(ens_config);
      const LoadedData train = LoadData(ens_train);
      const LoadedData eval = LoadData(ens_eval);
      std::vector<EnsembleReport> reports;
      for (CalibratorVariant v : ParseVariantList(ens_variants)) {
        reports.push_back(EvaluateEnsemble(v, ens_members, train.samples, eval.samples, cfg,
                                           g.seed, ThreadBudget()));
      }
      Json report{{"config_hash", ConfigHash(cfg)}, {"members", ens_members}};
      if (reports.size() == 2) {
        report["comparison"] = ToJson(CompareEnsembles(reports[0], reports[1], ens_k));
      }
      Json list = Json::array();
      for (const auto& r : reports) list.push_back(ToJson(r));
      report["ensembles"] = list;
      Emit(report, command, g, out);
    };
  });

  // report
  auto* rep = app.add_subcommand("report", "Score a saved model on a dataset");
  std::string rep_model, rep_data;
  int rep_hist_bins = 20;
  rep->add_option("--model", rep_model, "Model JSON")->required();
  rep->add_option("--data", rep_data, "Dataset directory")->required();
  rep->add_option("--histogram-bins", rep_hist_bins, "Deviation histogram bins")
      ->capture_default_str();
  rep->callback([&] {
    command = "report";
    action = [&] {
      const CalibratorModel model = ModelFromJson(ReadJsonFile(rep_model));
      const LoadedData data = LoadData(rep_data);
      double t1 = 0.0;
      for (const auto& s : data.samples) t1 += Mece(*s.logits, *s.labels, 1.0);
      Json report{{"variant", std::string(VariantName(model.variant))},
                  {"config_hash", model.config_hash},
                  {"instances", data.samples.size()},
                  {"mece", EvaluateMece(model, data.samples)},
                  {"mece_uncalibrated", t1 / static_cast<double>(data.samples.size())}};
      if (data.samples.size() >= 10) {
        report["temperature_deviation"] =
            ToJson(TemperatureDeviationHistogram(model, data.samples, rep_hist_bins));
      }
      Emit(report, command, g, out);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "aberro: " << e.what() << "\n" << app.help();
    return 2;
  }
  try {
    action();
  } catch (const std::invalid_argument& e) {
    err << "aberro " << command << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "aberro " << command << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace aberro
