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

#ifndef ABERRO_CALIBRATORS_H_
#define ABERRO_CALIBRATORS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aberro/calibration_metrics.h"
#include "aberro/smooth_loss.h"
#include "aberro/temperature_net.h"
#include "aberro/zernike.h"

namespace aberro {

enum class CalibratorVariant { kTs, kPts, kPipts };

std::string_view VariantName(CalibratorVariant v);
// Accepts "ts", "pts", "pipts"; throws std::invalid_argument otherwise.
CalibratorVariant ParseVariant(std::string_view name);

// Non-owning view of one calibration instance.
struct CalibrationSample {
  const LogitTensor* logits = nullptr;
  const LabelMap* labels = nullptr;
  std::array<double, 3> alpha{};  // (alpha_3, alpha_4, alpha_5) in waves
};

// softmax(logits / t) per pixel, H x W x C. Throws std::invalid_argument for
// t <= 0.
std::vector<double> ApplyTemperature(const LogitTensor& logits, double t);

// Mean negative log-likelihood of the labels under softmax(logits / t).
double MeanNll(std::span<const CalibrationSample> samples, double t);

struct TsFit {
  double temperature = 1.0;
  double nll = 0.0;
};

// Golden-section search for the NLL minimizer over log t in
// [log 0.05, log 20], tolerance 1e-4 in log t.
TsFit FitTemperatureScaling(std::span<const CalibrationSample> validation);

struct InstanceTemperature {
  double temperature = 1.0;
  double mece = 0.0;
  // Only one ground-truth class present; the coarse-grid argmin is returned
  // without refinement.
  bool degenerate = false;
};

// argmin_t Mece(logits, labels, t): 64-point log grid on [0.05, 20] refined by
// golden-section search. t = 1 is always a candidate, so the result never does
// worse than the uncalibrated logits.
InstanceTemperature OptimalInstanceTemperature(const LogitTensor& logits,
                                               const LabelMap& labels,
                                               int n_bins = kDefaultBins);

struct TrainConfig {
  SmoothLossConfig loss;
  TemperatureNetConfig net = {32, 8, {8, 16, 32}, 16, false};  // in_channels from the data
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 4;
  int max_epochs = 200;
  int plateau_epochs = 40;      // learning rate x0.1 after this many stale epochs
  int early_stop_epochs = 100;  // stop after this many stale epochs
  double validation_fraction = 0.2;
  // Per-step random class-channel permutation and dihedral transform of the
  // network input. The loss target is invariant under both.
  bool augment = true;
};

struct CalibratorModel {
  CalibratorVariant variant = CalibratorVariant::kTs;
  double temperature = 1.0;  // TS
  TemperatureNet net;        // PTS / PIPTS
  double input_mean = 0.0;   // corpus standardization of the logits
  double input_scale = 1.0;
  // Per-coefficient standardization of the prior (PIPTS).
  std::array<double, 3> prior_mean{};
  std::array<double, 3> prior_scale{1.0, 1.0, 1.0};
  uint64_t seed = 0;
  std::string config_hash;

  // Standardized, downsampled network input.
  std::vector<double> PrepareInput(const LogitTensor& logits) const;
  std::array<double, 3> PreparePrior(std::span<const double> alpha) const;
  double PredictTemperature(const LogitTensor& logits,
                            std::span<const double> alpha = {}) const;
};

double PtsForward(const CalibratorModel& model, const LogitTensor& logits);
double PiptsForward(const CalibratorModel& model, const LogitTensor& logits,
                    const ZernikeVector& alpha);

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;
};

struct TrainResult {
  CalibratorModel model;
  TrainHistory history;
};

// TS: FitTemperatureScaling. PTS / PIPTS: minimizes the mean over instances of
// PiptsLoss(SoftMece(instance, T(theta)), T(theta)) with Adam; the network
// gradient is dL/dT (PiptsLossSlope) backpropagated through T(theta). Returns
// the parameters with the best validation loss. Deterministic per seed.
// Throws TrainingError on a non-finite loss.
TrainResult TrainCalibrator(CalibratorVariant variant,
                            std::span<const CalibrationSample> train,
                            const TrainConfig& cfg, uint64_t seed);
// Same with an explicit validation set instead of the seeded split. TS fits
// on `validation`.
TrainResult TrainCalibrator(CalibratorVariant variant,
                            std::span<const CalibrationSample> train,
                            std::span<const CalibrationSample> validation,
                            const TrainConfig& cfg, uint64_t seed);

// Mean hard instance mECE over `eval` with the model's temperatures.
double EvaluateMece(const CalibratorModel& model, std::span<const CalibrationSample> eval,
                    int n_bins = kDefaultBins);

constexpr double kEnsembleK10 = 2.23;

struct EnsembleReport {
  CalibratorVariant variant = CalibratorVariant::kPts;
  std::vector<uint64_t> member_seeds;
  std::vector<double> member_mece;
  std::vector<uint64_t> failed_seeds;
  double mean = 0.0;
  double std_of_mean = 0.0;  // sample std / sqrt(members)
  double k_factor = kEnsembleK10;
  bool significant = false;  // set by CompareEnsembles
};

// Trains n_members models with seeds base_seed + m (identical data and
// hyperparameters) and scores each on `eval`. Members that fail to train are
// listed in failed_seeds. `threads` caps parallel members (<= 0: one).
EnsembleReport EvaluateEnsemble(CalibratorVariant variant, int n_members,
                                std::span<const CalibrationSample> train,
                                std::span<const CalibrationSample> eval,
                                const TrainConfig& cfg, uint64_t base_seed,
                                int threads = 1);
// Same, with every member trained from one seed.
EnsembleReport EvaluateEnsembleWithSeeds(CalibratorVariant variant,
                                         std::span<const uint64_t> seeds,
                                         std::span<const CalibrationSample> train,
                                         std::span<const CalibrationSample> eval,
                                         const TrainConfig& cfg, int threads = 1);

struct EnsembleComparison {
  double difference = 0.0;  // a.mean - b.mean
  double pooled_std_of_mean = 0.0;
  double threshold = 0.0;   // k * pooled_std_of_mean
  bool significant = false;
};

// Significance of |a.mean - b.mean| > k sqrt(a.sem^2 + b.sem^2). Marks both
// reports.
EnsembleComparison CompareEnsembles(EnsembleReport& a, EnsembleReport& b,
                                    double k = kEnsembleK10);

struct GaussianFit {
  double mu = 0.0;
  double sigma = 0.0;
  double mu_uncertainty = 0.0;
  double sigma_uncertainty = 0.0;
};

// Maximum-likelihood Gaussian by Newton iterations on the negative
// log-likelihood; uncertainties from the inverse curvature of the NLL at the
// optimum. A zero-spread sample returns sigma = 0 and zero uncertainties.
GaussianFit FitGaussianNll(std::span<const double> samples);

struct TemperatureDeviation {
  std::vector<double> predicted;
  std::vector<double> optimal;
  std::vector<double> deltas;  // predicted - optimal
  GaussianFit fit;
  std::vector<double> bin_edges;
  std::vector<int> counts;
};

// Deltas, Gaussian fit and histogram from paired temperatures. Throws
// InsufficientDataError for fewer than 10 pairs.
TemperatureDeviation SummarizeTemperatureDeviation(std::vector<double> predicted,
                                                   std::vector<double> optimal,
                                                   int histogram_bins = 20);

// Predicted temperature versus OptimalInstanceTemperature per instance.
// Throws InsufficientDataError for fewer than 10 instances.
TemperatureDeviation TemperatureDeviationHistogram(const CalibratorModel& model,
                                                   std::span<const CalibrationSample> eval,
                                                   int histogram_bins = 20,
                                                   int n_bins = kDefaultBins);

}  // namespace aberro

#endif  // ABERRO_CALIBRATORS_H_
