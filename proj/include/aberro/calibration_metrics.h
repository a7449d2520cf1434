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

#ifndef ABERRO_CALIBRATION_METRICS_H_
#define ABERRO_CALIBRATION_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace aberro {

// Pre-softmax scores, row-major H x W x C (class index innermost).
struct LogitTensor {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> data;

  LogitTensor() = default;
  LogitTensor(int h_, int w_, int c_, float fill = 0.0f)
      : h(h_), w(w_), c(c_), data(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

  std::size_t pixels() const { return static_cast<std::size_t>(h) * w; }
  std::span<const float> pixel(std::size_t i) const {
    return {data.data() + i * c, static_cast<std::size_t>(c)};
  }
  std::span<float> pixel(std::size_t i) {
    return {data.data() + i * c, static_cast<std::size_t>(c)};
  }
  // Throws std::invalid_argument unless c >= 2 and all entries are finite.
  void Validate() const;
};

struct LabelMap {
  int h = 0;
  int w = 0;
  std::vector<int32_t> data;
  std::optional<int32_t> ignore_id;

  LabelMap() = default;
  LabelMap(int h_, int w_, int32_t fill = 0)
      : h(h_), w(w_), data(static_cast<std::size_t>(h_) * w_, fill) {}

  std::size_t pixels() const { return data.size(); }
  bool ignored(std::size_t i) const { return ignore_id && data[i] == *ignore_id; }
};

// Equal-width confidence bins over [0, 1]. Bin m (0-based) covers
// (m / N, (m + 1) / N]; confidence 0 lands in bin 0. Sums are stored so shards
// merge exactly.
struct ReliabilityBin {
  int64_t count = 0;
  double confidence_sum = 0.0;
  double correct_sum = 0.0;

  double mean_confidence() const { return count ? confidence_sum / count : 0.0; }
  double mean_accuracy() const { return count ? correct_sum / count : 0.0; }
  double gap() const { return mean_accuracy() - mean_confidence(); }
};

struct ReliabilityBins {
  int n_bins = 0;
  std::vector<ReliabilityBin> bins;
  int64_t total_count = 0;

  explicit ReliabilityBins(int n = 10);
  void Add(double confidence, bool correct);
  void Merge(const ReliabilityBins& other);
};

constexpr int kDefaultBins = 10;

int ConfidenceBin(double confidence, int n_bins);

// Numerically stable softmax of logits / t.
void SoftmaxTempered(std::span<const float> logits, double t, std::span<double> out);

// Per-pixel max softmax(logits / t). Throws std::invalid_argument for t <= 0.
std::vector<double> ConfidenceMap(const LogitTensor& logits, double t);
// 1 - ConfidenceMap.
std::vector<double> VariationRatio(const LogitTensor& logits, double t);
// Per-pixel argmax (lowest index wins ties).
LabelMap Predictions(const LogitTensor& logits);

ReliabilityBins ComputeReliabilityBins(std::span<const double> confidence,
                                       std::span<const uint8_t> correct,
                                       int n_bins = kDefaultBins);

// sum_m |B_m| / total * |acc - conf|. Throws UndefinedMetricError when empty.
double Ece(const ReliabilityBins& bins);
// Unweighted mean gap over non-empty bins. Throws UndefinedMetricError when
// every bin is empty.
double Aurec(const ReliabilityBins& bins);

// Reliability bins of each class, populated by pixels whose ground truth is
// that class (ignored pixels skipped). Accumulates into `per_class`, which
// must have one entry per logit channel.
void AccumulateClassBins(const LogitTensor& logits, const LabelMap& labels, double t,
                         std::vector<ReliabilityBins>& per_class);

// Unweighted mean of per-class ECE over classes with at least one
// ground-truth pixel.
double MeanEce(const std::vector<ReliabilityBins>& per_class);
double Mece(const LogitTensor& logits, const LabelMap& labels, double t,
            int n_bins = kDefaultBins);
// Pooled over a set of instances.
double Mece(std::span<const LogitTensor> logits, std::span<const LabelMap> labels,
            double t, int n_bins = kDefaultBins);

struct MiouResult {
  double miou = 0.0;
  // Empty when the class has an empty union.
  std::vector<std::optional<double>> per_class_iou;
};

// TP / (TP + FP + FN) per class, averaged over classes present in the
// ground truth. Pixels with an ignored ground-truth label are excluded.
MiouResult ComputeMiou(const LabelMap& pred, const LabelMap& gt, int n_classes);

// tau_i = log(1.1 + c_i / N)^-1 normalized to unit sum.
std::vector<double> ClassBalanceWeights(std::span<const int64_t> counts, int64_t n_total);

}  // namespace aberro

#endif  // ABERRO_CALIBRATION_METRICS_H_
