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

#include "aberro/calibration_metrics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "aberro/errors.h"

namespace aberro {
namespace {

void CheckTemperature(double t) {
  if (!(t > 0.0)) {
    throw std::invalid_argument("temperature must be positive, got " + std::to_string(t));
  }
}

void CheckLabels(const LogitTensor& logits, const LabelMap& labels) {
  if (logits.h != labels.h || logits.w != labels.w) {
    throw std::invalid_argument("logit and label shapes differ");
  }
  for (std::size_t i = 0; i < labels.pixels(); ++i) {
    if (labels.ignored(i)) continue;
    if (labels.data[i] < 0 || labels.data[i] >= logits.c) {
      throw std::invalid_argument("label " + std::to_string(labels.data[i]) +
                                  " outside [0, " + std::to_string(logits.c) + ")");
    }
  }
}

int Argmax(std::span<const float> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

void LogitTensor::Validate() const {
  if (c < 2) throw std::invalid_argument("logit tensor needs at least two classes");
  if (data.size() != static_cast<std::size_t>(h) * w * c) {
    throw std::invalid_argument("logit tensor data size does not match its shape");
  }
  for (float v : data) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite logit");
  }
}

ReliabilityBins::ReliabilityBins(int n) : n_bins(n), bins(n > 0 ? n : 0) {
  if (n < 1) throw std::invalid_argument("need at least one confidence bin");
}

void ReliabilityBins::Add(double confidence, bool correct) {
  ReliabilityBin& b = bins[ConfidenceBin(confidence, n_bins)];
  ++b.count;
  b.confidence_sum += confidence;
  b.correct_sum += correct ? 1.0 : 0.0;
  ++total_count;
}

void ReliabilityBins::Merge(const ReliabilityBins& other) {
  if (other.n_bins != n_bins) throw std::invalid_argument("bin counts differ");
  for (int m = 0; m < n_bins; ++m) {
    bins[m].count += other.bins[m].count;
    bins[m].confidence_sum += other.bins[m].confidence_sum;
    bins[m].correct_sum += other.bins[m].correct_sum;
  }
  total_count += other.total_count;
}

int ConfidenceBin(double confidence, int n_bins) {
  const int m = static_cast<int>(std::ceil(confidence * n_bins)) - 1;
  return std::clamp(m, 0, n_bins - 1);
}

void SoftmaxTempered(std::span<const float> logits, double t, std::span<double> out) {
  double peak = -INFINITY;
  for (float v : logits) peak = std::max(peak, static_cast<double>(v));
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp((logits[k] - peak) / t);
    total += out[k];
  }
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] /= total;
}

std::vector<double> ConfidenceMap(const LogitTensor& logits, double t) {
  CheckTemperature(t);
  std::vector<double> conf(logits.pixels());
  std::vector<double> probs(logits.c);
  for (std::size_t i = 0; i < logits.pixels(); ++i) {
    SoftmaxTempered(logits.pixel(i), t, probs);
    conf[i] = *std::max_element(probs.begin(), probs.end());
  }
  return conf;
}

std::vector<double> VariationRatio(const LogitTensor& logits, double t) {
  std::vector<double> vr = ConfidenceMap(logits, t);
  for (double& v : vr) v = 1.0 - v;
  return vr;
}

LabelMap Predictions(const LogitTensor& logits) {
  LabelMap pred(logits.h, logits.w);
  for (std::size_t i = 0; i < logits.pixels(); ++i) pred.data[i] = Argmax(logits.pixel(i));
  return pred;
}

ReliabilityBins ComputeReliabilityBins(std::span<const double> confidence,
                                       std::span<const uint8_t> correct, int n_bins) {
  if (confidence.size() != correct.size()) {
    throw std::invalid_argument("confidence and correctness lengths differ");
  }
  ReliabilityBins bins(n_bins);
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    if (!(confidence[i] >= 0.0 && confidence[i] <= 1.0)) {
      throw std::invalid_argument("confidence outside [0, 1]");
    }
    bins.Add(confidence[i], correct[i] != 0);
  }
  return bins;
}

double Ece(const ReliabilityBins& bins) {
  if (bins.total_count == 0) throw UndefinedMetricError("ECE of an empty population");
  double ece = 0.0;
  for (const ReliabilityBin& b : bins.bins) {
    if (b.count == 0) continue;
    ece += static_cast<double>(b.count) / bins.total_count * std::abs(b.gap());
  }
  return ece;
}

double Aurec(const ReliabilityBins& bins) {
  double sum = 0.0;
  int non_empty = 0;
  for (const ReliabilityBin& b : bins.bins) {
    if (b.count == 0) continue;
    sum += std::abs(b.gap());
    ++non_empty;
  }
  if (non_empty == 0) throw UndefinedMetricError("AUREC with every bin empty");
  return sum / non_empty;
}

void AccumulateClassBins(const LogitTensor& logits, const LabelMap& labels, double t,
                         std::vector<ReliabilityBins>& per_class) {
  CheckTemperature(t);
  CheckLabels(logits, labels);
  if (per_class.size() != static_cast<std::size_t>(logits.c)) {
    throw std::invalid_argument("per-class bins must match the class count");
  }
  std::vector<double> probs(logits.c);
  for (std::size_t i = 0; i < logits.pixels(); ++i) {
    if (labels.ignored(i)) continue;
    SoftmaxTempered(logits.pixel(i), t, probs);
    const auto top = std::max_element(probs.begin(), probs.end());
    const int y = labels.data[i];
    per_class[y].Add(*top, (top - probs.begin()) == y);
  }
}

double MeanEce(const std::vector<ReliabilityBins>& per_class) {
  double sum = 0.0;
  int present = 0;
  for (const ReliabilityBins& b : per_class) {
    if (b.total_count == 0) continue;
    sum += Ece(b);
    ++present;
  }
  if (present == 0) throw UndefinedMetricError("mECE with no labeled pixels");
  return sum / present;
}

double Mece(const LogitTensor& logits, const LabelMap& labels, double t, int n_bins) {
  std::vector<ReliabilityBins> per_class(logits.c, ReliabilityBins(n_bins));
  AccumulateClassBins(logits, labels, t, per_class);
  return MeanEce(per_class);
}

double Mece(std::span<const LogitTensor> logits, std::span<const LabelMap> labels,
            double t, int n_bins) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw std::invalid_argument("need matching, non-empty logit and label sets");
  }
  std::vector<ReliabilityBins> per_class(logits[0].c, ReliabilityBins(n_bins));
  for (std::size_t k = 0; k < logits.size(); ++k) {
    AccumulateClassBins(logits[k], labels[k], t, per_class);
  }
  return MeanEce(per_class);
}

MiouResult ComputeMiou(const LabelMap& pred, const LabelMap& gt, int n_classes) {
  if (pred.h != gt.h || pred.w != gt.w || pred.data.size() != gt.data.size()) {
    throw std::invalid_argument("prediction and ground-truth shapes differ");
  }
  if (n_classes < 1) throw std::invalid_argument("n_classes must be positive");
  std::vector<int64_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0),
      gt_count(n_classes, 0);
  auto check = [&](int32_t v) {
    if (v < 0 || v >= n_classes) {
      throw std::invalid_argument("class id " + std::to_string(v) + " out of range");
    }
  };
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    if (gt.ignored(i)) continue;
    const int32_t g = gt.data[i];
    const int32_t p = pred.data[i];
    check(g);
    check(p);
    ++gt_count[g];
    if (g == p) {
      ++tp[g];
    } else {
      ++fn[g];
      ++fp[p];
    }
  }
  MiouResult result;
  result.per_class_iou.resize(n_classes);
  double sum = 0.0;
  int present = 0;
  for (int k = 0; k < n_classes; ++k) {
    const int64_t uni = tp[k] + fp[k] + fn[k];
    if (uni > 0) result.per_class_iou[k] = static_cast<double>(tp[k]) / uni;
    if (gt_count[k] > 0) {
      sum += *result.per_class_iou[k];
      ++present;
    }
  }
  if (present == 0) throw UndefinedMetricError("mIoU with no labeled pixels");
  result.miou = sum / present;
  return result;
}

std::vector<double> ClassBalanceWeights(std::span<const int64_t> counts, int64_t n_total) {
  if (n_total <= 0) throw std::invalid_argument("total pixel count must be positive");
  std::vector<double> tau(counts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw std::invalid_argument("negative class count");
    tau[i] = 1.0 / std::log(1.1 + static_cast<double>(counts[i]) / n_total);
    total += tau[i];
  }
  for (double& v : tau) v /= total;
  return tau;
}

}  // namespace aberro
