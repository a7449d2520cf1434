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

#ifndef ABERRO_TEMPERATURE_NET_H_
#define ABERRO_TEMPERATURE_NET_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aberro/calibration_metrics.h"

namespace aberro {

constexpr int kPriorWidth = 3;  // (alpha_3, alpha_4, alpha_5)

struct TemperatureNetConfig {
  int input_res = 32;
  int in_channels = 8;
  std::vector<int> widths = {16, 32, 64};  // strided 3x3 conv blocks
  int hidden = 32;
  bool use_prior = false;

  void Validate() const;
};

// Encoder of stride-2 3x3 convolutions with GELU, global average pooling,
// optional concatenation of the Zernike prior, two dense layers and a
// softplus output: T = softplus(head(concat(encode(x) [, alpha]))) > 0.
//
// Parameters live in one flat vector. Convolution kernels are stored as
// (3, 3, in, out) with out innermost; the prior inputs occupy the last
// kPriorWidth rows of the first dense layer.
class TemperatureNet {
 public:
  struct Cache {
    std::vector<std::vector<double>> activations;  // input of each conv block
    std::vector<std::vector<double>> pre;          // conv pre-activations
    std::vector<double> features;                  // pooled (+ prior)
    std::vector<double> hidden_pre;
    std::vector<double> hidden;
    double z = 0.0;
  };

  TemperatureNet() = default;
  explicit TemperatureNet(const TemperatureNetConfig& cfg);

  // He-normal weights, zero biases, output bias softplus^-1(1). The prior rows
  // start at zero, so PTS and PIPTS nets built from one seed compute the same
  // function at initialization.
  void InitRandom(uint64_t seed);

  const TemperatureNetConfig& config() const { return cfg_; }
  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  // Rows of the first dense layer fed by the prior (empty for PTS).
  std::span<double> prior_weights();

  std::size_t input_size() const {
    return static_cast<std::size_t>(cfg_.input_res) * cfg_.input_res * cfg_.in_channels;
  }

  // `input` is input_res x input_res x in_channels (HWC). Throws
  // std::invalid_argument on a size mismatch.
  double Forward(std::span<const double> input, std::span<const double> prior,
                 Cache* cache = nullptr) const;

  // Adds upstream * dT/dtheta to `grad`.
  void Backward(const Cache& cache, double upstream, std::span<double> grad) const;

 private:
  struct ConvLayer {
    int in_res, out_res, in_ch, out_ch;
    std::size_t w_offset, b_offset;
  };

  TemperatureNetConfig cfg_;
  std::vector<ConvLayer> convs_;
  std::size_t feature_width_ = 0;
  std::size_t d1_w_ = 0, d1_b_ = 0, d2_w_ = 0, d2_b_ = 0;
  std::vector<double> params_;
};

// Box-averages an H x W x C logit tensor down to res x res x C. Throws
// std::invalid_argument unless H and W are multiples of res.
std::vector<double> DownsampleLogits(const LogitTensor& logits, int res);

double Softplus(double z);

}  // namespace aberro

#endif  // ABERRO_TEMPERATURE_NET_H_
