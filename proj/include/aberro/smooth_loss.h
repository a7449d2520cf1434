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

#ifndef ABERRO_SMOOTH_LOSS_H_
#define ABERRO_SMOOTH_LOSS_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "aberro/calibration_metrics.h"

namespace aberro {

struct SmoothLossConfig {
  double beta_s = 1000.0;  // softmax sharpness replacing argmax / binning
  double eta = 50.0;       // loss modulation
  double kappa = 8.0;      // temperature regularizer
  int n_bins = kDefaultBins;

  void Validate() const;
};

struct ValueAndSlope {
  double value = 0.0;
  double slope = 0.0;  // derivative with respect to the temperature
};

// Smooth surrogate of Mece(logits, labels, t, n_bins):
//   confidence  = sum_c p_c softmax(beta p)_c
//   correctness = softmax(beta p)_y
//   bin weights = softmax_m(-beta (conf - center_m)^2 / width)
//   |gap|       -> gap * tanh(beta gap)
// per-class bin means are weight-averaged; classes are conditioned on the
// ground truth. The slope is exact (forward-mode) for the same graph.
ValueAndSlope SoftMece(const LogitTensor& logits, const LabelMap& labels, double t,
                       const SmoothLossConfig& cfg);
double SoftMeceValue(const LogitTensor& logits, const LabelMap& labels, double t,
                     const SmoothLossConfig& cfg);

// f(x; eta) = x - tanh(eta x) / eta and f'(x) = tanh^2(eta x).
double ModulationF(double x, double eta);
double ModulationFPrime(double x, double eta);

// g(t; kappa) = -(tanh(kappa t) - 1) / kappa and g'(t) = tanh^2(kappa t) - 1.
double RegularizerG(double t, double kappa);
double RegularizerGPrime(double t, double kappa);

// L(ECE, T) = f(ECE) + g(T).
double PiptsLoss(double ece, double t, const SmoothLossConfig& cfg);
// dL/dT = f'(ECE) dECE/dT + g'(T).
double PiptsLossSlope(double d_ece_d_t, double ece, double t, const SmoothLossConfig& cfg);
// dL/dtheta_k = (f'(ECE) dECE/dT + g'(T)) dT/dtheta_k.
std::vector<double> PiptsLossGrad(double d_ece_d_t, double ece, double t,
                                  std::span<const double> d_t_d_theta,
                                  const SmoothLossConfig& cfg);

constexpr double kLogClamp = 1e-12;
constexpr double kDefaultFocalGamma = 2.0;

// mean_pixels tau_y (1 - p_y)^gamma (-log max(p_y, 1e-12)). `probs` holds
// n_classes probabilities per pixel. The clamp caps the per-pixel penalty at
// -log(1e-12) ~ 27.6 instead of diverging.
double FocalBalancedNll(std::span<const double> probs, int n_classes,
                        std::span<const int32_t> labels, std::span<const double> tau,
                        double gamma = kDefaultFocalGamma);

// ||K^T K - I||_F for a (kh, kw, in, out) kernel with out innermost, reshaped
// to (kh * kw * in) x out.
double KernelOrthonormalityPenalty(std::span<const double> kernel,
                                   const std::array<int, 4>& dims);

}  // namespace aberro

#endif  // ABERRO_SMOOTH_LOSS_H_
