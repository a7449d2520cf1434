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

#ifndef ABERRO_SYNTHETIC_H_
#define ABERRO_SYNTHETIC_H_

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "aberro/calibration_metrics.h"
#include "aberro/calibrators.h"
#include "aberro/fourier_optics.h"
#include "aberro/image.h"
#include "aberro/zernike.h"

namespace aberro {

// How the generator's miscalibration temperature depends on the optics.
//   kStrehl:   t = 1 + gain (1 - S(alpha))
//   kDefocus:  t = 1 + gain |alpha_4|
//   kConstant: t = constant_temperature
enum class TemperatureLaw { kStrehl, kDefocus, kConstant };

std::string_view TemperatureLawName(TemperatureLaw law);
TemperatureLaw ParseTemperatureLaw(std::string_view name);

// Generator law, per instance with split seed s_i:
//   alpha ~ U[-half_range, half_range]^3 (OSA 3, 4, 5)
//   scene: K ~ U{min_classes..max_classes} distinct classes of n_classes,
//     dealt round-robin to the 8 x 8 pixel tiles of the size x size grid and
//     shuffled, so every present class covers the same area up to one tile
//   logits: w_k = class_margin 1{k = cell class} + logit_noise N(0, 1) for the
//     K present classes, w_k = -30 for absent ones; the logit law does not
//     depend on alpha
//   labels: y ~ softmax(w / t) restricted to the present classes, t from the
//     temperature law
// so t is the exact miscalibration temperature of the logits. The image is
// the cell-class intensity pattern degraded by the instance PSF.
struct SyntheticConfig {
  int size = 64;
  int n_classes = 8;
  int min_classes = 4;
  int max_classes = 8;
  double half_range = 0.2;  // waves
  OpticalConfig optics;
  int kernel_size = 15;
  TemperatureLaw law = TemperatureLaw::kStrehl;
  double law_gain = 1.0;
  double constant_temperature = 1.0;
  double class_margin = 3.0;
  double logit_noise = 1.0;
  bool render_image = true;

  void Validate() const;
};

struct SyntheticInstance {
  Image image;
  LabelMap labels;
  LogitTensor logits;
  ZernikeVector alpha;
  double true_optimal_t = 1.0;
  double strehl = 1.0;
  double oig = 1.0;
  double mtf_half_nyquist = 0.0;

  std::array<double, 3> alpha_array() const;
};

// Temperature law evaluated for a given aberration and Strehl ratio.
double GeneratorTemperature(const SyntheticConfig& cfg, const ZernikeVector& alpha,
                            double strehl);

// Instance `index` of the dataset for `seed`; independent of the other
// instances.
SyntheticInstance SynthInstance(const SyntheticConfig& cfg, uint64_t seed, int index,
                                const SpectralGrid& diffraction_limited);

// Deterministic per seed regardless of `threads`.
std::vector<SyntheticInstance> SynthDataset(uint64_t seed, int n_instances,
                                            const SyntheticConfig& cfg, int threads = 1);

std::vector<CalibrationSample> AsCalibrationSamples(const std::vector<SyntheticInstance>& data);

// Worker count: ABERRO_THREADS when set and positive, else `fallback`.
int ThreadBudget(int fallback = 1);

}  // namespace aberro

#endif  // ABERRO_SYNTHETIC_H_
