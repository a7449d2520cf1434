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

#include "aberro/synthetic.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace aberro {
namespace {

constexpr float kAbsentLogit = -30.0f;
constexpr int kTileSize = 8;

uint64_t SplitSeed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string_view TemperatureLawName(TemperatureLaw law) {
  switch (law) {
    case TemperatureLaw::kStrehl:
      return "strehl";
    case TemperatureLaw::kDefocus:
      return "defocus";
    case TemperatureLaw::kConstant:
      return "constant";
  }
  return "strehl";
}

TemperatureLaw ParseTemperatureLaw(std::string_view name) {
  if (name == "strehl") return TemperatureLaw::kStrehl;
  if (name == "defocus") return TemperatureLaw::kDefocus;
  if (name == "constant") return TemperatureLaw::kConstant;
  throw std::invalid_argument("unknown temperature law '" + std::string(name) + "'");
}

void SyntheticConfig::Validate() const {
  optics.Validate();
  if (size < 8) throw std::invalid_argument("scene size must be >= 8");
  if (n_classes < 2) throw std::invalid_argument("need at least two classes");
  if (min_classes < 1 || max_classes < min_classes || max_classes > n_classes) {
    throw std::invalid_argument("class count range must satisfy 1 <= min <= max <= n_classes");
  }
  if (half_range < 0.0) throw std::invalid_argument("half_range must be non-negative");
  if (kernel_size < 1 || kernel_size > size) throw std::invalid_argument("bad kernel size");
  if (law_gain < 0.0) throw std::invalid_argument("law gain must be non-negative");
  if (!(constant_temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (logit_noise < 0.0) throw std::invalid_argument("logit noise must be non-negative");
}

std::array<double, 3> SyntheticInstance::alpha_array() const {
  return {alpha.alpha(3), alpha.alpha(4), alpha.alpha(5)};
}

double GeneratorTemperature(const SyntheticConfig& cfg, const ZernikeVector& alpha,
                            double strehl) {
  switch (cfg.law) {
    case TemperatureLaw::kStrehl:
      return 1.0 + cfg.law_gain * (1.0 - std::clamp(strehl, 0.0, 1.0));
    case TemperatureLaw::kDefocus:
      return 1.0 + cfg.law_gain * std::abs(alpha.alpha(4));
    case TemperatureLaw::kConstant:
      return cfg.constant_temperature;
  }
  return 1.0;
}

SyntheticInstance SynthInstance(const SyntheticConfig& cfg, uint64_t seed, int index,
                                const SpectralGrid& diffraction_limited) {
  const uint64_t stream = SplitSeed(seed, static_cast<uint64_t>(index));
  std::mt19937_64 rng(stream);
  SyntheticInstance inst;
  inst.alpha = SampleZernike(SplitSeed(stream, 1), cfg.half_range);

  const bool need_optics = cfg.render_image || cfg.law == TemperatureLaw::kStrehl;
  Psf psf;
  if (need_optics) {
    psf = SimulatePsf(inst.alpha, cfg.optics);
    const SpectralGrid otf = ComputeOtf(psf, cfg.optics);
    const OpticalMetrics m = ComputeOpticalMetrics(otf, diffraction_limited, cfg.optics);
    inst.strehl = m.strehl;
    inst.oig = m.oig;
    inst.mtf_half_nyquist = m.mtf_half_nyquist;
  }
  inst.true_optimal_t = GeneratorTemperature(cfg, inst.alpha, inst.strehl);

  // Scene.
  const int k = std::uniform_int_distribution<int>(cfg.min_classes, cfg.max_classes)(rng);
  std::vector<int> classes(cfg.n_classes);
  std::iota(classes.begin(), classes.end(), 0);
  std::shuffle(classes.begin(), classes.end(), rng);
  classes.resize(k);
  std::sort(classes.begin(), classes.end());
  // Equal-area tiling; class areas differ by at most one tile.
  const int n = cfg.size;
  const int tiles_per_side = std::max(1, n / kTileSize);
  const int n_tiles = tiles_per_side * tiles_per_side;
  std::vector<int> tile_class(n_tiles);
  for (int t = 0; t < n_tiles; ++t) tile_class[t] = classes[t % k];
  std::shuffle(tile_class.begin(), tile_class.end(), rng);
  std::vector<int> cell(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    const int tr = std::min(r * tiles_per_side / n, tiles_per_side - 1);
    for (int c = 0; c < n; ++c) {
      const int tc = std::min(c * tiles_per_side / n, tiles_per_side - 1);
      cell[static_cast<std::size_t>(r) * n + c] = tile_class[tr * tiles_per_side + tc];
    }
  }

  // Logits and labels.
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  inst.logits = LogitTensor(n, n, cfg.n_classes, kAbsentLogit);
  inst.labels = LabelMap(n, n, 0);
  std::vector<double> p(k);
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const auto px = inst.logits.pixel(i);
    for (int j = 0; j < k; ++j) {
      const double w = (classes[j] == cell[i] ? cfg.class_margin : 0.0) + cfg.logit_noise * noise(rng);
      px[classes[j]] = static_cast<float>(w);
    }
    double peak = -INFINITY;
    for (int j = 0; j < k; ++j) peak = std::max(peak, static_cast<double>(px[classes[j]]));
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
      p[j] = std::exp((px[classes[j]] - peak) / inst.true_optimal_t);
      sum += p[j];
    }
    double u = unit(rng) * sum;
    int pick = k - 1;
    for (int j = 0; j < k; ++j) {
      u -= p[j];
      if (u < 0.0) {
        pick = j;
        break;
      }
    }
    inst.labels.data[i] = classes[pick];
  }

  // Image: cell-class intensities with a mild texture, seen through the optics.
  inst.image = Image(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int cls = cell[static_cast<std::size_t>(r) * n + c];
      const double base = (cls + 0.5) / cfg.n_classes;
      inst.image.at(r, c) = std::clamp(base + 0.05 * std::sin(0.7 * c + 1.3 * cls) *
                                                  std::cos(0.5 * r),
                                       0.0, 1.0);
    }
  }
  if (cfg.render_image) {
    inst.image = DegradeImage(inst.image, ResamplePsf(psf, cfg.optics.pixel_pitch, cfg.kernel_size));
  }
  return inst;
}

std::vector<SyntheticInstance> SynthDataset(uint64_t seed, int n_instances,
                                            const SyntheticConfig& cfg, int threads) {
  if (n_instances < 1) throw std::invalid_argument("synth_dataset needs n >= 1");
  cfg.Validate();
  SpectralGrid diffraction;
  if (cfg.render_image || cfg.law == TemperatureLaw::kStrehl) {
    diffraction = SimulateOtf(ZernikeVector(), cfg.optics);
  }
  std::vector<SyntheticInstance> out(n_instances);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n_instances; i = next++) {
      out[i] = SynthInstance(cfg, seed, i, diffraction);
    }
  };
  const int n_threads = std::clamp(threads, 1, n_instances);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

std::vector<CalibrationSample> AsCalibrationSamples(const std::vector<SyntheticInstance>& data) {
  std::vector<CalibrationSample> samples;
  samples.reserve(data.size());
  for (const SyntheticInstance& inst : data) {
    samples.push_back({&inst.logits, &inst.labels, inst.alpha_array()});
  }
  return samples;
}

int ThreadBudget(int fallback) {
  if (const char* env = std::getenv("ABERRO_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(std::min<long>(v, 256));
  }
  return std::max(fallback, 1);
}

}  // namespace aberro
