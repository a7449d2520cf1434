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

#include "aberro/fourier_optics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "aberro/errors.h"
#include "fft.h"

namespace aberro {
namespace {

using Complex = std::complex<double>;

bool IsPowerOfTwo(int v) { return v > 0 && (v & (v - 1)) == 0; }

void CheckSameGeometry(const SpectralGrid& a, const SpectralGrid& b) {
  if (a.size != b.size || a.mtf.size() != b.mtf.size() ||
      std::abs(a.freq_step - b.freq_step) > 1e-9 * std::abs(b.freq_step)) {
    throw std::invalid_argument("spectral grids do not share geometry");
  }
}

double Bilinear(const SpectralGrid& s, double row, double col) {
  const int r0 = static_cast<int>(std::floor(row));
  const int c0 = static_cast<int>(std::floor(col));
  const double fr = row - r0;
  const double fc = col - c0;
  auto value = [&](int r, int c) {
    if (r < 0 || c < 0 || r >= s.size || c >= s.size) return 0.0;
    return s.mtf_at(r, c);
  };
  return (1 - fr) * ((1 - fc) * value(r0, c0) + fc * value(r0, c0 + 1)) +
         fr * ((1 - fc) * value(r0 + 1, c0) + fc * value(r0 + 1, c0 + 1));
}

int Reflect(int i, int n) {
  // numpy 'reflect': -1 -> 1, n -> n - 2
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

}  // namespace

void OpticalConfig::Validate() const {
  if (!IsPowerOfTwo(grid_n) || grid_n < 16) {
    throw std::invalid_argument("grid_n must be a power of two >= 16");
  }
  if (pad_factor < 2) throw std::invalid_argument("pad_factor must be >= 2");
  if (!(wavelength > 0.0) || !(f_number > 0.0) || !(pixel_pitch > 0.0)) {
    throw std::invalid_argument(
        "wavelength, f_number and pixel_pitch must be positive");
  }
}

PupilField MakePupilFunction(const WavefrontMap& w, const OpticalConfig& cfg) {
  cfg.Validate();
  if (w.n > cfg.grid_n) {
    throw std::invalid_argument("wavefront grid larger than the pupil grid");
  }
  PupilField p;
  p.size = cfg.padded_size();
  p.field.assign(static_cast<std::size_t>(p.size) * p.size, Complex(0.0, 0.0));
  const int offset = (p.size - w.n) / 2;
  for (int r = 0; r < w.n; ++r) {
    for (int c = 0; c < w.n; ++c) {
      if (!w.inside(r, c)) continue;
      const double phase = 2.0 * std::numbers::pi * w.at(r, c);
      p.field[static_cast<std::size_t>(r + offset) * p.size + (c + offset)] =
          std::polar(1.0, phase);
    }
  }
  return p;
}

Psf ComputePsf(const PupilField& pupil, const OpticalConfig& cfg) {
  std::vector<Complex> field = pupil.field;
  internal::Fft2d(field, pupil.size, pupil.size, /*inverse=*/false);
  std::vector<double> intensity(field.size());
  double total = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    intensity[i] = std::norm(field[i]);
    total += intensity[i];
  }
  if (!(total > 0.0)) throw DegenerateInputError("pupil is identically zero");
  for (double& v : intensity) v /= total;

  Psf psf;
  psf.size = pupil.size;
  psf.grid = internal::FftShift(intensity, pupil.size, pupil.size);
  psf.sample_spacing = cfg.wavelength * cfg.f_number * cfg.grid_n / pupil.size;
  return psf;
}

SpectralGrid ComputeOtf(const Psf& psf, const OpticalConfig& cfg) {
  const int m = psf.size;
  std::vector<double> unshifted = internal::FftShift(psf.grid, m, m, /*inverse=*/true);
  std::vector<Complex> spectrum(unshifted.begin(), unshifted.end());
  internal::Fft2d(spectrum, m, m, /*inverse=*/false);
  const Complex dc = spectrum[0];
  for (Complex& v : spectrum) v /= dc;
  spectrum[0] = Complex(1.0, 0.0);

  SpectralGrid s;
  s.size = m;
  s.otf = internal::FftShift(spectrum, m, m);
  s.mode = cfg.mtf_mode;
  s.mtf.resize(s.otf.size());
  for (std::size_t i = 0; i < s.otf.size(); ++i) {
    s.mtf[i] = cfg.mtf_mode == MtfMode::kRealPart ? s.otf[i].real() : std::abs(s.otf[i]);
  }
  s.freq_step = 1.0 / (m * psf.sample_spacing);
  s.cutoff = cfg.cutoff_frequency();
  return s;
}

Psf SimulatePsf(const ZernikeVector& alpha, const OpticalConfig& cfg) {
  cfg.Validate();
  return ComputePsf(MakePupilFunction(MakeWavefrontMap(alpha, cfg.grid_n), cfg), cfg);
}

SpectralGrid SimulateOtf(const ZernikeVector& alpha, const OpticalConfig& cfg) {
  return ComputeOtf(SimulatePsf(alpha, cfg), cfg);
}

double RadialMtfAt(const SpectralGrid& s, double radius_bins) {
  const double center = s.size / 2;
  if (radius_bins <= 0.0) return s.mtf_at(s.size / 2, s.size / 2);
  const int n_angles =
      std::max(16, static_cast<int>(std::ceil(4.0 * std::numbers::pi * radius_bins)));
  double sum = 0.0;
  for (int k = 0; k < n_angles; ++k) {
    const double theta = 2.0 * std::numbers::pi * (k + 0.5) / n_angles;
    sum += Bilinear(s, center + radius_bins * std::sin(theta),
                    center + radius_bins * std::cos(theta));
  }
  return sum / n_angles;
}

std::vector<double> RadialMtfProfile(const SpectralGrid& s) {
  const int last = std::min(static_cast<int>(std::floor(s.cutoff_bins() + 1e-9)),
                            s.size / 2 - 1);
  std::vector<double> profile(static_cast<std::size_t>(last) + 1);
  for (int k = 0; k <= last; ++k) profile[k] = RadialMtfAt(s, k);
  return profile;
}

bool MtfIsMonotone(const SpectralGrid& s, double tolerance) {
  const std::vector<double> profile = RadialMtfProfile(s);
  for (std::size_t k = 1; k < profile.size(); ++k) {
    if (profile[k] > profile[k - 1] + tolerance) return false;
  }
  return true;
}

double MtfAtHalfNyquist(const SpectralGrid& s, const OpticalConfig& cfg) {
  const double nu = cfg.half_nyquist_frequency();
  if (nu > s.cutoff) {
    throw OutOfBandError("half-Nyquist frequency " + std::to_string(nu) +
                         " exceeds cutoff " + std::to_string(s.cutoff));
  }
  return RadialMtfAt(s, nu / s.freq_step);
}

double StrehlRatio(const SpectralGrid& s, const SpectralGrid& diffraction_limited) {
  CheckSameGeometry(s, diffraction_limited);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.mtf.size(); ++i) {
    num += s.mtf[i];
    den += diffraction_limited.mtf[i];
  }
  return num / den;
}

double OpticalInformativeGain(const SpectralGrid& s,
                              const SpectralGrid& diffraction_limited) {
  CheckSameGeometry(s, diffraction_limited);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.mtf.size(); ++i) {
    num += s.mtf[i] * s.mtf[i];
    den += diffraction_limited.mtf[i] * diffraction_limited.mtf[i];
  }
  return num / den;
}

OpticalMetrics ComputeOpticalMetrics(const SpectralGrid& s,
                                     const SpectralGrid& diffraction_limited,
                                     const OpticalConfig& cfg) {
  OpticalMetrics m;
  m.mtf_half_nyquist = MtfAtHalfNyquist(s, cfg);
  m.strehl = StrehlRatio(s, diffraction_limited);
  m.oig = OpticalInformativeGain(s, diffraction_limited);
  return m;
}

OpticalMetrics ComputeOpticalMetrics(const ZernikeVector& alpha,
                                     const OpticalConfig& cfg) {
  const SpectralGrid aberrated = SimulateOtf(alpha, cfg);
  const SpectralGrid reference = SimulateOtf(ZernikeVector(), cfg);
  return ComputeOpticalMetrics(aberrated, reference, cfg);
}

Psf ResamplePsf(const Psf& psf, double pixel_pitch, int kernel_size) {
  if (kernel_size < 1 || !(pixel_pitch > 0.0)) {
    throw std::invalid_argument("kernel size and pixel pitch must be positive");
  }
  Psf out;
  out.size = kernel_size;
  out.sample_spacing = pixel_pitch;
  out.grid.assign(static_cast<std::size_t>(kernel_size) * kernel_size, 0.0);
  const double scale = psf.sample_spacing / pixel_pitch;
  const int c_in = psf.size / 2;
  const int c_out = kernel_size / 2;
  for (int r = 0; r < psf.size; ++r) {
    for (int c = 0; c < psf.size; ++c) {
      const double v = psf.at(r, c);
      if (v == 0.0) continue;
      const double y = c_out + (r - c_in) * scale;
      const double x = c_out + (c - c_in) * scale;
      const int r0 = static_cast<int>(std::floor(y));
      const int x0 = static_cast<int>(std::floor(x));
      const double fy = y - r0;
      const double fx = x - x0;
      const double weights[4] = {(1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx};
      const int rows[4] = {r0, r0, r0 + 1, r0 + 1};
      const int cols[4] = {x0, x0 + 1, x0, x0 + 1};
      for (int k = 0; k < 4; ++k) {
        if (rows[k] < 0 || cols[k] < 0 || rows[k] >= kernel_size || cols[k] >= kernel_size) {
          continue;
        }
        out.grid[static_cast<std::size_t>(rows[k]) * kernel_size + cols[k]] += weights[k] * v;
      }
    }
  }
  double total = 0.0;
  for (double v : out.grid) total += v;
  if (!(total > 0.0)) throw DegenerateInputError("resampled PSF has no energy");
  for (double& v : out.grid) v /= total;
  return out;
}

Image DegradeImage(const Image& image, const Psf& kernel) {
  if (kernel.size > image.rows || kernel.size > image.cols) {
    throw DegenerateInputError("PSF kernel (" + std::to_string(kernel.size) +
                               " px) is wider than the image");
  }
  const int k = kernel.size;
  const int center = k / 2;
  const int pad = k;
  const int pr = image.rows + 2 * pad;
  const int pc = image.cols + 2 * pad;
  // Linear convolution of the padded image with the kernel without circular
  // wrap needs pr + k - 1 samples per axis.
  const int fr = pr + k;
  const int fc = pc + k;
  std::vector<Complex> img(static_cast<std::size_t>(fr) * fc, Complex(0.0, 0.0));
  for (int r = 0; r < pr; ++r) {
    const int sr = Reflect(r - pad, image.rows);
    for (int c = 0; c < pc; ++c) {
      img[static_cast<std::size_t>(r) * fc + c] = image.at(sr, Reflect(c - pad, image.cols));
    }
  }
  std::vector<Complex> ker(static_cast<std::size_t>(fr) * fc, Complex(0.0, 0.0));
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) ker[static_cast<std::size_t>(r) * fc + c] = kernel.at(r, c);
  }
  internal::Fft2d(img, fr, fc, false);
  internal::Fft2d(ker, fr, fc, false);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] *= ker[i];
  internal::Fft2d(img, fr, fc, true);
  const double norm = 1.0 / (static_cast<double>(fr) * fc);

  Image out(image.rows, image.cols);
  for (int r = 0; r < image.rows; ++r) {
    for (int c = 0; c < image.cols; ++c) {
      const double v =
          img[static_cast<std::size_t>(r + pad + center) * fc + (c + pad + center)].real() * norm;
      out.at(r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace aberro
