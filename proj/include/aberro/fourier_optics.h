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

#ifndef ABERRO_FOURIER_OPTICS_H_
#define ABERRO_FOURIER_OPTICS_H_

#include <complex>
#include <cstddef>
#include <vector>

#include "aberro/image.h"
#include "aberro/zernike.h"

namespace aberro {

enum class MtfMode { kRealPart, kModulus };

struct OpticalConfig {
  int grid_n = 256;          // pupil samples across the diameter, power of 2
  int pad_factor = 2;        // padded field = pad_factor * grid_n
  double wavelength = 550e-9;
  double f_number = 2.0;
  double pixel_pitch = 3.0e-6;
  MtfMode mtf_mode = MtfMode::kRealPart;

  // Throws std::invalid_argument on a violated invariant.
  void Validate() const;
  int padded_size() const { return grid_n * pad_factor; }
  // Incoherent cutoff 1 / (lambda N) in cycles per meter.
  double cutoff_frequency() const { return 1.0 / (wavelength * f_number); }
  double half_nyquist_frequency() const { return 1.0 / (4.0 * pixel_pitch); }
};

// Complex pupil embedded, centered, in a padded_size^2 zero field.
struct PupilField {
  int size = 0;
  std::vector<std::complex<double>> field;
};

// Image-plane intensity, normalized to unit sum, on-axis sample at
// (size / 2, size / 2).
struct Psf {
  int size = 0;
  std::vector<double> grid;
  double sample_spacing = 0.0;  // meters per sample

  double at(int r, int c) const { return grid[static_cast<std::size_t>(r) * size + c]; }
  double center() const { return at(size / 2, size / 2); }
};

// OTF and MTF with the zero frequency at (size / 2, size / 2).
struct SpectralGrid {
  int size = 0;
  std::vector<std::complex<double>> otf;
  std::vector<double> mtf;
  double freq_step = 0.0;  // cycles per meter per bin
  double cutoff = 0.0;     // cycles per meter
  MtfMode mode = MtfMode::kRealPart;

  double mtf_at(int r, int c) const { return mtf[static_cast<std::size_t>(r) * size + c]; }
  double cutoff_bins() const { return cutoff / freq_step; }
};

struct OpticalMetrics {
  double mtf_half_nyquist = 0.0;
  double strehl = 0.0;
  double oig = 0.0;
};

// P = mask * exp(i 2 pi W), W in waves.
PupilField MakePupilFunction(const WavefrontMap& w, const OpticalConfig& cfg);

// |FT(P)|^2, centered and normalized. Throws DegenerateInputError for an
// all-zero pupil.
Psf ComputePsf(const PupilField& pupil, const OpticalConfig& cfg);

// FT(PSF) / FT(PSF)(0); the MTF is filled according to cfg.mtf_mode.
SpectralGrid ComputeOtf(const Psf& psf, const OpticalConfig& cfg);

// Convenience pipeline: Zernike vector -> wavefront -> pupil -> PSF (-> OTF).
Psf SimulatePsf(const ZernikeVector& alpha, const OpticalConfig& cfg);
SpectralGrid SimulateOtf(const ZernikeVector& alpha, const OpticalConfig& cfg);

// Azimuthal average of the bilinearly interpolated MTF at `radius_bins`
// frequency steps from the origin.
double RadialMtfAt(const SpectralGrid& s, double radius_bins);
// RadialMtfAt sampled at 0, 1, ..., floor(cutoff_bins).
std::vector<double> RadialMtfProfile(const SpectralGrid& s);
// True when the radial profile never rises by more than `tolerance`.
bool MtfIsMonotone(const SpectralGrid& s, double tolerance = 1e-3);

// Radially averaged MTF at 1 / (4 pixel_pitch). Throws OutOfBandError when
// that frequency exceeds the optical cutoff.
double MtfAtHalfNyquist(const SpectralGrid& s, const OpticalConfig& cfg);

// Full 2-D spectral sums relative to the diffraction-limited grid. Throw
// std::invalid_argument on mismatched geometry.
double StrehlRatio(const SpectralGrid& s, const SpectralGrid& diffraction_limited);
double OpticalInformativeGain(const SpectralGrid& s,
                              const SpectralGrid& diffraction_limited);

OpticalMetrics ComputeOpticalMetrics(const ZernikeVector& alpha,
                                     const OpticalConfig& cfg);
OpticalMetrics ComputeOpticalMetrics(const SpectralGrid& s,
                                     const SpectralGrid& diffraction_limited,
                                     const OpticalConfig& cfg);

// Bins a fine PSF onto a kernel_size^2 grid with sample spacing
// `pixel_pitch` (bilinear splatting), centered at kernel_size / 2 and
// renormalized to unit sum.
Psf ResamplePsf(const Psf& psf, double pixel_pitch, int kernel_size);

// Linear convolution with `kernel` (in image pixels) through a frequency-domain
// product, reflect padding at the borders, output clipped to [0, 1]. Throws
// DegenerateInputError when the kernel is larger than the image.
Image DegradeImage(const Image& image, const Psf& kernel);

}  // namespace aberro

#endif  // ABERRO_FOURIER_OPTICS_H_
