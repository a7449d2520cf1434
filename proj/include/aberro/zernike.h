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

#ifndef ABERRO_ZERNIKE_H_
#define ABERRO_ZERNIKE_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace aberro {

// Radial order n and azimuthal frequency m of an OSA/ANSI single index.
struct ZernikeOrder {
  int n = 0;
  int m = 0;
};

ZernikeOrder OsaToOrder(int osa_index);

// Orthonormal Zernike polynomial (unit norm under the area-averaged inner
// product over the unit disk) in OSA/ANSI single indexing. Negative m uses
// sin(|m| phi), non-negative m uses cos(m phi).
double ZernikeEval(int osa_index, double rho, double phi);

// Sparse coefficient vector, coefficients in waves. Indices are kept strictly
// increasing.
class ZernikeVector {
 public:
  struct Term {
    int osa = 0;
    double alpha = 0.0;
  };

  ZernikeVector() = default;
  explicit ZernikeVector(std::vector<Term> terms);

  // Oblique astigmatism, defocus, orthogonal astigmatism (OSA 3, 4, 5).
  static ZernikeVector SecondOrder(double a3, double a4, double a5);

  const std::vector<Term>& terms() const { return terms_; }
  // Coefficient for `osa`, 0 when absent.
  double alpha(int osa) const;
  // (a3, a4, a5) regardless of which terms are stored.
  std::vector<double> SecondOrderArray() const;
  bool IsZero() const;

  ZernikeVector operator+(const ZernikeVector& other) const;

 private:
  std::vector<Term> terms_;
};

// Optical path difference over the inscribed unit pupil, in waves. Pixel
// (row i, col j) has center x = 2 (j + 0.5) / n - 1, y = 1 - 2 (i + 0.5) / n.
struct WavefrontMap {
  int n = 0;
  std::vector<double> grid;    // row-major n x n, 0 outside the pupil
  std::vector<uint8_t> mask;   // 1 inside rho <= 1

  double at(int row, int col) const { return grid[row * n + col]; }
  bool inside(int row, int col) const { return mask[row * n + col] != 0; }
};

// Polar coordinates of the center of pupil pixel (row, col) on an n-grid.
std::pair<double, double> PupilPolar(int n, int row, int col);

WavefrontMap MakeWavefrontMap(const ZernikeVector& alpha, int n);

// Area-averaged inner product <w, Z_osa> over the masked disk. On a fine grid
// this recovers the expansion coefficient of `osa`.
double ProjectOntoZernike(const WavefrontMap& w, int osa_index);

// alpha_3, alpha_4, alpha_5 drawn independently from U[-half_range,
// half_range]; deterministic per seed.
ZernikeVector SampleZernike(uint64_t seed, double half_range);

// Parses "a3,a4,a5" (the --zernike flag).
ZernikeVector ParseZernikeFlag(const std::string& text);

}  // namespace aberro

#endif  // ABERRO_ZERNIKE_H_
