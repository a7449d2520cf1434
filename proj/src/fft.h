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

#ifndef ABERRO_SRC_FFT_H_
#define ABERRO_SRC_FFT_H_

#include <complex>
#include <vector>

namespace aberro {
namespace internal {

// Unnormalized 2-D DFT of a row-major rows x cols array, in place. The forward
// transform uses exp(-2 pi i k x / N).
void Fft2d(std::vector<std::complex<double>>& data, int rows, int cols,
           bool inverse);

// Swaps quadrants so index 0 moves to (rows / 2, cols / 2) and back
// (`inverse`). Both are identical for even sizes.
template <typename T>
std::vector<T> FftShift(const std::vector<T>& in, int rows, int cols,
                        bool inverse = false) {
  std::vector<T> out(in.size());
  const int sr = inverse ? rows - rows / 2 : rows / 2;
  const int sc = inverse ? cols - cols / 2 : cols / 2;
  for (int r = 0; r < rows; ++r) {
    const int rr = (r + sr) % rows;
    for (int c = 0; c < cols; ++c) {
      out[static_cast<std::size_t>(rr) * cols + (c + sc) % cols] =
          in[static_cast<std::size_t>(r) * cols + c];
    }
  }
  return out;
}

}  // namespace internal
}  // namespace aberro

#endif  // ABERRO_SRC_FFT_H_
