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

#ifndef ABERRO_IMAGE_H_
#define ABERRO_IMAGE_H_

#include <cstddef>
#include <string>
#include <vector>

namespace aberro {

// Row-major grayscale image with intensities nominally in [0, 1].
struct Image {
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int r, int c, double fill = 0.0)
      : rows(r), cols(c), pixels(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return pixels[static_cast<std::size_t>(r) * cols + c];
  }
};

// Binary PGM (P5). Samples are scaled by maxval on read; on write values are
// clipped to [0, 1] and quantized to 8 bits (maxval 255) or 16 bits
// big-endian (maxval 65535).
Image ReadPgm(const std::string& path);
void WritePgm(const std::string& path, const Image& image, int bit_depth = 8);

}  // namespace aberro

#endif  // ABERRO_IMAGE_H_
