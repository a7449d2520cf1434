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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "aberro/errors.h"
#include "aberro/image.h"

namespace aberro {
namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string NextToken(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    ++pos;
  }
  if (start == pos) throw FormatError("truncated PGM header", pos);
  return bytes.substr(start, pos - start);
}

int ParsePositive(const std::string& token, std::size_t pos) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), ::isdigit)) {
    throw FormatError("bad PGM header field '" + token + "'", pos);
  }
  const long v = std::stol(token);
  if (v <= 0 || v > 1 << 24) throw FormatError("PGM header value out of range", pos);
  return static_cast<int>(v);
}

}  // namespace

Image ReadPgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  if (NextToken(bytes, pos) != "P5") throw FormatError("not a binary PGM (P5)", 0);
  const int cols = ParsePositive(NextToken(bytes, pos), pos);
  const int rows = ParsePositive(NextToken(bytes, pos), pos);
  const int maxval = ParsePositive(NextToken(bytes, pos), pos);
  if (maxval > 65535) throw FormatError("PGM maxval above 65535", pos);
  ++pos;  // single whitespace byte before the raster
  const std::size_t sample = maxval < 256 ? 1 : 2;
  const std::size_t need = static_cast<std::size_t>(rows) * cols * sample;
  if (bytes.size() < pos + need) {
    throw FormatError("PGM raster truncated: expected " + std::to_string(need) +
                          " bytes, found " + std::to_string(bytes.size() - std::min(pos, bytes.size())),
                      bytes.size());
  }
  Image image(rows, cols);
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const unsigned v = sample == 1 ? raster[i] : (raster[2 * i] << 8) | raster[2 * i + 1];
    image.pixels[i] = static_cast<double>(v) / maxval;
  }
  return image;
}

void WritePgm(const std::string& path, const Image& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw std::invalid_argument("PGM bit depth must be 8 or 16");
  }
  const int maxval = bit_depth == 8 ? 255 : 65535;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << image.cols << " " << image.rows << "\n" << maxval << "\n";
  std::string raster;
  raster.reserve(image.pixels.size() * (bit_depth / 8));
  for (double p : image.pixels) {
    const double clipped = std::clamp(p, 0.0, 1.0);
    const unsigned v = static_cast<unsigned>(std::lround(clipped * maxval));
    if (bit_depth == 16) raster.push_back(static_cast<char>(v >> 8));
    raster.push_back(static_cast<char>(v & 0xff));
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
}

}  // namespace aberro
