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

#ifndef ABERRO_TENSOR_IO_H_
#define ABERRO_TENSOR_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "aberro/calibration_metrics.h"
#include "aberro/image.h"

namespace aberro {

// TNSR container:
//   "TNSR" | u16 version = 1 | u8 dtype | u8 rank | rank x u64 dims | payload
// All integers little-endian, payload row-major.
enum class DType : uint8_t { kFloat32 = 1, kInt32 = 2, kUint8 = 3 };

constexpr uint16_t kTensorVersion = 1;

struct Tensor {
  std::vector<uint64_t> dims;  // empty: scalar
  std::variant<std::vector<float>, std::vector<int32_t>, std::vector<uint8_t>> values;

  DType dtype() const;
  uint64_t element_count() const;  // product of dims, 1 for rank 0
  std::size_t value_count() const;

  static Tensor Float32(std::vector<uint64_t> dims, std::vector<float> v);
  static Tensor Int32(std::vector<uint64_t> dims, std::vector<int32_t> v);
  static Tensor Uint8(std::vector<uint64_t> dims, std::vector<uint8_t> v);
};

std::vector<uint8_t> EncodeTensor(const Tensor& t);
// Throws FormatError with the byte offset of the first bad field.
Tensor DecodeTensor(std::span<const uint8_t> bytes);

Tensor ReadTensor(const std::string& path);
void WriteTensor(const std::string& path, const Tensor& t);

// Conversions. Logits are [H, W, C] float32, labels [H, W] int32, images
// [H, W] float32, series [N] float32. Wrong rank or dtype throws FormatError
// at offset 0.
Tensor LogitsToTensor(const LogitTensor& logits);
LogitTensor TensorToLogits(const Tensor& t);
Tensor LabelsToTensor(const LabelMap& labels);
LabelMap TensorToLabels(const Tensor& t);
Tensor ImageToTensor(const Image& image);
Image TensorToImage(const Tensor& t);
// Any dtype, flattened.
std::vector<double> TensorToVector(const Tensor& t);

std::vector<uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace aberro

#endif  // ABERRO_TENSOR_IO_H_
