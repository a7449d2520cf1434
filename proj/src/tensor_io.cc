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

#include "aberro/tensor_io.h"

#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "aberro/errors.h"

namespace aberro {
namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', 'R'};
constexpr std::size_t kFixedHeader = 8;  // magic, version, dtype, rank

std::size_t DTypeSize(DType d) { return d == DType::kUint8 ? 1 : 4; }

void PutLe(std::vector<uint8_t>& out, uint64_t v, int bytes) {
  for (int k = 0; k < bytes; ++k) out.push_back(static_cast<uint8_t>(v >> (8 * k)));
}

uint64_t GetLe(std::span<const uint8_t> in, std::size_t pos, int bytes) {
  uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) v |= static_cast<uint64_t>(in[pos + k]) << (8 * k);
  return v;
}

template <typename T>
const std::vector<T>& Values(const Tensor& t, const char* what) {
  const auto* v = std::get_if<std::vector<T>>(&t.values);
  if (!v) throw FormatError(std::string(what) + " tensor has the wrong dtype", 0);
  return *v;
}

void CheckRank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.dims.size() != rank) {
    throw FormatError(std::string(what) + " tensor must have rank " + std::to_string(rank), 0);
  }
}

}  // namespace

DType Tensor::dtype() const {
  switch (values.index()) {
    case 0:
      return DType::kFloat32;
    case 1:
      return DType::kInt32;
    default:
      return DType::kUint8;
  }
}

uint64_t Tensor::element_count() const {
  uint64_t n = 1;
  for (uint64_t d : dims) n *= d;
  return n;
}

std::size_t Tensor::value_count() const {
  return std::visit([](const auto& v) { return v.size(); }, values);
}

Tensor Tensor::Float32(std::vector<uint64_t> dims, std::vector<float> v) {
  Tensor t{std::move(dims), std::move(v)};
  if (t.element_count() != t.value_count()) throw std::invalid_argument("dims do not match values");
  return t;
}

Tensor Tensor::Int32(std::vector<uint64_t> dims, std::vector<int32_t> v) {
  Tensor t{std::move(dims), std::move(v)};
  if (t.element_count() != t.value_count()) throw std::invalid_argument("dims do not match values");
  return t;
}

Tensor Tensor::Uint8(std::vector<uint64_t> dims, std::vector<uint8_t> v) {
  Tensor t{std::move(dims), std::move(v)};
  if (t.element_count() != t.value_count()) throw std::invalid_argument("dims do not match values");
  return t;
}

std::vector<uint8_t> EncodeTensor(const Tensor& t) {
  if (t.dims.size() > 255) throw std::invalid_argument("tensor rank exceeds 255");
  if (t.element_count() != t.value_count()) throw std::invalid_argument("dims do not match values");
  std::vector<uint8_t> out(kMagic, kMagic + 4);
  PutLe(out, kTensorVersion, 2);
  out.push_back(static_cast<uint8_t>(t.dtype()));
  out.push_back(static_cast<uint8_t>(t.dims.size()));
  for (uint64_t d : t.dims) PutLe(out, d, 8);
  std::visit(
      [&](const auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        for (const T& x : v) {
          uint32_t bits = 0;
          if constexpr (std::is_same_v<T, float>) {
            std::memcpy(&bits, &x, 4);
            PutLe(out, bits, 4);
          } else if constexpr (std::is_same_v<T, int32_t>) {
            PutLe(out, static_cast<uint32_t>(x), 4);
          } else {
            out.push_back(x);
          }
        }
      },
      t.values);
  return out;
}

Tensor DecodeTensor(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad TNSR magic", 0);
  }
  if (bytes.size() < kFixedHeader) throw FormatError("truncated TNSR header", bytes.size());
  const uint64_t version = GetLe(bytes, 4, 2);
  if (version != kTensorVersion) {
    throw FormatError("unsupported TNSR version " + std::to_string(version), 4);
  }
  const uint8_t code = bytes[6];
  if (code < 1 || code > 3) throw FormatError("unknown TNSR dtype " + std::to_string(code), 6);
  const DType dtype = static_cast<DType>(code);
  const std::size_t rank = bytes[7];
  std::size_t pos = kFixedHeader;
  if (bytes.size() < pos + 8 * rank) throw FormatError("truncated TNSR dims", bytes.size());
  Tensor t;
  uint64_t count = 1;
  for (std::size_t k = 0; k < rank; ++k) {
    const uint64_t d = GetLe(bytes, pos, 8);
    if (d != 0 && count > (UINT64_MAX / DTypeSize(dtype)) / d) {
      throw FormatError("TNSR dims overflow", pos);
    }
    t.dims.push_back(d);
    count *= d;
    pos += 8;
  }
  const uint64_t expected = count * DTypeSize(dtype);
  const uint64_t actual = bytes.size() - pos;
  if (actual != expected) {
    throw FormatError("TNSR payload length " + std::to_string(actual) + " bytes, expected " +
                          std::to_string(expected),
                      actual < expected ? bytes.size() : pos + expected);
  }
  switch (dtype) {
    case DType::kFloat32: {
      std::vector<float> v(count);
      for (uint64_t i = 0; i < count; ++i) {
        const uint32_t bits = static_cast<uint32_t>(GetLe(bytes, pos + 4 * i, 4));
        std::memcpy(&v[i], &bits, 4);
      }
      t.values = std::move(v);
      break;
    }
    case DType::kInt32: {
      std::vector<int32_t> v(count);
      for (uint64_t i = 0; i < count; ++i) {
        v[i] = static_cast<int32_t>(static_cast<uint32_t>(GetLe(bytes, pos + 4 * i, 4)));
      }
      t.values = std::move(v);
      break;
    }
    case DType::kUint8:
      t.values = std::vector<uint8_t>(bytes.begin() + pos, bytes.end());
      break;
  }
  return t;
}

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

Tensor ReadTensor(const std::string& path) { return DecodeTensor(ReadFileBytes(path)); }

void WriteTensor(const std::string& path, const Tensor& t) {
  WriteFileBytes(path, EncodeTensor(t));
}

Tensor LogitsToTensor(const LogitTensor& logits) {
  return Tensor::Float32({static_cast<uint64_t>(logits.h), static_cast<uint64_t>(logits.w),
                          static_cast<uint64_t>(logits.c)},
                         logits.data);
}

LogitTensor TensorToLogits(const Tensor& t) {
  CheckRank(t, 3, "logit");
  LogitTensor out;
  out.h = static_cast<int>(t.dims[0]);
  out.w = static_cast<int>(t.dims[1]);
  out.c = static_cast<int>(t.dims[2]);
  out.data = Values<float>(t, "logit");
  return out;
}

Tensor LabelsToTensor(const LabelMap& labels) {
  return Tensor::Int32({static_cast<uint64_t>(labels.h), static_cast<uint64_t>(labels.w)},
                       labels.data);
}

LabelMap TensorToLabels(const Tensor& t) {
  CheckRank(t, 2, "label");
  LabelMap out;
  out.h = static_cast<int>(t.dims[0]);
  out.w = static_cast<int>(t.dims[1]);
  if (const auto* u8 = std::get_if<std::vector<uint8_t>>(&t.values)) {
    out.data.assign(u8->begin(), u8->end());
  } else {
    out.data = Values<int32_t>(t, "label");
  }
  return out;
}

Tensor ImageToTensor(const Image& image) {
  std::vector<float> v(image.pixels.begin(), image.pixels.end());
  return Tensor::Float32({static_cast<uint64_t>(image.rows), static_cast<uint64_t>(image.cols)},
                         std::move(v));
}

Image TensorToImage(const Tensor& t) {
  CheckRank(t, 2, "image");
  Image out(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
  const std::vector<double> v = TensorToVector(t);
  out.pixels = v;
  return out;
}

std::vector<double> TensorToVector(const Tensor& t) {
  return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); },
                    t.values);
}

}  // namespace aberro
