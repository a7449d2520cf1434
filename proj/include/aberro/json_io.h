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

#ifndef ABERRO_JSON_IO_H_
#define ABERRO_JSON_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aberro/analysis.h"
#include "aberro/calibration_metrics.h"
#include "aberro/calibrators.h"
#include "aberro/fourier_optics.h"
#include "aberro/synthetic.h"
#include "aberro/zernike.h"
#include "json.hpp"

namespace aberro {

// Insertion-ordered so reports serialize identically across runs.
using Json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

std::string Sha256Hex(std::span<const uint8_t> bytes);
std::string Sha256Hex(std::string_view text);
std::string Base64Encode(std::span<const uint8_t> bytes);
// Throws FormatError on characters outside the standard alphabet.
std::vector<uint8_t> Base64Decode(std::string_view text);

// Two-space indentation and a trailing newline.
std::string DumpJson(const Json& j);
// Throws FormatError on malformed JSON.
Json ReadJsonFile(const std::string& path);
void WriteJsonFile(const std::string& path, const Json& j);

// Throws FormatError unless j["schema"] == kSchemaVersion.
void RequireSchema(const Json& j, std::string_view what);

// Configs. Missing keys keep their defaults; unknown keys are rejected.
Json ToJson(const OpticalConfig& cfg);
OpticalConfig OpticalConfigFromJson(const Json& j);
Json ToJson(const SmoothLossConfig& cfg);
SmoothLossConfig SmoothLossConfigFromJson(const Json& j);
Json ToJson(const TrainConfig& cfg);
TrainConfig TrainConfigFromJson(const Json& j);
Json ToJson(const SyntheticConfig& cfg);
SyntheticConfig SyntheticConfigFromJson(const Json& j);

// {"osa": [...], "alpha_waves": [...]}
Json ToJson(const ZernikeVector& alpha);
ZernikeVector ZernikeFromJson(const Json& j);

Json ToJson(const ReliabilityBins& bins);
Json ToJson(const OpticalMetrics& m);
Json ToJson(const EnsembleReport& r);
Json ToJson(const EnsembleComparison& c);
Json ToJson(const GaussianFit& g);
Json ToJson(const TemperatureDeviation& d);
Json ToJson(const FitResult& fit);
Json ToJson(const std::vector<XiDecayPoint>& curve);

// SHA-256 of the canonical JSON of the config.
std::string ConfigHash(const TrainConfig& cfg);

// Weights as base64 little-endian float32.
Json ModelToJson(const CalibratorModel& model, const TrainConfig& cfg);
CalibratorModel ModelFromJson(const Json& j);

struct Dataset {
  std::vector<SyntheticInstance> instances;
  Json generator;  // config and seed recorded by WriteDataset
};

// Writes instance_NNNN.{image,labels,logits}.tnsr and manifest.json with the
// SHA-256 of every file. Creates `dir` when missing.
void WriteDataset(const std::string& dir, const std::vector<SyntheticInstance>& data,
                  const SyntheticConfig& cfg, uint64_t seed);
// Verifies every hash before parsing; throws FormatError on a mismatch.
Dataset ReadDataset(const std::string& dir);

}  // namespace aberro

#endif  // ABERRO_JSON_IO_H_
