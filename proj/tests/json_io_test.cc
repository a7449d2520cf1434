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

#include "aberro/json_io.h"

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "aberro/errors.h"
#include "aberro/synthetic.h"
#include "aberro/tensor_io.h"

namespace aberro {
namespace {

std::filesystem::path TempDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("aberro_json_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

TEST(HashTest, KnownSha256) {
  EXPECT_EQ(Sha256Hex(std::string_view("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(Sha256Hex(std::string_view("")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Base64Test, RoundTripAllPaddings) {
  for (std::size_t n = 0; n < 7; ++n) {
    std::vector<uint8_t> bytes(n);
    for (std::size_t i = 0; i < n; ++i) bytes[i] = static_cast<uint8_t>(37 * i + 250);
    EXPECT_EQ(Base64Decode(Base64Encode(bytes)), bytes) << n;
  }
  EXPECT_EQ(Base64Encode(std::vector<uint8_t>{'M', 'a'}), "TWE=");
  EXPECT_THROW(Base64Decode("abc"), FormatError);
}

TEST(ConfigJsonTest, TrainConfigRoundTrip) {
  TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.net.widths = {4, 8};
  cfg.loss.beta_s = 500.0;
  cfg.augment = false;
  const TrainConfig back = TrainConfigFromJson(ToJson(cfg));
  EXPECT_EQ(back.learning_rate, 3e-3);
  EXPECT_EQ(back.net.widths, cfg.net.widths);
  EXPECT_EQ(back.loss.beta_s, 500.0);
  EXPECT_FALSE(back.augment);
  EXPECT_EQ(ConfigHash(back), ConfigHash(cfg));
  cfg.batch_size = 5;
  EXPECT_NE(ConfigHash(back), ConfigHash(cfg));
}

TEST(ConfigJsonTest, DefaultsAndUnknownKeys) {
  const TrainConfig d = TrainConfigFromJson(Json{{"schema", 1}});
  EXPECT_EQ(d.batch_size, TrainConfig{}.batch_size);
  EXPECT_THROW(TrainConfigFromJson(Json{{"schema", 1}, {"lr", 0.1}}), FormatError);
  EXPECT_THROW(TrainConfigFromJson(Json{{"schema", 2}}), FormatError);
  EXPECT_THROW(RequireSchema(Json{{"a", 1}}, "x"), FormatError);
  EXPECT_THROW(OpticalConfigFromJson(Json{{"grid_n", 100}}), std::invalid_argument);
}

TEST(ConfigJsonTest, SyntheticAndOptics) {
  SyntheticConfig cfg;
  cfg.law = TemperatureLaw::kDefocus;
  cfg.optics.mtf_mode = MtfMode::kModulus;
  cfg.size = 32;
  const SyntheticConfig back = SyntheticConfigFromJson(ToJson(cfg));
  EXPECT_EQ(back.law, TemperatureLaw::kDefocus);
  EXPECT_EQ(back.optics.mtf_mode, MtfMode::kModulus);
  EXPECT_EQ(back.size, 32);
  EXPECT_EQ(DumpJson(ToJson(back)), DumpJson(ToJson(cfg)));
}

TEST(ZernikeJsonTest, RoundTrip) {
  const ZernikeVector v({{3, 0.1}, {4, -0.25}, {11, 0.5}});
  const ZernikeVector back = ZernikeFromJson(ToJson(v));
  ASSERT_EQ(back.terms().size(), 3u);
  EXPECT_EQ(back.alpha(11), 0.5);
  EXPECT_THROW(ZernikeFromJson(Json{{"osa", {1, 2}}, {"alpha_waves", {0.1}}}), FormatError);
}

TEST(ModelJsonTest, NetworkRoundTripIsFloat32Exact) {
  CalibratorModel m;
  m.variant = CalibratorVariant::kPipts;
  m.net = TemperatureNet({8, 3, {2, 4}, 5, true});
  m.net.InitRandom(3);
  for (double& p : m.net.params()) p = static_cast<float>(p);
  m.input_mean = 0.125;
  m.input_scale = 2.5;
  m.prior_mean = {0.01, -0.02, 0.03};
  m.prior_scale = {0.1, 0.2, 0.3};
  m.seed = 17;
  const TrainConfig cfg;
  const CalibratorModel back = ModelFromJson(ModelToJson(m, cfg));
  EXPECT_EQ(back.variant, m.variant);
  EXPECT_EQ(back.seed, 17u);
  EXPECT_EQ(back.config_hash, ConfigHash(cfg));
  EXPECT_EQ(back.prior_scale, m.prior_scale);
  EXPECT_TRUE(std::equal(back.net.params().begin(), back.net.params().end(),
                         m.net.params().begin()));
  Json broken = ModelToJson(m, cfg);
  broken["weights"]["data"] = Base64Encode(std::vector<uint8_t>(8));
  EXPECT_THROW(ModelFromJson(broken), FormatError);
}

TEST(ModelJsonTest, TemperatureScaling) {
  CalibratorModel m;
  m.temperature = 1.75;
  const CalibratorModel back = ModelFromJson(ModelToJson(m, TrainConfig{}));
  EXPECT_EQ(back.variant, CalibratorVariant::kTs);
  EXPECT_EQ(back.temperature, 1.75);
}

TEST(DatasetTest, WriteReadAndDetectTampering) {
  SyntheticConfig cfg;
  cfg.size = 32;
  cfg.optics.grid_n = 64;
  const auto data = SynthDataset(9, 3, cfg);
  const auto dir = TempDir("dataset");
  WriteDataset(dir.string(), data, cfg, 9);
  const Dataset back = ReadDataset(dir.string());
  ASSERT_EQ(back.instances.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.instances[i].logits.data, data[i].logits.data);
    EXPECT_EQ(back.instances[i].labels.data, data[i].labels.data);
    EXPECT_EQ(back.instances[i].true_optimal_t, data[i].true_optimal_t);
    EXPECT_EQ(back.instances[i].alpha.SecondOrderArray(), data[i].alpha.SecondOrderArray());
  }
  EXPECT_EQ(back.generator["seed"], 9);
  const auto victim = dir / "instance_0001.labels.tnsr";
  std::vector<uint8_t> bytes = ReadFileBytes(victim.string());
  bytes.back() ^= 1;
  WriteFileBytes(victim.string(), bytes);
  EXPECT_THROW(ReadDataset(dir.string()), FormatError);
  std::filesystem::remove_all(dir);
}

TEST(ReportJsonTest, StableText) {
  ReliabilityBins b(4);
  b.Add(0.8, true);
  b.Add(0.3, false);
  const std::string a = DumpJson(ToJson(b));
  EXPECT_EQ(a, DumpJson(ToJson(b)));
  EXPECT_EQ(ToJson(b)["bins"].size(), 4u);
  EXPECT_EQ(a.back(), '\n');
}

}  // namespace
}  // namespace aberro
