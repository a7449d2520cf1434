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

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aberro/errors.h"
#include "aberro/tensor_io.h"

namespace aberro {
namespace {

void CheckKeys(const Json& j, std::string_view what, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw FormatError(std::string(what) + " must be a JSON object", 0);
  std::set<std::string> keys(allowed.begin(), allowed.end());
  keys.insert("schema");
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) {
      throw FormatError("unknown key '" + key + "' in " + std::string(what), 0);
    }
  }
  if (j.contains("schema") && j["schema"] != kSchemaVersion) {
    throw FormatError(std::string(what) + " has unsupported schema", 0);
  }
}

template <typename T>
void Take(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad value for '") + key + "': " + e.what(), 0);
  }
}

std::string MtfModeName(MtfMode m) { return m == MtfMode::kRealPart ? "real_part" : "modulus"; }

MtfMode ParseMtfMode(const std::string& s) {
  if (s == "real_part") return MtfMode::kRealPart;
  if (s == "modulus") return MtfMode::kModulus;
  throw FormatError("unknown mtf_mode '" + s + "'", 0);
}

std::string InstanceStem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "instance_%04zu", i);
  return buf;
}

Json MatrixToJson(const Matrix5& m) {
  Json rows = Json::array();
  for (int r = 0; r < kNumBeta; ++r) {
    Json row = Json::array();
    for (int c = 0; c < kNumBeta; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string Sha256Hex(std::span<const uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

std::string Sha256Hex(std::string_view text) {
  return Sha256Hex(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()),
                                            text.size()));
}

std::string Base64Encode(std::span<const uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(n);
  return out;
}

std::vector<uint8_t> Base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) throw FormatError("base64 length is not a multiple of 4", text.size());
  std::vector<uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw FormatError("invalid base64 data", 0);
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string DumpJson(const Json& j) { return j.dump(2) + "\n"; }

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what(), e.byte);
  }
}

void WriteJsonFile(const std::string& path, const Json& j) {
  const std::string text = DumpJson(j);
  WriteFileBytes(path, std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()),
                                                text.size()));
}

void RequireSchema(const Json& j, std::string_view what) {
  if (!j.is_object() || !j.contains("schema")) {
    throw FormatError(std::string(what) + " lacks a \"schema\" field", 0);
  }
  if (j["schema"] != kSchemaVersion) {
    throw FormatError(std::string(what) + " has unsupported schema " + j["schema"].dump(), 0);
  }
}

Json ToJson(const OpticalConfig& c) {
  return Json{{"grid_n", c.grid_n},           {"pad_factor", c.pad_factor},
              {"wavelength", c.wavelength},   {"f_number", c.f_number},
              {"pixel_pitch", c.pixel_pitch}, {"mtf_mode", MtfModeName(c.mtf_mode)}};
}

OpticalConfig OpticalConfigFromJson(const Json& j) {
  CheckKeys(j, "optics config",
            {"grid_n", "pad_factor", "wavelength", "f_number", "pixel_pitch", "mtf_mode"});
  OpticalConfig c;
  Take(j, "grid_n", c.grid_n);
  Take(j, "pad_factor", c.pad_factor);
  Take(j, "wavelength", c.wavelength);
  Take(j, "f_number", c.f_number);
  Take(j, "pixel_pitch", c.pixel_pitch);
  if (j.contains("mtf_mode")) c.mtf_mode = ParseMtfMode(j["mtf_mode"].get<std::string>());
  c.Validate();
  return c;
}

Json ToJson(const SmoothLossConfig& c) {
  return Json{{"beta_s", c.beta_s}, {"eta", c.eta}, {"kappa", c.kappa}, {"n_bins", c.n_bins}};
}

SmoothLossConfig SmoothLossConfigFromJson(const Json& j) {
  CheckKeys(j, "loss config", {"beta_s", "eta", "kappa", "n_bins"});
  SmoothLossConfig c;
  Take(j, "beta_s", c.beta_s);
  Take(j, "eta", c.eta);
  Take(j, "kappa", c.kappa);
  Take(j, "n_bins", c.n_bins);
  c.Validate();
  return c;
}

Json ToJson(const TrainConfig& c) {
  return Json{{"schema", kSchemaVersion},
              {"loss", ToJson(c.loss)},
              {"net",
               {{"input_res", c.net.input_res},
                {"widths", c.net.widths},
                {"hidden", c.net.hidden}}},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon},
              {"batch_size", c.batch_size},
              {"max_epochs", c.max_epochs},
              {"plateau_epochs", c.plateau_epochs},
              {"early_stop_epochs", c.early_stop_epochs},
              {"validation_fraction", c.validation_fraction},
              {"augment", c.augment}};
}

TrainConfig TrainConfigFromJson(const Json& j) {
  CheckKeys(j, "training config",
            {"loss", "net", "learning_rate", "beta1", "beta2", "epsilon", "batch_size",
             "max_epochs", "plateau_epochs", "early_stop_epochs", "validation_fraction",
             "augment"});
  TrainConfig c;
  if (j.contains("loss")) c.loss = SmoothLossConfigFromJson(j["loss"]);
  if (j.contains("net")) {
    CheckKeys(j["net"], "net config", {"input_res", "widths", "hidden"});
    Take(j["net"], "input_res", c.net.input_res);
    Take(j["net"], "widths", c.net.widths);
    Take(j["net"], "hidden", c.net.hidden);
  }
  Take(j, "learning_rate", c.learning_rate);
  Take(j, "beta1", c.beta1);
  Take(j, "beta2", c.beta2);
  Take(j, "epsilon", c.epsilon);
  Take(j, "batch_size", c.batch_size);
  Take(j, "max_epochs", c.max_epochs);
  Take(j, "plateau_epochs", c.plateau_epochs);
  Take(j, "early_stop_epochs", c.early_stop_epochs);
  Take(j, "validation_fraction", c.validation_fraction);
  Take(j, "augment", c.augment);
  if (!(c.learning_rate > 0.0) || c.batch_size < 1 || c.max_epochs < 1 ||
      c.plateau_epochs < 1 || c.early_stop_epochs < 1 || c.validation_fraction < 0.0 ||
      c.validation_fraction >= 1.0) {
    throw std::invalid_argument("training config out of range");
  }
  TemperatureNetConfig probe = c.net;
  probe.Validate();
  return c;
}

Json ToJson(const SyntheticConfig& c) {
  return Json{{"schema", kSchemaVersion},
              {"size", c.size},
              {"n_classes", c.n_classes},
              {"min_classes", c.min_classes},
              {"max_classes", c.max_classes},
              {"half_range", c.half_range},
              {"optics", ToJson(c.optics)},
              {"kernel_size", c.kernel_size},
              {"law", std::string(TemperatureLawName(c.law))},
              {"law_gain", c.law_gain},
              {"constant_temperature", c.constant_temperature},
              {"class_margin", c.class_margin},
              {"logit_noise", c.logit_noise},
              {"render_image", c.render_image}};
}

SyntheticConfig SyntheticConfigFromJson(const Json& j) {
  CheckKeys(j, "synthetic config",
            {"size", "n_classes", "min_classes", "max_classes", "half_range", "optics",
             "kernel_size", "law", "law_gain", "constant_temperature", "class_margin",
             "logit_noise", "render_image"});
  SyntheticConfig c;
  Take(j, "size", c.size);
  Take(j, "n_classes", c.n_classes);
  Take(j, "min_classes", c.min_classes);
  Take(j, "max_classes", c.max_classes);
  Take(j, "half_range", c.half_range);
  if (j.contains("optics")) c.optics = OpticalConfigFromJson(j["optics"]);
  Take(j, "kernel_size", c.kernel_size);
  if (j.contains("law")) c.law = ParseTemperatureLaw(j["law"].get<std::string>());
  Take(j, "law_gain", c.law_gain);
  Take(j, "constant_temperature", c.constant_temperature);
  Take(j, "class_margin", c.class_margin);
  Take(j, "logit_noise", c.logit_noise);
  Take(j, "render_image", c.render_image);
  c.Validate();
  return c;
}

Json ToJson(const ZernikeVector& alpha) {
  Json osa = Json::array(), values = Json::array();
  for (const auto& t : alpha.terms()) {
    osa.push_back(t.osa);
    values.push_back(t.alpha);
  }
  return Json{{"osa", osa}, {"alpha_waves", values}};
}

ZernikeVector ZernikeFromJson(const Json& j) {
  CheckKeys(j, "Zernike vector", {"osa", "alpha_waves"});
  if (!j.contains("osa") || !j.contains("alpha_waves") || j["osa"].size() != j["alpha_waves"].size()) {
    throw FormatError("Zernike vector needs equally long \"osa\" and \"alpha_waves\"", 0);
  }
  std::vector<ZernikeVector::Term> terms;
  for (std::size_t k = 0; k < j["osa"].size(); ++k) {
    terms.push_back({j["osa"][k].get<int>(), j["alpha_waves"][k].get<double>()});
  }
  return ZernikeVector(std::move(terms));
}

Json ToJson(const ReliabilityBins& b) {
  Json bins = Json::array();
  for (int m = 0; m < b.n_bins; ++m) {
    const ReliabilityBin& bin = b.bins[m];
    bins.push_back({{"index", m},
                    {"lower", static_cast<double>(m) / b.n_bins},
                    {"upper", static_cast<double>(m + 1) / b.n_bins},
                    {"count", bin.count},
                    {"mean_confidence", bin.mean_confidence()},
                    {"mean_accuracy", bin.mean_accuracy()},
                    {"gap", bin.gap()}});
  }
  return Json{{"n_bins", b.n_bins}, {"total_count", b.total_count}, {"bins", bins}};
}

Json ToJson(const OpticalMetrics& m) {
  return Json{{"mtf_half_nyquist", m.mtf_half_nyquist}, {"strehl", m.strehl}, {"oig", m.oig}};
}

Json ToJson(const EnsembleReport& r) {
  return Json{{"variant", std::string(VariantName(r.variant))},
              {"member_seeds", r.member_seeds},
              {"member_mece", r.member_mece},
              {"failed_seeds", r.failed_seeds},
              {"mean", r.mean},
              {"std_of_mean", r.std_of_mean},
              {"k_factor", r.k_factor},
              {"significant", r.significant}};
}

Json ToJson(const EnsembleComparison& c) {
  return Json{{"difference", c.difference},
              {"pooled_std_of_mean", c.pooled_std_of_mean},
              {"threshold", c.threshold},
              {"significant", c.significant}};
}

Json ToJson(const GaussianFit& g) {
  return Json{{"mu", g.mu},
              {"sigma", g.sigma},
              {"mu_uncertainty", g.mu_uncertainty},
              {"sigma_uncertainty", g.sigma_uncertainty}};
}

Json ToJson(const TemperatureDeviation& d) {
  return Json{{"predicted", d.predicted}, {"optimal", d.optimal}, {"deltas", d.deltas},
              {"fit", ToJson(d.fit)},     {"bin_edges", d.bin_edges}, {"counts", d.counts}};
}

Json ToJson(const FitResult& fit) {
  Json band = Json::array();
  for (const BandPoint& p : fit.band) {
    band.push_back({{"x", p.x}, {"center", p.center}, {"lower", p.lower}, {"upper", p.upper}});
  }
  return Json{{"beta", fit.beta},
              {"free", fit.free},
              {"covariance", MatrixToJson(fit.covariance)},
              {"residual_ss", fit.residual_ss},
              {"weighted_ss", fit.weighted_ss},
              {"unexplained_variance", fit.unexplained_variance},
              {"iterations", fit.iterations},
              {"converged_starts", fit.converged_starts},
              {"band", band}};
}

Json ToJson(const std::vector<XiDecayPoint>& curve) {
  Json out = Json::array();
  for (const XiDecayPoint& p : curve) {
    out.push_back({{"n_sub", p.n_sub},
                   {"relative_cardinality", p.relative_cardinality},
                   {"mean_xi", p.mean_xi},
                   {"std_of_mean", p.std_of_mean},
                   {"mean_pearson", p.mean_pearson}});
  }
  return out;
}

std::string ConfigHash(const TrainConfig& cfg) { return Sha256Hex(ToJson(cfg).dump()); }

Json ModelToJson(const CalibratorModel& model, const TrainConfig& cfg) {
  Json j{{"schema", kSchemaVersion},
         {"variant", std::string(VariantName(model.variant))},
         {"seed", model.seed},
         {"config_hash", model.config_hash.empty() ? ConfigHash(cfg) : model.config_hash}};
  if (model.variant == CalibratorVariant::kTs) {
    j["temperature"] = model.temperature;
    return j;
  }
  const TemperatureNetConfig& n = model.net.config();
  j["net"] = {{"input_res", n.input_res},
              {"in_channels", n.in_channels},
              {"widths", n.widths},
              {"hidden", n.hidden},
              {"use_prior", n.use_prior}};
  j["input_mean"] = model.input_mean;
  j["input_scale"] = model.input_scale;
  j["prior_mean"] = model.prior_mean;
  j["prior_scale"] = model.prior_scale;
  const auto params = model.net.params();
  std::vector<uint8_t> bytes;
  bytes.reserve(4 * params.size());
  for (double p : params) {
    const float f = static_cast<float>(p);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<uint8_t>(bits >> (8 * k)));
  }
  j["weights"] = {{"dtype", "float32"},
                  {"encoding", "base64-le"},
                  {"count", params.size()},
                  {"data", Base64Encode(bytes)}};
  return j;
}

CalibratorModel ModelFromJson(const Json& j) {
  RequireSchema(j, "model");
  CalibratorModel m;
  try {
    m.variant = ParseVariant(j.at("variant").get<std::string>());
    m.seed = j.at("seed").get<uint64_t>();
    m.config_hash = j.at("config_hash").get<std::string>();
    if (m.variant == CalibratorVariant::kTs) {
      m.temperature = j.at("temperature").get<double>();
      if (!(m.temperature > 0.0)) throw FormatError("model temperature must be positive", 0);
      return m;
    }
    const Json& n = j.at("net");
    TemperatureNetConfig cfg;
    cfg.input_res = n.at("input_res").get<int>();
    cfg.in_channels = n.at("in_channels").get<int>();
    cfg.widths = n.at("widths").get<std::vector<int>>();
    cfg.hidden = n.at("hidden").get<int>();
    cfg.use_prior = n.at("use_prior").get<bool>();
    if (cfg.use_prior != (m.variant == CalibratorVariant::kPipts)) {
      throw FormatError("prior slot does not match the variant", 0);
    }
    m.net = TemperatureNet(cfg);
    m.input_mean = j.at("input_mean").get<double>();
    m.input_scale = j.at("input_scale").get<double>();
    m.prior_mean = j.at("prior_mean").get<std::array<double, 3>>();
    m.prior_scale = j.at("prior_scale").get<std::array<double, 3>>();
    const Json& w = j.at("weights");
    if (w.at("dtype") != "float32") throw FormatError("weights must be float32", 0);
    const std::vector<uint8_t> bytes = Base64Decode(w.at("data").get<std::string>());
    const auto params = m.net.params();
    if (bytes.size() != 4 * params.size() || w.at("count").get<std::size_t>() != params.size()) {
      throw FormatError("weight count " + std::to_string(bytes.size() / 4) +
                            " does not match the network (" + std::to_string(params.size()) + ")",
                        0);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      uint32_t bits = 0;
      for (int k = 0; k < 4; ++k) bits |= static_cast<uint32_t>(bytes[4 * i + k]) << (8 * k);
      float f;
      std::memcpy(&f, &bits, 4);
      params[i] = f;
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model: ") + e.what(), 0);
  }
  return m;
}

void WriteDataset(const std::string& dir, const std::vector<SyntheticInstance>& data,
                  const SyntheticConfig& cfg, uint64_t seed) {
  std::filesystem::create_directories(dir);
  Json instances = Json::array();
  Json files = Json::object();
  auto put = [&](const std::string& name, const Tensor& t) {
    const std::vector<uint8_t> bytes = EncodeTensor(t);
    WriteFileBytes((std::filesystem::path(dir) / name).string(), bytes);
    files[name] = Sha256Hex(bytes);
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SyntheticInstance& inst = data[i];
    const std::string stem = InstanceStem(i);
    put(stem + ".image.tnsr", ImageToTensor(inst.image));
    put(stem + ".labels.tnsr", LabelsToTensor(inst.labels));
    put(stem + ".logits.tnsr", LogitsToTensor(inst.logits));
    instances.push_back({{"id", i},
                         {"image", stem + ".image.tnsr"},
                         {"labels", stem + ".labels.tnsr"},
                         {"logits", stem + ".logits.tnsr"},
                         {"alpha", ToJson(inst.alpha)},
                         {"true_optimal_t", inst.true_optimal_t},
                         {"strehl", inst.strehl},
                         {"oig", inst.oig},
                         {"mtf_half_nyquist", inst.mtf_half_nyquist}});
  }
  Json manifest{{"schema", kSchemaVersion},
                {"seed", seed},
                {"generator", ToJson(cfg)},
                {"instances", instances},
                {"files", files}};
  WriteJsonFile((std::filesystem::path(dir) / "manifest.json").string(), manifest);
}

Dataset ReadDataset(const std::string& dir) {
  const Json manifest = ReadJsonFile((std::filesystem::path(dir) / "manifest.json").string());
  RequireSchema(manifest, "manifest");
  Dataset out;
  try {
    out.generator = {{"seed", manifest.at("seed")}, {"config", manifest.at("generator")}};
    const Json& files = manifest.at("files");
    auto load = [&](const std::string& name) {
      if (!files.contains(name)) throw FormatError("manifest has no hash for " + name, 0);
      const std::vector<uint8_t> bytes = ReadFileBytes((std::filesystem::path(dir) / name).string());
      if (Sha256Hex(bytes) != files.at(name).get<std::string>()) {
        throw FormatError("hash mismatch for " + name, 0);
      }
      return DecodeTensor(bytes);
    };
    for (const Json& e : manifest.at("instances")) {
      SyntheticInstance inst;
      inst.image = TensorToImage(load(e.at("image").get<std::string>()));
      inst.labels = TensorToLabels(load(e.at("labels").get<std::string>()));
      inst.logits = TensorToLogits(load(e.at("logits").get<std::string>()));
      inst.alpha = ZernikeFromJson(e.at("alpha"));
      inst.true_optimal_t = e.at("true_optimal_t").get<double>();
      inst.strehl = e.at("strehl").get<double>();
      inst.oig = e.at("oig").get<double>();
      inst.mtf_half_nyquist = e.at("mtf_half_nyquist").get<double>();
      out.instances.push_back(std::move(inst));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what(), 0);
  }
  return out;
}

}  // namespace aberro
