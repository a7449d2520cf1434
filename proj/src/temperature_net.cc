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

#include "aberro/temperature_net.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace aberro {
namespace {

double Gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double GeluPrime(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

double Sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

// The floor keeps the result a positive normal double; exp underflows below
// about -745.
double Softplus(double z) {
  if (z > 30.0) return z;
  return std::log1p(std::exp(std::max(z, -700.0)));
}

void TemperatureNetConfig::Validate() const {
  if (input_res < 1 || in_channels < 1 || hidden < 1 || widths.empty()) {
    throw std::invalid_argument("temperature net dimensions must be positive");
  }
  int res = input_res;
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("conv width must be positive");
    if (res % 2 != 0) {
      throw std::invalid_argument("input resolution must halve cleanly per block");
    }
    res /= 2;
  }
}

TemperatureNet::TemperatureNet(const TemperatureNetConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  std::size_t offset = 0;
  int res = cfg_.input_res;
  int ch = cfg_.in_channels;
  for (int w : cfg_.widths) {
    ConvLayer layer{res, res / 2, ch, w, offset, 0};
    offset += static_cast<std::size_t>(9) * ch * w;
    layer.b_offset = offset;
    offset += w;
    convs_.push_back(layer);
    res /= 2;
    ch = w;
  }
  feature_width_ = ch + (cfg_.use_prior ? kPriorWidth : 0);
  d1_w_ = offset;
  offset += feature_width_ * cfg_.hidden;
  d1_b_ = offset;
  offset += cfg_.hidden;
  d2_w_ = offset;
  offset += cfg_.hidden;
  d2_b_ = offset;
  offset += 1;
  params_.assign(offset, 0.0);
}

void TemperatureNet::InitRandom(uint64_t seed) {
  std::mt19937_64 trunk(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::fill(params_.begin(), params_.end(), 0.0);
  for (const ConvLayer& l : convs_) {
    const double scale = std::sqrt(2.0 / (9.0 * l.in_ch));
    for (std::size_t i = 0; i < static_cast<std::size_t>(9) * l.in_ch * l.out_ch; ++i) {
      params_[l.w_offset + i] = scale * normal(trunk);
    }
  }
  const std::size_t pooled = feature_width_ - (cfg_.use_prior ? kPriorWidth : 0);
  const double d1_scale = std::sqrt(2.0 / static_cast<double>(pooled));
  for (std::size_t r = 0; r < pooled; ++r) {
    for (int h = 0; h < cfg_.hidden; ++h) {
      params_[d1_w_ + r * cfg_.hidden + h] = d1_scale * normal(trunk);
    }
  }
  const double d2_scale = std::sqrt(1.0 / cfg_.hidden);
  for (int h = 0; h < cfg_.hidden; ++h) params_[d2_w_ + h] = d2_scale * normal(trunk);
  params_[d2_b_] = std::log(std::numbers::e - 1.0);
  // Prior rows stay zero.
}

std::span<double> TemperatureNet::prior_weights() {
  if (!cfg_.use_prior) return {};
  const std::size_t pooled = feature_width_ - kPriorWidth;
  return std::span<double>(params_).subspan(d1_w_ + pooled * cfg_.hidden,
                                            static_cast<std::size_t>(kPriorWidth) * cfg_.hidden);
}

double TemperatureNet::Forward(std::span<const double> input, std::span<const double> prior,
                               Cache* cache) const {
  if (input.size() != input_size()) {
    throw std::invalid_argument("temperature net input has the wrong resolution");
  }
  if (cfg_.use_prior && prior.size() != static_cast<std::size_t>(kPriorWidth)) {
    throw std::invalid_argument("PIPTS forward needs a 3-element Zernike prior");
  }
  Cache local;
  Cache& c = cache ? *cache : local;
  c.activations.assign(1, std::vector<double>(input.begin(), input.end()));
  c.pre.clear();

  for (const ConvLayer& l : convs_) {
    const std::vector<double>& in = c.activations.back();
    std::vector<double> pre(static_cast<std::size_t>(l.out_res) * l.out_res * l.out_ch);
    const double* w = params_.data() + l.w_offset;
    const double* b = params_.data() + l.b_offset;
    for (int oy = 0; oy < l.out_res; ++oy) {
      for (int ox = 0; ox < l.out_res; ++ox) {
        double* out = pre.data() + (static_cast<std::size_t>(oy) * l.out_res + ox) * l.out_ch;
        for (int co = 0; co < l.out_ch; ++co) out[co] = b[co];
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy + ky - 1;
          if (iy < 0 || iy >= l.in_res) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox + kx - 1;
            if (ix < 0 || ix >= l.in_res) continue;
            const double* px = in.data() + (static_cast<std::size_t>(iy) * l.in_res + ix) * l.in_ch;
            const double* wk = w + static_cast<std::size_t>(ky * 3 + kx) * l.in_ch * l.out_ch;
            for (int ci = 0; ci < l.in_ch; ++ci) {
              const double v = px[ci];
              const double* wrow = wk + static_cast<std::size_t>(ci) * l.out_ch;
              for (int co = 0; co < l.out_ch; ++co) out[co] += v * wrow[co];
            }
          }
        }
      }
    }
    std::vector<double> act(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) act[i] = Gelu(pre[i]);
    c.pre.push_back(std::move(pre));
    c.activations.push_back(std::move(act));
  }

  const ConvLayer& last = convs_.back();
  const std::vector<double>& top = c.activations.back();
  const std::size_t spatial = static_cast<std::size_t>(last.out_res) * last.out_res;
  c.features.assign(feature_width_, 0.0);
  for (std::size_t s = 0; s < spatial; ++s) {
    for (int ch = 0; ch < last.out_ch; ++ch) c.features[ch] += top[s * last.out_ch + ch];
  }
  for (int ch = 0; ch < last.out_ch; ++ch) c.features[ch] /= static_cast<double>(spatial);
  if (cfg_.use_prior) {
    for (int k = 0; k < kPriorWidth; ++k) c.features[last.out_ch + k] = prior[k];
  }

  c.hidden_pre.assign(cfg_.hidden, 0.0);
  for (int h = 0; h < cfg_.hidden; ++h) c.hidden_pre[h] = params_[d1_b_ + h];
  for (std::size_t r = 0; r < feature_width_; ++r) {
    const double f = c.features[r];
    const double* wrow = params_.data() + d1_w_ + r * cfg_.hidden;
    for (int h = 0; h < cfg_.hidden; ++h) c.hidden_pre[h] += f * wrow[h];
  }
  c.hidden.resize(cfg_.hidden);
  c.z = params_[d2_b_];
  for (int h = 0; h < cfg_.hidden; ++h) {
    c.hidden[h] = Gelu(c.hidden_pre[h]);
    c.z += c.hidden[h] * params_[d2_w_ + h];
  }
  return Softplus(c.z);
}

void TemperatureNet::Backward(const Cache& c, double upstream, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient size mismatch");
  const double dz = upstream * Sigmoid(c.z);
  grad[d2_b_] += dz;
  std::vector<double> dhidden_pre(cfg_.hidden);
  for (int h = 0; h < cfg_.hidden; ++h) {
    grad[d2_w_ + h] += dz * c.hidden[h];
    dhidden_pre[h] = dz * params_[d2_w_ + h] * GeluPrime(c.hidden_pre[h]);
    grad[d1_b_ + h] += dhidden_pre[h];
  }
  std::vector<double> dfeatures(feature_width_, 0.0);
  for (std::size_t r = 0; r < feature_width_; ++r) {
    const double* wrow = params_.data() + d1_w_ + r * cfg_.hidden;
    double* grow = grad.data() + d1_w_ + r * cfg_.hidden;
    double acc = 0.0;
    for (int h = 0; h < cfg_.hidden; ++h) {
      grow[h] += c.features[r] * dhidden_pre[h];
      acc += wrow[h] * dhidden_pre[h];
    }
    dfeatures[r] = acc;
  }

  const ConvLayer& last = convs_.back();
  const std::size_t spatial = static_cast<std::size_t>(last.out_res) * last.out_res;
  std::vector<double> dact(spatial * last.out_ch);
  for (std::size_t s = 0; s < spatial; ++s) {
    for (int ch = 0; ch < last.out_ch; ++ch) {
      dact[s * last.out_ch + ch] = dfeatures[ch] / static_cast<double>(spatial);
    }
  }

  for (int li = static_cast<int>(convs_.size()) - 1; li >= 0; --li) {
    const ConvLayer& l = convs_[li];
    const std::vector<double>& pre = c.pre[li];
    const std::vector<double>& in = c.activations[li];
    std::vector<double> dpre(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) dpre[i] = dact[i] * GeluPrime(pre[i]);
    const double* w = params_.data() + l.w_offset;
    double* gw = grad.data() + l.w_offset;
    double* gb = grad.data() + l.b_offset;
    std::vector<double> din(li > 0 ? in.size() : 0, 0.0);
    for (int oy = 0; oy < l.out_res; ++oy) {
      for (int ox = 0; ox < l.out_res; ++ox) {
        const double* dout = dpre.data() + (static_cast<std::size_t>(oy) * l.out_res + ox) * l.out_ch;
        for (int co = 0; co < l.out_ch; ++co) gb[co] += dout[co];
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy + ky - 1;
          if (iy < 0 || iy >= l.in_res) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox + kx - 1;
            if (ix < 0 || ix >= l.in_res) continue;
            const std::size_t in_base = (static_cast<std::size_t>(iy) * l.in_res + ix) * l.in_ch;
            const std::size_t k_base = static_cast<std::size_t>(ky * 3 + kx) * l.in_ch * l.out_ch;
            for (int ci = 0; ci < l.in_ch; ++ci) {
              const double v = in[in_base + ci];
              const double* wrow = w + k_base + static_cast<std::size_t>(ci) * l.out_ch;
              double* gwrow = gw + k_base + static_cast<std::size_t>(ci) * l.out_ch;
              double acc = 0.0;
              for (int co = 0; co < l.out_ch; ++co) {
                gwrow[co] += v * dout[co];
                acc += wrow[co] * dout[co];
              }
              if (li > 0) din[in_base + ci] += acc;
            }
          }
        }
      }
    }
    dact = std::move(din);
  }
}

std::vector<double> DownsampleLogits(const LogitTensor& logits, int res) {
  if (res < 1 || logits.h % res != 0 || logits.w % res != 0) {
    throw std::invalid_argument("logit resolution is not a multiple of the net input");
  }
  const int fy = logits.h / res;
  const int fx = logits.w / res;
  std::vector<double> out(static_cast<std::size_t>(res) * res * logits.c, 0.0);
  for (int y = 0; y < logits.h; ++y) {
    for (int x = 0; x < logits.w; ++x) {
      const auto px = logits.pixel(static_cast<std::size_t>(y) * logits.w + x);
      double* dst = out.data() + (static_cast<std::size_t>(y / fy) * res + x / fx) * logits.c;
      for (int k = 0; k < logits.c; ++k) dst[k] += px[k];
    }
  }
  const double norm = 1.0 / (fy * fx);
  for (double& v : out) v *= norm;
  return out;
}

}  // namespace aberro
