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

#include "aberro/smooth_loss.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "aberro/errors.h"

namespace aberro {
namespace {

constexpr double kMinBinWeight = 1e-12;

// Value plus derivative along the temperature.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator*(double s, Dual a) { return {s * a.v, s * a.d}; }
inline Dual operator/(Dual a, Dual b) {
  const double q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual tanh(Dual a) {
  const double th = std::tanh(a.v);
  return {th, (1.0 - th * th) * a.d};
}
inline double value(Dual a) { return a.v; }
inline double value(double a) { return a; }

using std::exp;
using std::tanh;

// Softmax of `x` in place; subtracts the peak first.
template <typename S>
void SoftmaxInPlace(std::vector<S>& x) {
  double peak = -INFINITY;
  for (const S& v : x) peak = std::max(peak, value(v));
  S total{};
  for (S& v : x) {
    v = exp(v - S{peak});
    total += v;
  }
  for (S& v : x) v = v / total;
}

template <typename S>
S SoftMeceImpl(const LogitTensor& logits, const LabelMap& labels, S t,
               const SmoothLossConfig& cfg) {
  const int c = logits.c;
  const int nb = cfg.n_bins;
  const double beta = cfg.beta_s;
  const double width = 1.0 / nb;
  std::vector<S> weight_sum(static_cast<std::size_t>(c) * nb, S{});
  std::vector<S> acc_sum(weight_sum.size(), S{});
  std::vector<S> conf_sum(weight_sum.size(), S{});
  std::vector<int64_t> class_count(c, 0);

  std::vector<S> p(c), q(c), w(nb);
  const S inv_t = S{1.0} / t;
  for (std::size_t i = 0; i < logits.pixels(); ++i) {
    if (labels.ignored(i)) continue;
    const int y = labels.data[i];
    const auto row = logits.pixel(i);
    for (int k = 0; k < c; ++k) p[k] = static_cast<double>(row[k]) * inv_t;
    SoftmaxInPlace(p);
    for (int k = 0; k < c; ++k) q[k] = beta * p[k];
    SoftmaxInPlace(q);
    S conf{};
    for (int k = 0; k < c; ++k) conf += p[k] * q[k];
    const S correct = q[y];
    for (int m = 0; m < nb; ++m) {
      const S dist = conf - S{(m + 0.5) * width};
      w[m] = (-beta / width) * (dist * dist);
    }
    SoftmaxInPlace(w);
    const std::size_t base = static_cast<std::size_t>(y) * nb;
    for (int m = 0; m < nb; ++m) {
      weight_sum[base + m] += w[m];
      acc_sum[base + m] += w[m] * correct;
      conf_sum[base + m] += w[m] * conf;
    }
    ++class_count[y];
  }

  S total{};
  int present = 0;
  for (int k = 0; k < c; ++k) {
    if (class_count[k] == 0) continue;
    S ece{};
    for (int m = 0; m < nb; ++m) {
      const std::size_t idx = static_cast<std::size_t>(k) * nb + m;
      // |diff| <= W, so nearly empty bins contribute nothing measurable.
      if (!(value(weight_sum[idx]) > kMinBinWeight)) continue;
      const S diff = acc_sum[idx] - conf_sum[idx];  // W_m * gap_m
      const S gap = diff / weight_sum[idx];
      ece += diff * tanh(beta * gap);
    }
    total += (1.0 / static_cast<double>(class_count[k])) * ece;
    ++present;
  }
  if (present == 0) throw UndefinedMetricError("soft mECE with no labeled pixels");
  return (1.0 / present) * total;
}

void CheckInputs(const LogitTensor& logits, const LabelMap& labels, double t,
                 const SmoothLossConfig& cfg) {
  cfg.Validate();
  if (!(t > 0.0)) {
    throw std::invalid_argument("temperature must be positive, got " + std::to_string(t));
  }
  if (logits.h != labels.h || logits.w != labels.w) {
    throw std::invalid_argument("logit and label shapes differ");
  }
  for (std::size_t i = 0; i < labels.pixels(); ++i) {
    if (!labels.ignored(i) && (labels.data[i] < 0 || labels.data[i] >= logits.c)) {
      throw std::invalid_argument("label outside the class range");
    }
  }
}

}  // namespace

void SmoothLossConfig::Validate() const {
  if (!(beta_s > 0.0) || !(eta > 0.0) || !(kappa > 0.0)) {
    throw std::invalid_argument("beta_s, eta and kappa must be positive");
  }
  if (n_bins < 1) throw std::invalid_argument("n_bins must be positive");
}

ValueAndSlope SoftMece(const LogitTensor& logits, const LabelMap& labels, double t,
                       const SmoothLossConfig& cfg) {
  CheckInputs(logits, labels, t, cfg);
  const Dual r = SoftMeceImpl(logits, labels, Dual{t, 1.0}, cfg);
  return {r.v, r.d};
}

double SoftMeceValue(const LogitTensor& logits, const LabelMap& labels, double t,
                     const SmoothLossConfig& cfg) {
  CheckInputs(logits, labels, t, cfg);
  return SoftMeceImpl(logits, labels, t, cfg);
}

double ModulationF(double x, double eta) { return x - std::tanh(eta * x) / eta; }

double ModulationFPrime(double x, double eta) {
  const double th = std::tanh(eta * x);
  return th * th;
}

double RegularizerG(double t, double kappa) { return -(std::tanh(kappa * t) - 1.0) / kappa; }

double RegularizerGPrime(double t, double kappa) {
  const double th = std::tanh(kappa * t);
  return th * th - 1.0;
}

double PiptsLoss(double ece, double t, const SmoothLossConfig& cfg) {
  return ModulationF(ece, cfg.eta) + RegularizerG(t, cfg.kappa);
}

double PiptsLossSlope(double d_ece_d_t, double ece, double t, const SmoothLossConfig& cfg) {
  return ModulationFPrime(ece, cfg.eta) * d_ece_d_t + RegularizerGPrime(t, cfg.kappa);
}

std::vector<double> PiptsLossGrad(double d_ece_d_t, double ece, double t,
                                  std::span<const double> d_t_d_theta,
                                  const SmoothLossConfig& cfg) {
  const double slope = PiptsLossSlope(d_ece_d_t, ece, t, cfg);
  std::vector<double> grad(d_t_d_theta.size());
  for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = slope * d_t_d_theta[k];
  return grad;
}

double FocalBalancedNll(std::span<const double> probs, int n_classes,
                        std::span<const int32_t> labels, std::span<const double> tau,
                        double gamma) {
  if (n_classes < 1 || probs.size() != labels.size() * n_classes) {
    throw std::invalid_argument("probability tensor does not match the labels");
  }
  if (tau.size() != static_cast<std::size_t>(n_classes)) {
    throw std::invalid_argument("need one class weight per class");
  }
  if (!(gamma >= 0.0)) throw std::invalid_argument("focal exponent must be >= 0");
  if (labels.empty()) throw UndefinedMetricError("focal loss of an empty population");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= n_classes) throw std::invalid_argument("label outside the class range");
    const double p = probs[i * n_classes + y];
    total += tau[y] * std::pow(1.0 - p, gamma) * -std::log(std::max(p, kLogClamp));
  }
  return total / static_cast<double>(labels.size());
}

double KernelOrthonormalityPenalty(std::span<const double> kernel,
                                   const std::array<int, 4>& dims) {
  const std::size_t rows = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  const std::size_t cols = static_cast<std::size_t>(dims[3]);
  if (kernel.size() != rows * cols) {
    throw std::invalid_argument("kernel size does not match its dimensions");
  }
  double sq = 0.0;
  for (std::size_t a = 0; a < cols; ++a) {
    for (std::size_t b = 0; b < cols; ++b) {
      double g = 0.0;
      for (std::size_t r = 0; r < rows; ++r) g += kernel[r * cols + a] * kernel[r * cols + b];
      const double residual = g - (a == b ? 1.0 : 0.0);
      sq += residual * residual;
    }
  }
  return std::sqrt(sq);
}

}  // namespace aberro
