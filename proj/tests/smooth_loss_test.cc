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
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "aberro/calibration_metrics.h"
#include "aberro/temperature_net.h"

namespace aberro {
namespace {

// Pixels whose confidences sit at bin centers with a clear top class.
void BinCenteredFixture(uint64_t seed, LogitTensor& logits, LabelMap& labels) {
  std::mt19937_64 rng(seed);
  const int c = 3, side = 12;
  logits = LogitTensor(side, side, c);
  labels = LabelMap(side, side);
  std::uniform_int_distribution<int> bin(4, 9);
  std::uniform_int_distribution<int> cls(0, c - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < logits.pixels(); ++i) {
    const double q = (bin(rng) + 0.5) / 10.0;
    const int top = cls(rng);
    auto px = logits.pixel(i);
    for (int k = 0; k < c; ++k) {
      px[k] = static_cast<float>(std::log(k == top ? q : (1.0 - q) / (c - 1)));
    }
    if (u(rng) < q) {
      labels.data[i] = top;
    } else {
      labels.data[i] = (top + 1 + static_cast<int>(u(rng) * (c - 1))) % c;
    }
  }
}

TEST(SoftMeceTest, MatchesHardEceOnSeparatedConfidences) {
  const SmoothLossConfig cfg;
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    LogitTensor logits;
    LabelMap labels;
    BinCenteredFixture(seed, logits, labels);
    const double soft = SoftMeceValue(logits, labels, 1.0, cfg);
    worst = std::max(worst, std::abs(soft - Mece(logits, labels, 1.0)));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(SoftMeceTest, CalibratedPopulationNearZero) {
  // Per ground-truth class: three correct and one wrong pixel at confidence 0.75.
  LogitTensor logits(1, 8, 2);
  LabelMap labels(1, 8);
  const float hi = static_cast<float>(std::log(0.75)), lo = static_cast<float>(std::log(0.25));
  const int gt[8] = {0, 0, 0, 0, 1, 1, 1, 1};
  const int pred[8] = {0, 0, 0, 1, 1, 1, 1, 0};
  for (int i = 0; i < 8; ++i) {
    labels.data[i] = gt[i];
    logits.pixel(i)[0] = pred[i] == 0 ? hi : lo;
    logits.pixel(i)[1] = pred[i] == 1 ? hi : lo;
  }
  EXPECT_NEAR(Mece(logits, labels, 1.0), 0.0, 1e-6);  // float logits
  EXPECT_LT(SoftMeceValue(logits, labels, 1.0, SmoothLossConfig{}), 1e-2);
}

TEST(SoftMeceTest, ContinuousInTemperature) {
  LogitTensor logits(1, 1, 3);
  logits.data = {1.2f, 0.3f, -0.4f};
  LabelMap labels(1, 1);
  const SmoothLossConfig cfg;
  double prev = SoftMeceValue(logits, labels, 0.2, cfg);
  double worst = 0.0;
  for (double t = 0.201; t < 3.0; t += 1e-3) {
    const double v = SoftMeceValue(logits, labels, t, cfg);
    worst = std::max(worst, std::abs(v - prev));
    prev = v;
  }
  // Lipschitz bound of the surrogate times the step.
  EXPECT_LT(worst, 1e-2);
}

TEST(SoftMeceTest, SlopeMatchesFiniteDifference) {
  LogitTensor logits;
  LabelMap labels;
  BinCenteredFixture(7, logits, labels);
  const SmoothLossConfig cfg;
  for (double t : {0.7, 1.0, 1.6}) {
    const double h = 1e-6;
    const double fd = (SoftMeceValue(logits, labels, t + h, cfg) -
                       SoftMeceValue(logits, labels, t - h, cfg)) / (2 * h);
    const ValueAndSlope vs = SoftMece(logits, labels, t, cfg);
    EXPECT_NEAR(vs.slope, fd, 1e-4 * std::max(1.0, std::abs(fd)));
    EXPECT_DOUBLE_EQ(vs.value, SoftMeceValue(logits, labels, t, cfg));
  }
}

TEST(SoftMeceTest, RejectsBadInput) {
  LogitTensor logits(1, 1, 2);
  LabelMap labels(1, 1);
  EXPECT_THROW(SoftMeceValue(logits, labels, 0.0, SmoothLossConfig{}), std::invalid_argument);
  labels.data[0] = 5;
  EXPECT_THROW(SoftMeceValue(logits, labels, 1.0, SmoothLossConfig{}), std::invalid_argument);
  SmoothLossConfig bad;
  bad.beta_s = 0.0;
  labels.data[0] = 0;
  EXPECT_THROW(SoftMeceValue(logits, labels, 1.0, bad), std::invalid_argument);
}

TEST(ModulationTest, Values) {
  EXPECT_DOUBLE_EQ(ModulationF(0.0, 50.0), 0.0);
  EXPECT_DOUBLE_EQ(ModulationFPrime(0.0, 50.0), 0.0);
  EXPECT_NEAR(ModulationF(0.1, 50.0), 0.1 - 0.02 * std::tanh(5.0), 1e-15);
  EXPECT_NEAR(ModulationF(0.1, 50.0), 0.08002, 1e-4);
}

TEST(RegularizerTest, Values) {
  EXPECT_DOUBLE_EQ(RegularizerG(0.0, 8.0), 0.125);
  EXPECT_LT(RegularizerG(10.0, 8.0), 1e-60);
  EXPECT_DOUBLE_EQ(RegularizerGPrime(0.0, 8.0), -1.0);
}

TEST(PiptsLossTest, Values) {
  const SmoothLossConfig cfg;
  EXPECT_DOUBLE_EQ(PiptsLoss(0.0, 0.0, cfg), 0.125);
  const double g1 = 0.125 * (1.0 - std::tanh(8.0));
  EXPECT_NEAR(PiptsLoss(0.0, 1.0, cfg), g1, 1e-20);
  EXPECT_NEAR(PiptsLoss(0.0, 1.0, cfg), 2.8e-8, 0.05e-8);
  EXPECT_NEAR(PiptsLoss(0.1, 1.0, cfg), 0.1 - 0.02 * std::tanh(5.0) + g1, 1e-15);
}

TEST(PiptsLossTest, GradientLimits) {
  const SmoothLossConfig cfg;
  const std::vector<double> dt = {0.5, -2.0, 3.0};
  const std::vector<double> g0 = PiptsLossGrad(0.7, 0.0, 0.0, dt, cfg);
  for (std::size_t k = 0; k < dt.size(); ++k) EXPECT_DOUBLE_EQ(g0[k], -dt[k]);
  const double ece = 0.05;
  const std::vector<double> g = PiptsLossGrad(0.7, ece, 10.0, dt, cfg);
  const double f1 = std::pow(std::tanh(50.0 * ece), 2) * 0.7;
  for (std::size_t k = 0; k < dt.size(); ++k) EXPECT_NEAR(g[k], f1 * dt[k], 1e-12);
}

TEST(PiptsLossTest, SlopeMatchesFiniteDifference) {
  const SmoothLossConfig cfg;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double ece = 0.2 * u(rng), slope = u(rng) - 0.5, t = 0.05 + 2 * u(rng);
    // Linearized ECE(T) around t.
    auto loss = [&](double tt) { return PiptsLoss(ece + slope * (tt - t), tt, cfg); };
    const double h = 1e-6;
    const double fd = (loss(t + h) - loss(t - h)) / (2 * h);
    EXPECT_NEAR(PiptsLossSlope(slope, ece, t, cfg), fd, 1e-6);
  }
}

// End-to-end gradient of the training loss through a small network.
TEST(PiptsLossTest, NetworkGradientMatchesFiniteDifference) {
  const SmoothLossConfig cfg;
  LogitTensor logits;
  LabelMap labels;
  BinCenteredFixture(11, logits, labels);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    TemperatureNetConfig nc;
    nc.input_res = 4;
    nc.in_channels = 3;
    nc.widths = {3, 4};
    nc.hidden = 5;
    nc.use_prior = rep % 2 == 1;
    TemperatureNet net(nc);
    net.InitRandom(static_cast<uint64_t>(rep));
    for (double& p : net.params()) p += 0.1 * n(rng);
    std::vector<double> x(net.input_size());
    for (double& v : x) v = n(rng);
    std::vector<double> prior;
    if (nc.use_prior) prior = {n(rng), n(rng), n(rng)};

    auto loss = [&]() {
      const double t = net.Forward(x, prior);
      return PiptsLoss(SoftMeceValue(logits, labels, t, cfg), t, cfg);
    };
    TemperatureNet::Cache cache;
    const double t = net.Forward(x, prior, &cache);
    const ValueAndSlope s = SoftMece(logits, labels, t, cfg);
    std::vector<double> grad(net.num_params(), 0.0);
    net.Backward(cache, PiptsLossSlope(s.slope, s.value, t, cfg), grad);

    double diff2 = 0.0, norm2 = 0.0;
    auto params = net.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double saved = params[k];
      const double h = 1e-6 * std::max(1.0, std::abs(saved));
      params[k] = saved + h;
      const double up = loss();
      params[k] = saved - h;
      const double down = loss();
      params[k] = saved;
      const double fd = (up - down) / (2 * h);
      diff2 += (fd - grad[k]) * (fd - grad[k]);
      norm2 += fd * fd;
    }
    if (norm2 > 1e-20) worst = std::max(worst, std::sqrt(diff2 / norm2));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(PiptsLossTest, ModulationRemovesKinkAtZeroEce) {
  // ECE(t) = a |t - t0| has a slope jump of 2a at t0; the modulated loss must not.
  const SmoothLossConfig cfg;
  const double a = 0.05, t0 = 1.3;
  auto slope = [&](double t) {
    const double e = a * std::abs(t - t0);
    const double de = t >= t0 ? a : -a;
    return PiptsLossSlope(de, e, t, cfg);
  };
  double worst = 0.0;
  for (double t = t0 - 0.0495; t < t0 + 0.05; t += 1e-3) {
    worst = std::max(worst, std::abs(slope(t + 1e-3) - slope(t)) -
                                std::abs(RegularizerGPrime(t + 1e-3, cfg.kappa) -
                                         RegularizerGPrime(t, cfg.kappa)));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(FocalTest, HandValues) {
  const std::vector<double> perfect = {1.0, 0.0, 0.0, 1.0};
  const std::vector<int32_t> y = {0, 1};
  const std::vector<double> tau = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(FocalBalancedNll(perfect, 2, y, tau, 2.0), 0.0);
  const std::vector<double> half = {0.5, 0.5};
  const std::vector<int32_t> y0 = {0};
  EXPECT_NEAR(FocalBalancedNll(half, 2, y0, tau, 0.0), 0.5 * std::log(2.0), 1e-15);
  const std::vector<double> easy = {0.9, 0.1};
  const double ratio0 =
      FocalBalancedNll(easy, 2, y0, tau, 0.0) / FocalBalancedNll(half, 2, y0, tau, 0.0);
  const double ratio2 =
      FocalBalancedNll(easy, 2, y0, tau, 2.0) / FocalBalancedNll(half, 2, y0, tau, 2.0);
  EXPECT_LT(ratio2, ratio0);
}

TEST(KorTest, ClosedForms) {
  // 1x1 spatial kernel, 3 inputs, 3 outputs.
  std::vector<double> eye(9, 0.0), twice(9, 0.0);
  for (int i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0, twice[i * 3 + i] = 2.0;
  EXPECT_NEAR(KernelOrthonormalityPenalty(eye, {1, 1, 3, 3}), 0.0, 1e-15);
  EXPECT_NEAR(KernelOrthonormalityPenalty(twice, {1, 1, 3, 3}), 3.0 * std::sqrt(3.0), 1e-12);
  std::mt19937 rng(1);
  std::normal_distribution<double> n;
  std::vector<double> k(3 * 3 * 2 * 4);
  for (double& v : k) v = n(rng);
  EXPECT_GE(KernelOrthonormalityPenalty(k, {3, 3, 2, 4}), 0.0);
  EXPECT_THROW(KernelOrthonormalityPenalty(k, {3, 3, 2, 5}), std::invalid_argument);
}

}  // namespace
}  // namespace aberro
