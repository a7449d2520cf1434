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

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

namespace aberro {
namespace {

TemperatureNetConfig SmallConfig(bool prior) {
  TemperatureNetConfig c;
  c.input_res = 8;
  c.in_channels = 4;
  c.widths = {4, 8};
  c.hidden = 6;
  c.use_prior = prior;
  return c;
}

std::vector<double> RandomInput(const TemperatureNet& net, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::vector<double> x(net.input_size());
  for (double& v : x) v = n(rng);
  return x;
}

TEST(TemperatureNetTest, ZeroParametersGiveSoftplusOfZero) {
  TemperatureNet net(SmallConfig(false));
  for (double& p : net.params()) p = 0.0;
  EXPECT_NEAR(net.Forward(RandomInput(net, 1), {}), std::log(2.0), 1e-15);
}


TEST(TemperatureNetTest, PriorSlotWidth) {
  TemperatureNet pts(SmallConfig(false)), pipts(SmallConfig(true));
  EXPECT_TRUE(pts.prior_weights().empty());
  EXPECT_EQ(pipts.prior_weights().size(), static_cast<std::size_t>(kPriorWidth) * 6);
  EXPECT_EQ(pipts.num_params(), pts.num_params() + pipts.prior_weights().size());
}

TEST(TemperatureNetTest, ZeroedPriorMatchesPts) {
  TemperatureNet pts(SmallConfig(false)), pipts(SmallConfig(true));
  pts.InitRandom(9);
  pipts.InitRandom(9);
  const std::vector<double> x = RandomInput(pts, 4);
  const std::vector<double> alpha = {0.3, -0.7, 1.1};
  EXPECT_DOUBLE_EQ(pipts.Forward(x, alpha), pts.Forward(x, {}));
  for (double& w : pipts.prior_weights()) w = 0.5;
  EXPECT_NE(pipts.Forward(x, alpha), pts.Forward(x, {}));
  for (double& w : pipts.prior_weights()) w = 0.0;
  EXPECT_DOUBLE_EQ(pipts.Forward(x, alpha), pts.Forward(x, {}));
}

TEST(TemperatureNetTest, OutputFiniteAndPositive) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  TemperatureNet net(SmallConfig(true));
  for (int rep = 0; rep < 1000; ++rep) {
    for (double& p : net.params()) p = 3.0 * n(rng);
    const double t = net.Forward(RandomInput(net, rep), std::vector<double>{n(rng), n(rng), n(rng)});
    ASSERT_TRUE(std::isfinite(t));
    ASSERT_GT(t, 0.0);
  }
}

TEST(TemperatureNetTest, RejectsMismatchedInputs) {
  TemperatureNet net(SmallConfig(true));
  net.InitRandom(1);
  std::vector<double> x(net.input_size() - 1);
  const std::vector<double> alpha = {0, 0, 0};
  EXPECT_THROW(net.Forward(x, alpha), std::invalid_argument);
  EXPECT_THROW(net.Forward(RandomInput(net, 1), {}), std::invalid_argument);
  TemperatureNetConfig bad = SmallConfig(false);
  bad.input_res = 6;
  bad.widths = {4, 4, 4};
  EXPECT_THROW(TemperatureNet{bad}, std::invalid_argument);
}

TEST(TemperatureNetTest, BackwardMatchesFiniteDifference) {
  TemperatureNet net(SmallConfig(true));
  net.InitRandom(5);
  const std::vector<double> x = RandomInput(net, 6);
  const std::vector<double> alpha = {0.2, -0.4, 0.9};
  for (double& w : net.prior_weights()) w = 0.3;
  TemperatureNet::Cache cache;
  net.Forward(x, alpha, &cache);
  std::vector<double> grad(net.num_params(), 0.0);
  net.Backward(cache, 1.0, grad);
  auto params = net.params();
  for (std::size_t k = 0; k < params.size(); k += 7) {
    const double saved = params[k], h = 1e-6;
    params[k] = saved + h;
    const double up = net.Forward(x, alpha);
    params[k] = saved - h;
    const double down = net.Forward(x, alpha);
    params[k] = saved;
    EXPECT_NEAR(grad[k], (up - down) / (2 * h), 1e-6 + 1e-5 * std::abs(grad[k])) << k;
  }
}

TEST(TemperatureNetTest, InitIsDeterministic) {
  TemperatureNet a(SmallConfig(true)), b(SmallConfig(true));
  a.InitRandom(42);
  b.InitRandom(42);
  EXPECT_TRUE(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  for (double w : a.prior_weights()) EXPECT_EQ(w, 0.0);
}

TEST(DownsampleTest, BoxAverage) {
  LogitTensor t(4, 4, 2);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      t.pixel(r * 4 + c)[0] = static_cast<float>(r);
      t.pixel(r * 4 + c)[1] = static_cast<float>(c);
    }
  }
  const std::vector<double> d = DownsampleLogits(t, 2);
  ASSERT_EQ(d.size(), 8u);
  EXPECT_DOUBLE_EQ(d[0], 0.5);
  EXPECT_DOUBLE_EQ(d[1], 0.5);
  EXPECT_DOUBLE_EQ(d[2], 0.5);
  EXPECT_DOUBLE_EQ(d[3], 2.5);
  EXPECT_DOUBLE_EQ(d[6], 2.5);
  EXPECT_THROW(DownsampleLogits(t, 3), std::invalid_argument);
}

TEST(SoftplusTest, Values) {
  EXPECT_NEAR(Softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(Softplus(100.0), 100.0);
  EXPECT_GT(Softplus(-50.0), 0.0);
}

}  // namespace
}  // namespace aberro
