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

#include "aberro/analysis.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "aberro/errors.h"

namespace aberro {
namespace {

// Direct O(n^2) evaluation of the rank formula for ties-free x.
double BruteForceXi(const SampleSeries& s) {
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
  std::vector<double> r(n), l(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double yi = s.y[order[i]];
    for (std::size_t j = 0; j < n; ++j) {
      r[i] += s.y[j] <= yi;
      l[i] += s.y[j] >= yi;
    }
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) num += std::abs(r[i + 1] - r[i]);
  for (std::size_t i = 0; i < n; ++i) den += l[i] * (n - l[i]);
  return 1.0 - n * num / (2.0 * den);
}

SampleSeries Monotone(int n) {
  SampleSeries s;
  for (int i = 0; i < n; ++i) {
    s.x.push_back(0.37 * i - 2.0);
    s.y.push_back(std::exp(0.1 * i));
  }
  return s;
}

TEST(XiTest, ClosedFormForMonotoneData) {
  for (int n : {4, 10, 100}) {
    const SampleSeries s = Monotone(n);
    EXPECT_NEAR(ChatterjeeXi(s), 1.0 - 3.0 / (n + 1), 1e-15) << n;
    EXPECT_NEAR(BruteForceXi(s), 1.0 - 3.0 / (n + 1), 1e-15) << n;
  }
  EXPECT_DOUBLE_EQ(ChatterjeeXi(Monotone(4)), 0.4);
}

TEST(XiTest, MatchesBruteForceWithTiesInY) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> level(0, 5);
  for (int rep = 0; rep < 20; ++rep) {
    SampleSeries s;
    for (int i = 0; i < 60; ++i) {
      s.x.push_back(u(rng));
      s.y.push_back(rep % 2 ? level(rng) : s.x.back() * s.x.back() + 0.1 * u(rng));
    }
    EXPECT_NEAR(ChatterjeeXi(s), BruteForceXi(s), 1e-12);
  }
}

TEST(XiTest, IndependentDataNearZero) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  SampleSeries s;
  for (int i = 0; i < 10000; ++i) {
    s.x.push_back(n(rng));
    s.y.push_back(n(rng));
  }
  EXPECT_LT(std::abs(ChatterjeeXi(s)), 0.05);
}

TEST(XiTest, TiesInXUseSeed) {
  SampleSeries s;
  s.x = {0, 0, 0, 1, 1, 1, 2, 2};
  s.y = {3, 1, 2, 5, 4, 6, 8, 7};
  EXPECT_EQ(ChatterjeeXi(s, 4), ChatterjeeXi(s, 4));
  bool differs = false;
  for (uint64_t seed = 0; seed < 20 && !differs; ++seed) {
    differs = ChatterjeeXi(s, seed) != ChatterjeeXi(s, 0);
  }
  EXPECT_TRUE(differs);
}

TEST(XiTest, ConstantYIsUndefined) {
  SampleSeries s;
  s.x = {1, 2, 3};
  s.y = {4, 4, 4};
  EXPECT_THROW(ChatterjeeXi(s), UndefinedMetricError);
}

TEST(XiTest, ToyStudyAtFullSize) {
  double xi = 0.0, rho = 0.0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const SampleSeries s = GenerateTestSeries(1001, 0.3, seed);
    xi += ChatterjeeXi(s, seed);
    rho += PearsonRho(s);
  }
  EXPECT_NEAR(xi / 100, 0.824, 0.03);
  EXPECT_LT(std::abs(rho / 100), 0.1);
}

TEST(XiPopulationTest, FunctionalAndIndependent) {
  DiscreteJoint f{{0, 1, 2}, {0, 1, 2}, {0.2, 0, 0, 0, 0.5, 0, 0, 0, 0.3}};
  EXPECT_NEAR(XiPopulationDiscrete(f), 1.0, 1e-12);
  DiscreteJoint ind{{0, 1}, {0, 1}, {0.3 * 0.4, 0.3 * 0.6, 0.7 * 0.4, 0.7 * 0.6}};
  EXPECT_NEAR(XiPopulationDiscrete(ind), 0.0, 1e-12);
  DiscreteJoint bad{{0, 1}, {0, 1}, {0.5, 0.5, 0.5, 0.5}};
  EXPECT_THROW(XiPopulationDiscrete(bad), std::invalid_argument);
}

TEST(XiPopulationTest, SampleEstimateConverges) {
  const DiscreteJoint joint{{0, 1}, {0, 1}, {0.4, 0.1, 0.15, 0.35}};
  const double population = XiPopulationDiscrete(joint);
  std::mt19937_64 rng(77);
  std::discrete_distribution<int> cell(joint.pmf.begin(), joint.pmf.end());
  SampleSeries s;
  for (int i = 0; i < 100000; ++i) {
    const int c = cell(rng);
    s.x.push_back(joint.x_support[c / 2]);
    s.y.push_back(joint.y_support[c % 2]);
  }
  EXPECT_NEAR(ChatterjeeXi(s, 5), population, 0.02);
}

TEST(PearsonTest, LinearCases) {
  SampleSeries s;
  for (int i = 0; i < 10; ++i) {
    s.x.push_back(i);
    s.y.push_back(2.0 * i + 1.0);
  }
  EXPECT_NEAR(PearsonRho(s), 1.0, 1e-14);
  for (double& y : s.y) y = -(y - 1.0) / 2.0;
  EXPECT_NEAR(PearsonRho(s), -1.0, 1e-14);
}

TEST(TestFunctionTest, Branches) {
  EXPECT_NEAR(TestFunction(3.0 * std::numbers::pi), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(TestFunction(0.0), 12.0);
  EXPECT_NEAR(TestFunction(-1e-12), 12.0, 1e-9);
  EXPECT_NEAR(TestFunction(1e-12), 12.0, 1e-9);
}

TEST(TestSeriesTest, SubsamplesSitOnJumps) {
  const SampleSeries s = GenerateTestSeries(101, 0.3, 4, 10);
  ASSERT_EQ(s.size(), 121u);
  for (std::size_t i = 101; i < s.size(); ++i) {
    EXPECT_DOUBLE_EQ(std::abs(s.x[i]), 2.0 * std::numbers::pi);
    EXPECT_GE(s.y[i], 1.0);
    EXPECT_LE(s.y[i], 12.0);
  }
  const SampleSeries again = GenerateTestSeries(101, 0.3, 4, 10);
  EXPECT_EQ(s.y, again.y);
}

TEST(XiDecayTest, SubsamplesReduceXi) {
  const std::vector<int> levels = {0, 100};
  std::vector<uint64_t> seeds(20);
  std::iota(seeds.begin(), seeds.end(), 0);
  const auto curve = XiDecayStudy(levels, seeds);
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_NEAR(curve[0].relative_cardinality, 0.0, 1e-15);
  EXPECT_NEAR(curve[1].relative_cardinality, 200.0 / 1001.0, 1e-15);
  EXPECT_GT(curve[0].mean_xi - curve[1].mean_xi, 0.02);
}

// ---- Sensitivity regression ------------------------------------------------

SampleSeries ModelSeries(const Beta& beta, int n, double sigma, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  SampleSeries s;
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / (n - 1);
    s.x.push_back(x);
    s.y.push_back(SensitivityModel(x, beta) + noise(rng));
    s.sigma_y.push_back(sigma);
  }
  return s;
}

FitOptions LinearOnly() {
  FitOptions o;
  o.free = {false, false, false, true, true};
  return o;
}

TEST(SensitivityModelTest, GradientMatchesFiniteDifference) {
  const Beta beta = {0.5, -3.0, 0.2, 0.1, 0.3};
  for (double x : {-0.5, 0.0, 0.7}) {
    const Beta g = SensitivityGradient(x, beta);
    for (int q = 0; q < kNumBeta; ++q) {
      Beta up = beta, down = beta;
      up[q] += 1e-6;
      down[q] -= 1e-6;
      const double fd = (SensitivityModel(x, up) - SensitivityModel(x, down)) / 2e-6;
      EXPECT_NEAR(g[q], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(FitSensitivityTest, RecoversParametersInGauge) {
  const Beta truth = {0.5, -8.0, 0.2, 0.1, 0.3};
  const SampleSeries s = ModelSeries(truth, 60, 1e-3, 1);
  const FitResult fit = FitSensitivity(s);
  const double gauge = fit.beta[2];
  // Same curve with b3 moved to the gauge.
  const Beta expected = {truth[0] * std::exp(truth[1] * (gauge - truth[2])), truth[1], gauge,
                         truth[3], truth[4]};
  for (int q = 0; q < kNumBeta; ++q) {
    if (!fit.free[q]) continue;
    EXPECT_LT(std::abs(fit.beta[q] - expected[q]), 3.0 * std::sqrt(fit.covariance(q, q))) << q;
  }
  EXPECT_FALSE(fit.free[2]);
  EXPECT_GT(fit.converged_starts, 0);
}

TEST(FitSensitivityTest, LinearDataMatchesOls) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.05);
  SampleSeries s;
  for (int i = 0; i < 40; ++i) {
    s.x.push_back(0.1 * i);
    s.y.push_back(1.5 * s.x.back() - 0.7 + n(rng));
  }
  const FitResult fit = FitSensitivity(s, LinearOnly());
  Eigen::MatrixXd a(40, 2);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) a(i, 0) = s.x[i], a(i, 1) = 1.0, y(i) = s.y[i];
  const Eigen::VectorXd ols = a.colPivHouseholderQr().solve(y);
  EXPECT_NEAR(fit.beta[3], ols(0), 1e-6);
  EXPECT_NEAR(fit.beta[4], ols(1), 1e-6);
}

TEST(FitSensitivityTest, NeverWorseThanMean) {
  const SampleSeries s = ModelSeries({0.2, 3.0, 0.5, -0.4, 1.0}, 50, 0.05, 8);
  const FitResult fit = FitSensitivity(s);
  const double mean = std::accumulate(s.y.begin(), s.y.end(), 0.0) / s.size();
  double ss_mean = 0.0;
  for (double y : s.y) ss_mean += (y - mean) * (y - mean);
  EXPECT_LE(fit.residual_ss, ss_mean);
}

TEST(FitSensitivityTest, InputErrors) {
  SampleSeries small = Monotone(5);
  EXPECT_THROW(FitSensitivity(small), InsufficientDataError);
  SampleSeries flat;
  flat.x.assign(20, 1.0);
  for (int i = 0; i < 20; ++i) flat.y.push_back(i);
  EXPECT_THROW(FitSensitivity(flat), DegenerateInputError);
}

TEST(McCovarianceTest, LinearCaseMatchesOlsCovariance) {
  const double sigma = 0.02;
  SampleSeries s = ModelSeries({0.0, 0.0, 0.0, 0.8, -0.2}, 30, sigma, 3);
  const Matrix5 mc = McCovariance(s, 1000, 9, LinearOnly());
  Eigen::MatrixXd a(30, 2);
  for (int i = 0; i < 30; ++i) a(i, 0) = s.x[i], a(i, 1) = 1.0;
  const Eigen::Matrix2d ols = sigma * sigma * (a.transpose() * a).inverse();
  EXPECT_NEAR(mc(3, 3), ols(0, 0), 0.15 * ols(0, 0));
  EXPECT_NEAR(mc(4, 4), ols(1, 1), 0.15 * ols(1, 1));
  EXPECT_NEAR(mc(3, 4), ols(0, 1), 0.15 * std::abs(ols(0, 1)));
  for (int q = 0; q < 3; ++q) EXPECT_EQ(mc(q, q), 0.0);
}

TEST(McCovarianceTest, InputErrors) {
  SampleSeries s = ModelSeries({0.0, 0.0, 0.0, 0.8, -0.2}, 30, 0.02, 3);
  EXPECT_THROW(McCovariance(s, 50, 1, LinearOnly()), std::invalid_argument);
  s.sigma_y.clear();
  EXPECT_THROW(McCovariance(s, 200, 1, LinearOnly()), std::invalid_argument);
}

TEST(McCovarianceTest, TinyNoiseGivesTinyCovariance) {
  const SampleSeries s = ModelSeries({0.0, 0.0, 0.0, 0.8, -0.2}, 30, 1e-9, 3);
  const Matrix5 mc = McCovariance(s, 100, 2, LinearOnly());
  EXPECT_LT(mc.cwiseAbs().maxCoeff(), 1e-15);
  for (int q = 0; q < kNumBeta; ++q) EXPECT_GE(mc(q, q), 0.0);
}

TEST(BandTest, LinearityAndDegenerateCases) {
  FitResult fit;
  fit.beta = {0.5, -2.0, 0.3, 0.1, 0.2};
  const std::vector<double> grid = {0.0, 0.25, 0.5, 1.0};
  for (const BandPoint& p : ConfidenceBand(fit, grid, 2.0)) {
    EXPECT_EQ(p.lower, p.center);
    EXPECT_EQ(p.upper, p.center);
  }
  fit.covariance(4, 4) = 0.04;
  for (const BandPoint& p : ConfidenceBand(fit, grid, 2.0)) {
    EXPECT_NEAR(p.upper - p.center, 2.0 * 0.2, 1e-15);
    EXPECT_NEAR(p.center, SensitivityModel(p.x, fit.beta), 1e-15);
  }
  fit.covariance(0, 0) = 0.01;
  fit.covariance(0, 4) = fit.covariance(4, 0) = 0.005;
  const auto b1 = ConfidenceBand(fit, grid, 1.0);
  const auto b2 = ConfidenceBand(fit, grid, 2.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_DOUBLE_EQ(b2[i].upper - b2[i].lower, 2.0 * (b1[i].upper - b1[i].lower));
  }
  fit.covariance(4, 4) = -1.0;
  EXPECT_THROW(ConfidenceBand(fit, grid, 1.0), std::invalid_argument);
}

TEST(UnexplainedVarianceTest, Cases) {
  SampleSeries exact = ModelSeries({0.0, 0.0, 0.0, 0.8, -0.2}, 20, 1e-3, 0);
  exact.sigma_y.clear();
  for (std::size_t i = 0; i < exact.size(); ++i) exact.y[i] = 0.8 * exact.x[i] - 0.2;
  const FitResult perfect = FitSensitivity(exact, LinearOnly());
  EXPECT_NEAR(UnexplainedVariance(perfect, exact), 0.0, 1e-20);

  const SampleSeries s = ModelSeries({0.3, 2.0, 0.5, 0.4, 0.1}, 30, 0.05, 2);
  FitOptions mean_only;
  mean_only.free = {false, false, false, false, true};
  const FitResult mean_fit = FitSensitivity(s, mean_only);
  EXPECT_NEAR(UnexplainedVariance(mean_fit, s), 29.0 / 25.0, 1e-9);

  SampleSeries shuffled = s;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.y.begin(), shuffled.y.end(), rng);
  const double structured = UnexplainedVariance(FitSensitivity(s), s);
  const double noise = UnexplainedVariance(FitSensitivity(shuffled), shuffled);
  EXPECT_LT(structured, noise);
}

}  // namespace
}  // namespace aberro
