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

#ifndef ABERRO_ANALYSIS_H_
#define ABERRO_ANALYSIS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace aberro {

struct SampleSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma_y;  // optional; empty or one positive entry per point

  std::size_t size() const { return x.size(); }
  // Throws std::invalid_argument on unequal lengths, fewer than two points,
  // non-finite values or non-positive sigma_y.
  void Validate() const;
};

// ---- Correlation -----------------------------------------------------------

// Chatterjee's rank correlation. Pairs are ordered by x with ties in x broken
// by a uniform shuffle drawn from `tie_seed`. Throws UndefinedMetricError for
// constant y.
double ChatterjeeXi(const SampleSeries& s, uint64_t tie_seed = 0);

// Finite joint PMF; pmf is row-major over (x_support, y_support).
struct DiscreteJoint {
  std::vector<double> x_support;
  std::vector<double> y_support;
  std::vector<double> pmf;
};

// Population dependence measure
//   sum_t P(Y=t) Var_X(P(Y>=t | X)) / sum_t P(Y=t) Var(1{Y>=t})
// over the support points t of Y. The estimand of ChatterjeeXi. Throws
// UndefinedMetricError for a degenerate y marginal, std::invalid_argument for
// a malformed PMF.
double XiPopulationDiscrete(const DiscreteJoint& joint);

// Product-moment correlation. Throws UndefinedMetricError for constant input.
double PearsonRho(const SampleSeries& s);

// Piecewise toy function with jumps at x = -2 pi and x = 2 pi:
//   2 - cos(10 x)              for |x| > 2 pi
//   12 + sum_n=1..10 sin(n x)  for -2 pi <= x < 0
//   12 - sum_n=1..10 sin(n x)  for 0 <= x <= 2 pi
double TestFunction(double x);

// n points uniform on [-10, 10] with y = TestFunction(x) + N(0, sigma_eps^2),
// followed by n_sub points at each of x = -2 pi and x = 2 pi with y uniform on
// the jump interval [1, 12].
SampleSeries GenerateTestSeries(int n, double sigma_eps, uint64_t seed, int n_sub = 0);

struct XiDecayPoint {
  int n_sub = 0;
  double relative_cardinality = 0.0;  // 2 n_sub / base_n
  double mean_xi = 0.0;
  double std_of_mean = 0.0;
  double mean_pearson = 0.0;
};

// Mean xi over seeds for each subsample level. The tie seed of each run is
// the series seed.
std::vector<XiDecayPoint> XiDecayStudy(std::span<const int> n_sub_levels,
                                       std::span<const uint64_t> seeds, int base_n = 1001,
                                       double sigma_eps = 0.3);

// ---- Sensitivity regression -------------------------------------------------

constexpr int kNumBeta = 5;
using Beta = std::array<double, kNumBeta>;
using Matrix5 = Eigen::Matrix<double, kNumBeta, kNumBeta>;

// f(x) = b1 exp(b2 (x - b3)) + b4 x + b5
double SensitivityModel(double x, const Beta& beta);
Beta SensitivityGradient(double x, const Beta& beta);

struct FitOptions {
  // Parameters with free[q] == false stay at fixed_values[q].
  std::array<bool, kNumBeta> free = {true, true, true, true, true};
  Beta fixed_values = {0.0, 0.0, 0.0, 0.0, 0.0};
  // b1 and b3 only enter through b1 exp(-b2 b3). Unless b3 is listed as free
  // here via gauge_free, it is pinned to beta3_gauge, or when unset to the
  // x-location of the extremum of the smoothed data.
  std::optional<double> beta3_gauge;
  bool gauge_free = false;
  // Extra start tried before the grid. With multi_start false the grid is
  // only a fallback for when this start fails.
  std::optional<Beta> initial;
  bool multi_start = true;
  int max_iterations = 5000;
  double step_tolerance = 1e-8;
};

struct BandPoint {
  double x = 0.0;
  double center = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct FitResult {
  Beta beta{};
  // Gauss-Newton covariance (J^T W J)^-1 over the free parameters, scaled by
  // the residual variance when no sigma_y is given. Replaced by McCovariance
  // where requested.
  Matrix5 covariance = Matrix5::Zero();
  std::array<bool, kNumBeta> free{};
  double residual_ss = 0.0;  // unweighted
  double weighted_ss = 0.0;
  double unexplained_variance = 0.0;
  int iterations = 0;
  int converged_starts = 0;
  std::vector<BandPoint> band;
};

// Weighted Levenberg-Marquardt with analytic Jacobian over 8 starts
// (b2 in {+-0.5, +-2, +-8, +-32} / x span, linear parameters by weighted least
// squares at each b2). Throws InsufficientDataError for fewer than 10 points,
// DegenerateInputError for constant x, FitFailureError when no start
// converges.
FitResult FitSensitivity(const SampleSeries& s, const FitOptions& options = {});

// Covariance of refits on y + N(0, sigma_y^2) resamples. The gauge is pinned
// to the base fit. Throws std::invalid_argument without sigma_y or for
// n_mc < 100, FitFailureError when more than 20% of the refits fail.
Matrix5 McCovariance(const SampleSeries& s, int n_mc, uint64_t seed,
                     const FitOptions& options = {}, int threads = 1);

// f(x) +- k sqrt(g^T C g) with g the parameter gradient of f. Throws
// std::invalid_argument for a covariance that is not positive semi-definite.
std::vector<BandPoint> ConfidenceBand(const FitResult& fit, std::span<const double> x_grid,
                                      double k);

// [sum r^2 / (n - 5)] / sample variance of y. Throws InsufficientDataError for
// n <= 5.
double UnexplainedVariance(const FitResult& fit, const SampleSeries& s);

}  // namespace aberro

#endif  // ABERRO_ANALYSIS_H_
