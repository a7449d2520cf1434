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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "aberro/analysis.h"
#include "aberro/errors.h"

namespace aberro {

void SampleSeries::Validate() const {
  if (x.size() != y.size()) throw std::invalid_argument("x and y lengths differ");
  if (x.size() < 2) throw std::invalid_argument("series needs at least two points");
  if (!sigma_y.empty() && sigma_y.size() != x.size()) {
    throw std::invalid_argument("sigma_y length differs from the series");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw std::invalid_argument("series contains non-finite values");
    }
    if (!sigma_y.empty() && !(sigma_y[i] > 0.0 && std::isfinite(sigma_y[i]))) {
      throw std::invalid_argument("sigma_y entries must be positive");
    }
  }
}

double ChatterjeeXi(const SampleSeries& s, uint64_t tie_seed) {
  s.Validate();
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(tie_seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });

  std::vector<double> sorted_y = s.y;
  std::sort(sorted_y.begin(), sorted_y.end());
  if (sorted_y.front() == sorted_y.back()) throw UndefinedMetricError("xi of constant y");

  // r = #{y_j <= y_i}, l = #{y_j >= y_i}
  std::vector<int64_t> r(n), l(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double yi = s.y[order[k]];
    r[k] = std::upper_bound(sorted_y.begin(), sorted_y.end(), yi) - sorted_y.begin();
    l[k] = static_cast<int64_t>(n) -
           (std::lower_bound(sorted_y.begin(), sorted_y.end(), yi) - sorted_y.begin());
  }
  int64_t jumps = 0;
  for (std::size_t k = 0; k + 1 < n; ++k) jumps += std::abs(r[k + 1] - r[k]);
  int64_t spread = 0;
  for (std::size_t k = 0; k < n; ++k) spread += l[k] * (static_cast<int64_t>(n) - l[k]);
  // Integer sums keep the closed-form cases exact.
  const long double ratio = static_cast<long double>(static_cast<int64_t>(n) * jumps) /
                            static_cast<long double>(2 * spread);
  return 1.0 - static_cast<double>(ratio);
}

double XiPopulationDiscrete(const DiscreteJoint& joint) {
  const std::size_t nx = joint.x_support.size();
  const std::size_t ny = joint.y_support.size();
  if (nx == 0 || ny == 0 || joint.pmf.size() != nx * ny) {
    throw std::invalid_argument("PMF shape does not match the supports");
  }
  double total = 0.0;
  for (double p : joint.pmf) {
    if (!(p >= 0.0)) throw std::invalid_argument("PMF entries must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("PMF must sum to 1");

  std::vector<double> px(nx, 0.0), py(ny, 0.0);
  for (std::size_t a = 0; a < nx; ++a) {
    for (std::size_t b = 0; b < ny; ++b) {
      px[a] += joint.pmf[a * ny + b];
      py[b] += joint.pmf[a * ny + b];
    }
  }
  double numerator = 0.0, denominator = 0.0;
  for (std::size_t t = 0; t < ny; ++t) {
    if (py[t] <= 0.0) continue;
    const double y_t = joint.y_support[t];
    double tail = 0.0;
    std::vector<double> cond(nx, 0.0);
    for (std::size_t b = 0; b < ny; ++b) {
      if (joint.y_support[b] < y_t) continue;
      tail += py[b];
      for (std::size_t a = 0; a < nx; ++a) cond[a] += joint.pmf[a * ny + b];
    }
    double explained = 0.0;
    for (std::size_t a = 0; a < nx; ++a) {
      if (px[a] <= 0.0) continue;
      const double g = cond[a] / px[a];
      explained += px[a] * (g - tail) * (g - tail);
    }
    numerator += py[t] * explained;
    denominator += py[t] * tail * (1.0 - tail);
  }
  if (denominator <= 1e-300) throw UndefinedMetricError("degenerate y marginal");
  return numerator / denominator;
}

double PearsonRho(const SampleSeries& s) {
  s.Validate();
  const double n = static_cast<double>(s.size());
  const double mx = std::accumulate(s.x.begin(), s.x.end(), 0.0) / n;
  const double my = std::accumulate(s.y.begin(), s.y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sxx += (s.x[i] - mx) * (s.x[i] - mx);
    syy += (s.y[i] - my) * (s.y[i] - my);
    sxy += (s.x[i] - mx) * (s.y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw UndefinedMetricError("correlation of a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double TestFunction(double x) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (x < -kTwoPi || x > kTwoPi) return 2.0 - std::cos(10.0 * x);
  double sines = 0.0;
  for (int n = 1; n <= 10; ++n) sines += std::sin(n * x);
  return x < 0.0 ? 12.0 + sines : 12.0 - sines;
}

SampleSeries GenerateTestSeries(int n, double sigma_eps, uint64_t seed, int n_sub) {
  if (n < 2) throw std::invalid_argument("test series needs n >= 2");
  if (n_sub < 0 || sigma_eps < 0.0) throw std::invalid_argument("negative n_sub or sigma");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-10.0, 10.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> jump(1.0, 12.0);
  SampleSeries s;
  s.x.reserve(n + 2 * n_sub);
  s.y.reserve(n + 2 * n_sub);
  for (int i = 0; i < n; ++i) {
    const double x = ux(rng);
    s.x.push_back(x);
    s.y.push_back(TestFunction(x) + sigma_eps * noise(rng));
  }
  for (double edge : {-2.0 * std::numbers::pi, 2.0 * std::numbers::pi}) {
    for (int i = 0; i < n_sub; ++i) {
      s.x.push_back(edge);
      s.y.push_back(jump(rng));
    }
  }
  return s;
}

std::vector<XiDecayPoint> XiDecayStudy(std::span<const int> n_sub_levels,
                                       std::span<const uint64_t> seeds, int base_n,
                                       double sigma_eps) {
  if (seeds.empty()) throw std::invalid_argument("decay study needs at least one seed");
  std::vector<XiDecayPoint> curve;
  for (int n_sub : n_sub_levels) {
    std::vector<double> xi;
    double rho_sum = 0.0;
    for (uint64_t seed : seeds) {
      const SampleSeries s = GenerateTestSeries(base_n, sigma_eps, seed, n_sub);
      xi.push_back(ChatterjeeXi(s, seed));
      rho_sum += PearsonRho(s);
    }
    XiDecayPoint p;
    p.n_sub = n_sub;
    p.relative_cardinality = 2.0 * n_sub / base_n;
    const double m = static_cast<double>(xi.size());
    p.mean_xi = std::accumulate(xi.begin(), xi.end(), 0.0) / m;
    if (xi.size() > 1) {
      double ss = 0.0;
      for (double v : xi) ss += (v - p.mean_xi) * (v - p.mean_xi);
      p.std_of_mean = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
    }
    p.mean_pearson = rho_sum / m;
    curve.push_back(p);
  }
  return curve;
}

}  // namespace aberro
