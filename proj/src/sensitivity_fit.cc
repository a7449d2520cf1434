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
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "aberro/analysis.h"
#include "aberro/errors.h"

namespace aberro {
namespace {

constexpr double kMaxExponent = 700.0;
constexpr double kMaxDamping = 1e16;
constexpr double kGradientTolerance = 1e-10;
constexpr double kMaxFailureFraction = 0.2;
constexpr std::array<double, 8> kBeta2Grid = {0.5, -0.5, 2.0, -2.0, 8.0, -8.0, 32.0, -32.0};

double Exponential(double x, const Beta& b) {
  return std::exp(std::clamp(b[1] * (x - b[2]), -kMaxExponent, kMaxExponent));
}

uint64_t SplitMix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Weight(const SampleSeries& s, std::size_t i) {
  return s.sigma_y.empty() ? 1.0 : 1.0 / s.sigma_y[i];
}

double WeightedSs(const SampleSeries& s, const Beta& b) {
  double ss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = Weight(s, i) * (s.y[i] - SensitivityModel(s.x[i], b));
    ss += r * r;
  }
  return ss;
}

// x-location of the dominant interior extremum of a running mean over the
// x-sorted data; the median x when the smoothed curve is monotone.
double ExtremumGauge(const SampleSeries& s) {
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
  const std::size_t half = std::max<std::size_t>(1, n / 20);
  std::vector<double> smooth(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k >= half ? k - half : 0;
    const std::size_t hi = std::min(n - 1, k + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += s.y[order[j]];
    smooth[k] = sum / static_cast<double>(hi - lo + 1);
  }
  const double mean = std::accumulate(smooth.begin(), smooth.end(), 0.0) / n;
  std::size_t best = n;
  double best_dev = -1.0;
  for (std::size_t k = half; k + half < n; ++k) {
    const bool is_max = smooth[k] >= smooth[k - 1] && smooth[k] >= smooth[k + 1];
    const bool is_min = smooth[k] <= smooth[k - 1] && smooth[k] <= smooth[k + 1];
    if (!is_max && !is_min) continue;
    const bool global = smooth[k] == *std::max_element(smooth.begin(), smooth.end()) ||
                        smooth[k] == *std::min_element(smooth.begin(), smooth.end());
    if (!global) continue;
    const double dev = std::abs(smooth[k] - mean);
    if (dev > best_dev) {
      best_dev = dev;
      best = k;
    }
  }
  if (best == n) return s.x[order[n / 2]];
  return s.x[order[best]];
}

// Weighted least squares for the free linear parameters (b1, b4, b5) with the
// rest of `b` held.
void SolveLinear(const SampleSeries& s, const std::array<bool, kNumBeta>& free, Beta& b) {
  std::vector<int> cols;
  for (int q : {0, 3, 4}) {
    if (free[q]) cols.push_back(q);
  }
  if (cols.empty()) return;
  const std::size_t n = s.size();
  Eigen::MatrixXd a(n, cols.size());
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = Weight(s, i);
    Beta held = b;
    for (int q : cols) held[q] = 0.0;
    rhs(i) = w * (s.y[i] - SensitivityModel(s.x[i], held));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const int q = cols[c];
      const double basis = q == 0 ? Exponential(s.x[i], b) : (q == 3 ? s.x[i] : 1.0);
      a(i, c) = w * basis;
    }
  }
  const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(rhs);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (std::isfinite(sol(c))) b[cols[c]] = sol(c);
  }
}

struct LmOutcome {
  Beta beta{};
  double weighted_ss = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

LmOutcome Levenberg(const SampleSeries& s, Beta b, const std::vector<int>& idx,
                    const FitOptions& options) {
  const std::size_t n = s.size();
  const std::size_t p = idx.size();
  LmOutcome out;
  double ss = WeightedSs(s, b);
  if (!std::isfinite(ss)) return out;
  if (p == 0) {
    out = {b, ss, 0, true};
    return out;
  }
  double lambda = 1e-3;
  Eigen::MatrixXd j(n, p);
  Eigen::VectorXd r(n);
  int it = 0;
  bool need_jacobian = true;
  Eigen::MatrixXd a;
  Eigen::VectorXd g;
  for (; it < options.max_iterations; ++it) {
    if (need_jacobian) {
      for (std::size_t i = 0; i < n; ++i) {
        const double w = Weight(s, i);
        r(i) = w * (s.y[i] - SensitivityModel(s.x[i], b));
        const Beta grad = SensitivityGradient(s.x[i], b);
        for (std::size_t c = 0; c < p; ++c) j(i, c) = w * grad[idx[c]];
      }
      a = j.transpose() * j;
      g = j.transpose() * r;
      need_jacobian = false;
      // Residual orthogonal to every Jacobian column: a stationary point.
      const double r_norm = r.norm();
      double worst_cos = 0.0;
      for (std::size_t c = 0; c < p; ++c) {
        const double col = std::sqrt(a(c, c));
        if (col > 0.0 && r_norm > 0.0) worst_cos = std::max(worst_cos, std::abs(g(c)) / (col * r_norm));
      }
      if (worst_cos < kGradientTolerance) {
        out.converged = true;
        break;
      }
    }
    Eigen::MatrixXd damped = a;
    for (std::size_t c = 0; c < p; ++c) damped(c, c) += lambda * std::max(a(c, c), 1e-12);
    const Eigen::VectorXd step = damped.ldlt().solve(g);
    Beta trial = b;
    double step_norm = 0.0, beta_norm = 0.0;
    for (std::size_t c = 0; c < p; ++c) {
      trial[idx[c]] += step(c);
      step_norm += step(c) * step(c);
      beta_norm += b[idx[c]] * b[idx[c]];
    }
    const double trial_ss = step.allFinite() ? WeightedSs(s, trial) : ss + 1.0;
    if (std::isfinite(trial_ss) && trial_ss <= ss) {
      const bool small = std::sqrt(step_norm) < options.step_tolerance * (std::sqrt(beta_norm) + 1e-12);
      const bool flat = ss - trial_ss <= 1e-15 * ss;
      b = trial;
      ss = trial_ss;
      lambda = std::max(lambda * 0.1, 1e-12);
      need_jacobian = true;
      if (small || flat) {
        out.converged = true;
        ++it;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > kMaxDamping) {
        // No descent direction left at working precision.
        out.converged = true;
        ++it;
        break;
      }
    }
  }
  out.beta = b;
  out.weighted_ss = ss;
  out.iterations = it;
  return out;
}

Matrix5 GaussNewtonCovariance(const SampleSeries& s, const Beta& b, const std::vector<int>& idx,
                              double weighted_ss) {
  Matrix5 cov = Matrix5::Zero();
  const std::size_t n = s.size();
  const std::size_t p = idx.size();
  if (p == 0) return cov;
  Eigen::MatrixXd j(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = Weight(s, i);
    const Beta grad = SensitivityGradient(s.x[i], b);
    for (std::size_t c = 0; c < p; ++c) j(i, c) = w * grad[idx[c]];
  }
  const Eigen::MatrixXd a = j.transpose() * j;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(ev.maxCoeff(), 0.0);
  Eigen::VectorXd inv(p);
  for (std::size_t c = 0; c < p; ++c) inv(c) = ev(c) > cutoff ? 1.0 / ev(c) : 0.0;
  Eigen::MatrixXd pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  if (s.sigma_y.empty() && n > p) pinv *= weighted_ss / static_cast<double>(n - p);
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = 0; c < p; ++c) cov(idx[r], idx[c]) = pinv(r, c);
  }
  return cov;
}

}  // namespace

double SensitivityModel(double x, const Beta& b) {
  return b[0] * Exponential(x, b) + b[3] * x + b[4];
}

Beta SensitivityGradient(double x, const Beta& b) {
  const double e = Exponential(x, b);
  return {e, b[0] * (x - b[2]) * e, -b[0] * b[1] * e, x, 1.0};
}

FitResult FitSensitivity(const SampleSeries& s, const FitOptions& options) {
  s.Validate();
  if (s.size() < 10) throw InsufficientDataError("sensitivity fit needs at least 10 points");
  const auto [x_lo, x_hi] = std::minmax_element(s.x.begin(), s.x.end());
  const double span = *x_hi - *x_lo;
  if (!(span > 0.0)) throw DegenerateInputError("x spread is degenerate");

  std::array<bool, kNumBeta> free = options.free;
  Beta base = options.fixed_values;
  if (free[2] && !options.gauge_free) {
    free[2] = false;
    base[2] = options.beta3_gauge ? *options.beta3_gauge : ExtremumGauge(s);
  }
  std::vector<int> idx;
  for (int q = 0; q < kNumBeta; ++q) {
    if (free[q]) idx.push_back(q);
  }

  std::vector<Beta> starts;
  if (options.initial) {
    Beta b = *options.initial;
    for (int q = 0; q < kNumBeta; ++q) {
      if (!free[q]) b[q] = base[q];
    }
    starts.push_back(b);
  }
  for (double scale : kBeta2Grid) {
    Beta b = base;
    if (free[1]) b[1] = scale / span;
    if (free[0] && b[0] == 0.0) b[0] = 1.0;
    SolveLinear(s, free, b);
    starts.push_back(b);
  }

  LmOutcome best;
  int converged = 0;
  int total_iterations = 0;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    if (k == 1 && options.initial && !options.multi_start && converged > 0) break;
    const Beta& start = starts[k];
    const LmOutcome o = Levenberg(s, start, idx, options);
    total_iterations += o.iterations;
    if (!o.converged || !std::isfinite(o.weighted_ss)) continue;
    ++converged;
    if (o.weighted_ss < best.weighted_ss) best = o;
  }
  if (converged == 0) {
    throw FitFailureError("no start converged (" + std::to_string(starts.size()) + " starts, " +
                          std::to_string(total_iterations) + " iterations)");
  }

  FitResult fit;
  fit.beta = best.beta;
  fit.free = free;
  fit.weighted_ss = best.weighted_ss;
  fit.iterations = total_iterations;
  fit.converged_starts = converged;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = s.y[i] - SensitivityModel(s.x[i], fit.beta);
    fit.residual_ss += r * r;
  }
  fit.covariance = GaussNewtonCovariance(s, fit.beta, idx, fit.weighted_ss);
  fit.unexplained_variance = UnexplainedVariance(fit, s);
  return fit;
}

Matrix5 McCovariance(const SampleSeries& s, int n_mc, uint64_t seed, const FitOptions& options,
                     int threads) {
  s.Validate();
  if (s.sigma_y.empty()) throw std::invalid_argument("Monte-Carlo covariance needs sigma_y");
  if (n_mc < 100) throw std::invalid_argument("Monte-Carlo covariance needs n_mc >= 100");
  const FitResult base = FitSensitivity(s, options);
  FitOptions refit = options;
  refit.beta3_gauge = base.beta[2];
  refit.initial = base.beta;
  refit.multi_start = false;

  std::vector<std::optional<Beta>> draws(n_mc);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int m = next++; m < n_mc; m = next++) {
      std::mt19937_64 rng(SplitMix64(seed ^ SplitMix64(static_cast<uint64_t>(m))));
      std::normal_distribution<double> noise(0.0, 1.0);
      SampleSeries resampled = s;
      for (std::size_t i = 0; i < s.size(); ++i) resampled.y[i] += s.sigma_y[i] * noise(rng);
      try {
        draws[m] = FitSensitivity(resampled, refit).beta;
      } catch (const FitFailureError&) {
        draws[m].reset();
      }
    }
  };
  const int n_threads = std::clamp(threads, 1, n_mc);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<Beta> ok;
  for (const auto& d : draws) {
    if (d) ok.push_back(*d);
  }
  const int failures = n_mc - static_cast<int>(ok.size());
  if (failures > kMaxFailureFraction * n_mc || ok.size() < 2) {
    throw FitFailureError(std::to_string(failures) + " of " + std::to_string(n_mc) +
                          " Monte-Carlo refits failed");
  }
  Eigen::Matrix<double, kNumBeta, 1> mean = Eigen::Matrix<double, kNumBeta, 1>::Zero();
  for (const Beta& b : ok) mean += Eigen::Map<const Eigen::Matrix<double, kNumBeta, 1>>(b.data());
  mean /= static_cast<double>(ok.size());
  Matrix5 cov = Matrix5::Zero();
  for (const Beta& b : ok) {
    const Eigen::Matrix<double, kNumBeta, 1> d =
        Eigen::Map<const Eigen::Matrix<double, kNumBeta, 1>>(b.data()) - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(ok.size() - 1);
  for (int q = 0; q < kNumBeta; ++q) {
    if (base.free[q]) continue;
    cov.row(q).setZero();
    cov.col(q).setZero();
  }
  return cov;
}

std::vector<BandPoint> ConfidenceBand(const FitResult& fit, std::span<const double> x_grid,
                                      double k) {
  const Matrix5& c = fit.covariance;
  const double scale = std::max(c.cwiseAbs().maxCoeff(), 1e-300);
  if (!c.allFinite() || (c - c.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw std::invalid_argument("covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix5> eig(c);
  if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
    throw std::invalid_argument("covariance is not positive semi-definite");
  }
  std::vector<BandPoint> band;
  band.reserve(x_grid.size());
  for (double x : x_grid) {
    const Beta g = SensitivityGradient(x, fit.beta);
    const Eigen::Map<const Eigen::Matrix<double, kNumBeta, 1>> gv(g.data());
    const double var = std::max(0.0, gv.dot(c * gv));
    const double half = k * std::sqrt(var);
    const double center = SensitivityModel(x, fit.beta);
    band.push_back({x, center, center - half, center + half});
  }
  return band;
}

double UnexplainedVariance(const FitResult& fit, const SampleSeries& s) {
  const std::size_t n = s.size();
  if (n <= static_cast<std::size_t>(kNumBeta)) {
    throw InsufficientDataError("unexplained variance needs more than 5 points");
  }
  const double mean = std::accumulate(s.y.begin(), s.y.end(), 0.0) / n;
  double var = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    var += (s.y[i] - mean) * (s.y[i] - mean);
    const double r = s.y[i] - SensitivityModel(s.x[i], fit.beta);
    ss += r * r;
  }
  var /= static_cast<double>(n - 1);
  if (var <= 0.0) throw UndefinedMetricError("unexplained variance of constant y");
  return (ss / static_cast<double>(n - kNumBeta)) / var;
}

}  // namespace aberro
