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

#include "aberro/zernike.h"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace aberro {
namespace {

double Factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double RadialPolynomial(int n, int m_abs, double rho) {
  double sum = 0.0;
  for (int k = 0; k <= (n - m_abs) / 2; ++k) {
    const double c = Factorial(n - k) /
                     (Factorial(k) * Factorial((n + m_abs) / 2 - k) *
                      Factorial((n - m_abs) / 2 - k));
    sum += ((k % 2) ? -c : c) * std::pow(rho, n - 2 * k);
  }
  return sum;
}

}  // namespace

ZernikeOrder OsaToOrder(int osa_index) {
  if (osa_index < 0) {
    throw std::invalid_argument("Zernike OSA index must be non-negative, got " +
                                std::to_string(osa_index));
  }
  int n = 0;
  while ((n + 1) * (n + 2) / 2 <= osa_index) ++n;
  return {n, 2 * osa_index - n * (n + 2)};
}

double ZernikeEval(int osa_index, double rho, double phi) {
  const ZernikeOrder order = OsaToOrder(osa_index);
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("Zernike radius must lie in [0, 1]");
  }
  const int m_abs = std::abs(order.m);
  const double norm = (order.m == 0) ? std::sqrt(order.n + 1.0)
                                     : std::sqrt(2.0 * (order.n + 1.0));
  const double radial = RadialPolynomial(order.n, m_abs, rho);
  double angular = 1.0;
  if (order.m > 0) angular = std::cos(m_abs * phi);
  if (order.m < 0) angular = std::sin(m_abs * phi);
  return norm * radial * angular;
}

ZernikeVector::ZernikeVector(std::vector<Term> terms) : terms_(std::move(terms)) {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].osa < 0) {
      throw std::invalid_argument("negative OSA index in ZernikeVector");
    }
    if (i > 0 && terms_[i].osa <= terms_[i - 1].osa) {
      throw std::invalid_argument(
          "ZernikeVector indices must be strictly increasing");
    }
    if (!std::isfinite(terms_[i].alpha)) {
      throw std::invalid_argument("non-finite Zernike coefficient");
    }
  }
}

ZernikeVector ZernikeVector::SecondOrder(double a3, double a4, double a5) {
  return ZernikeVector({{3, a3}, {4, a4}, {5, a5}});
}

double ZernikeVector::alpha(int osa) const {
  for (const Term& t : terms_) {
    if (t.osa == osa) return t.alpha;
  }
  return 0.0;
}

std::vector<double> ZernikeVector::SecondOrderArray() const {
  return {alpha(3), alpha(4), alpha(5)};
}

bool ZernikeVector::IsZero() const {
  for (const Term& t : terms_) {
    if (t.alpha != 0.0) return false;
  }
  return true;
}

ZernikeVector ZernikeVector::operator+(const ZernikeVector& other) const {
  std::vector<Term> merged;
  std::size_t i = 0, j = 0;
  while (i < terms_.size() || j < other.terms_.size()) {
    if (j == other.terms_.size() ||
        (i < terms_.size() && terms_[i].osa < other.terms_[j].osa)) {
      merged.push_back(terms_[i++]);
    } else if (i == terms_.size() || other.terms_[j].osa < terms_[i].osa) {
      merged.push_back(other.terms_[j++]);
    } else {
      merged.push_back({terms_[i].osa, terms_[i].alpha + other.terms_[j].alpha});
      ++i;
      ++j;
    }
  }
  return ZernikeVector(std::move(merged));
}

std::pair<double, double> PupilPolar(int n, int row, int col) {
  const double x = 2.0 * (col + 0.5) / n - 1.0;
  const double y = 1.0 - 2.0 * (row + 0.5) / n;
  return {std::hypot(x, y), std::atan2(y, x)};
}

WavefrontMap MakeWavefrontMap(const ZernikeVector& alpha, int n) {
  if (n < 16) {
    throw std::invalid_argument("wavefront grid must be at least 16 pixels");
  }
  WavefrontMap w;
  w.n = n;
  w.grid.assign(static_cast<std::size_t>(n) * n, 0.0);
  w.mask.assign(static_cast<std::size_t>(n) * n, 0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const auto [rho, phi] = PupilPolar(n, r, c);
      if (rho > 1.0) continue;
      const std::size_t idx = static_cast<std::size_t>(r) * n + c;
      w.mask[idx] = 1;
      double value = 0.0;
      for (const auto& term : alpha.terms()) {
        if (term.alpha != 0.0) value += term.alpha * ZernikeEval(term.osa, rho, phi);
      }
      w.grid[idx] = value;
    }
  }
  return w;
}

double ProjectOntoZernike(const WavefrontMap& w, int osa_index) {
  double sum = 0.0;
  std::size_t count = 0;
  for (int r = 0; r < w.n; ++r) {
    for (int c = 0; c < w.n; ++c) {
      if (!w.inside(r, c)) continue;
      const auto [rho, phi] = PupilPolar(w.n, r, c);
      sum += w.at(r, c) * ZernikeEval(osa_index, rho, phi);
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

ZernikeVector SampleZernike(uint64_t seed, double half_range) {
  if (!(half_range >= 0.0)) {
    throw std::invalid_argument("aberration half range must be non-negative");
  }
  if (half_range == 0.0) return ZernikeVector::SecondOrder(0.0, 0.0, 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-half_range, half_range);
  const double a3 = uniform(rng);
  const double a4 = uniform(rng);
  const double a5 = uniform(rng);
  return ZernikeVector::SecondOrder(a3, a4, a5);
}

ZernikeVector ParseZernikeFlag(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad --zernike value '" + item + "'");
    }
    if (used != item.size() && item.find_first_not_of(" \t", used) != std::string::npos) {
      throw std::invalid_argument("bad --zernike value '" + item + "'");
    }
    values.push_back(v);
  }
  if (values.size() != 3) {
    throw std::invalid_argument("--zernike expects three values a3,a4,a5");
  }
  return ZernikeVector::SecondOrder(values[0], values[1], values[2]);
}

}  // namespace aberro
