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

#include "fft.h"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace aberro {
namespace internal {
namespace {

// The FFTW planner is not thread-safe; plan execution on new arrays is.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan Get(int rows, int cols, bool inverse) {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    const auto key = std::make_tuple(rows, cols, inverse);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(static_cast<std::size_t>(rows) * cols);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(rows, cols, buf, buf,
                                      inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::map<std::tuple<int, int, bool>, fftw_plan> plans_;
};

PlanCache& Cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

void Fft2d(std::vector<std::complex<double>>& data, int rows, int cols,
           bool inverse) {
  fftw_plan plan = Cache().Get(rows, cols, inverse);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace internal
}  // namespace aberro
