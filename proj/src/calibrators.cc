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

#include "aberro/calibrators.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "aberro/errors.h"

namespace aberro {
namespace {

constexpr double kMinTemperature = 0.05;
constexpr double kMaxTemperature = 20.0;
constexpr double kGoldenTolerance = 1e-4;
constexpr int kInstanceGridPoints = 64;

// Minimizes `f` over [lo, hi] by golden-section search; returns the abscissa.
double GoldenSection(const std::function<double(double)>& f, double lo, double hi,
                     double tolerance) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tolerance) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

void CheckSamples(std::span<const CalibrationSample> samples, const char* what) {
  if (samples.empty()) throw std::invalid_argument(std::string(what) + " set is empty");
  for (const CalibrationSample& s : samples) {
    if (!s.logits || !s.labels) throw std::invalid_argument("calibration sample without data");
  }
}

struct Adam {
  std::vector<double> m, v;
  int step = 0;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void Update(std::span<double> params, std::span<const double> grad, double lr,
              const TrainConfig& cfg) {
    ++step;
    const double c1 = 1.0 - std::pow(cfg.beta1, step);
    const double c2 = 1.0 - std::pow(cfg.beta2, step);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
    }
  }
};

// Applies a class permutation and one of the 8 symmetries of the square to an
// HWC input of side `res`.
void AugmentInput(std::span<const double> in, int res, int channels, std::mt19937_64& rng,
                  std::vector<double>& out) {
  std::vector<int> perm(channels);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const int sym = std::uniform_int_distribution<int>(0, 7)(rng);
  out.resize(in.size());
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) {
      int sr = (sym & 1) ? res - 1 - r : r;
      int sc = (sym & 2) ? res - 1 - c : c;
      if (sym & 4) std::swap(sr, sc);
      const double* src = in.data() + (static_cast<std::size_t>(sr) * res + sc) * channels;
      double* dst = out.data() + (static_cast<std::size_t>(r) * res + c) * channels;
      for (int k = 0; k < channels; ++k) dst[perm[k]] = src[k];
    }
  }
}

double SampleStd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (v.size() - 1));
}

}  // namespace

std::string_view VariantName(CalibratorVariant v) {
  switch (v) {
    case CalibratorVariant::kTs:
      return "ts";
    case CalibratorVariant::kPts:
      return "pts";
    case CalibratorVariant::kPipts:
      return "pipts";
  }
  return "ts";
}

CalibratorVariant ParseVariant(std::string_view name) {
  if (name == "ts") return CalibratorVariant::kTs;
  if (name == "pts") return CalibratorVariant::kPts;
  if (name == "pipts") return CalibratorVariant::kPipts;
  throw std::invalid_argument("unknown calibrator variant '" + std::string(name) + "'");
}

std::vector<double> ApplyTemperature(const LogitTensor& logits, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("temperature must be positive");
  std::vector<double> probs(logits.data.size());
  for (std::size_t i = 0; i < logits.pixels(); ++i) {
    SoftmaxTempered(logits.pixel(i), t,
                    std::span<double>(probs.data() + i * logits.c, logits.c));
  }
  return probs;
}

double MeanNll(std::span<const CalibrationSample> samples, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("temperature must be positive");
  double total = 0.0;
  int64_t count = 0;
  for (const CalibrationSample& s : samples) {
    const LogitTensor& logits = *s.logits;
    const LabelMap& labels = *s.labels;
    for (std::size_t i = 0; i < logits.pixels(); ++i) {
      if (labels.ignored(i)) continue;
      const auto px = logits.pixel(i);
      double peak = -INFINITY;
      for (float v : px) peak = std::max(peak, static_cast<double>(v));
      double sum = 0.0;
      for (float v : px) sum += std::exp((v - peak) / t);
      total += std::log(sum) - (px[labels.data[i]] - peak) / t;
      ++count;
    }
  }
  if (count == 0) throw UndefinedMetricError("NLL with no labeled pixels");
  return total / static_cast<double>(count);
}

TsFit FitTemperatureScaling(std::span<const CalibrationSample> validation) {
  CheckSamples(validation, "validation");
  auto nll_of_log_t = [&](double log_t) { return MeanNll(validation, std::exp(log_t)); };
  const double best = GoldenSection(nll_of_log_t, std::log(kMinTemperature),
                                    std::log(kMaxTemperature), kGoldenTolerance);
  TsFit fit{std::exp(best), nll_of_log_t(best)};
  return fit;
}

InstanceTemperature OptimalInstanceTemperature(const LogitTensor& logits,
                                               const LabelMap& labels, int n_bins) {
  std::vector<int64_t> present(logits.c, 0);
  for (std::size_t i = 0; i < labels.pixels(); ++i) {
    if (!labels.ignored(i) && labels.data[i] >= 0 && labels.data[i] < logits.c) {
      ++present[labels.data[i]];
    }
  }
  const int n_present =
      static_cast<int>(std::count_if(present.begin(), present.end(), [](int64_t c) { return c > 0; }));
  if (n_present == 0) throw InsufficientDataError("instance has no labeled pixels");

  const double lo = std::log(kMinTemperature);
  const double hi = std::log(kMaxTemperature);
  const double step = (hi - lo) / (kInstanceGridPoints - 1);
  auto mece_at = [&](double log_t) { return Mece(logits, labels, std::exp(log_t), n_bins); };
  int best = 0;
  double best_value = INFINITY;
  for (int k = 0; k < kInstanceGridPoints; ++k) {
    const double v = mece_at(lo + k * step);
    if (v < best_value) {
      best_value = v;
      best = k;
    }
  }
  InstanceTemperature result{std::exp(lo + best * step), best_value, n_present == 1};
  if (!result.degenerate) {
    const double a = lo + std::max(best - 1, 0) * step;
    const double b = lo + std::min(best + 1, kInstanceGridPoints - 1) * step;
    const double refined = GoldenSection(mece_at, a, b, kGoldenTolerance);
    const double v = mece_at(refined);
    if (v < result.mece) result = {std::exp(refined), v, false};
  }
  const double at_one = mece_at(0.0);
  if (at_one < result.mece) {
    result.temperature = 1.0;
    result.mece = at_one;
  }
  return result;
}

std::vector<double> CalibratorModel::PrepareInput(const LogitTensor& logits) const {
  std::vector<double> x = DownsampleLogits(logits, net.config().input_res);
  for (double& v : x) v = (v - input_mean) / input_scale;
  return x;
}

std::array<double, 3> CalibratorModel::PreparePrior(std::span<const double> alpha) const {
  if (alpha.size() != 3) throw std::invalid_argument("prior must hold (alpha_3, alpha_4, alpha_5)");
  std::array<double, 3> out;
  for (int k = 0; k < 3; ++k) out[k] = (alpha[k] - prior_mean[k]) / prior_scale[k];
  return out;
}

double CalibratorModel::PredictTemperature(const LogitTensor& logits,
                                           std::span<const double> alpha) const {
  if (variant == CalibratorVariant::kTs) return temperature;
  const std::vector<double> x = PrepareInput(logits);
  if (variant == CalibratorVariant::kPts) return net.Forward(x, {});
  const std::array<double, 3> prior = PreparePrior(alpha);
  return net.Forward(x, prior);
}

double PtsForward(const CalibratorModel& model, const LogitTensor& logits) {
  if (model.variant != CalibratorVariant::kPts) {
    throw std::invalid_argument("PtsForward needs a PTS model");
  }
  return model.PredictTemperature(logits);
}

double PiptsForward(const CalibratorModel& model, const LogitTensor& logits,
                    const ZernikeVector& alpha) {
  if (model.variant != CalibratorVariant::kPipts) {
    throw std::invalid_argument("PiptsForward needs a PIPTS model");
  }
  const std::vector<double> a = alpha.SecondOrderArray();
  return model.PredictTemperature(logits, a);
}

TrainResult TrainCalibrator(CalibratorVariant variant,
                            std::span<const CalibrationSample> train,
                            const TrainConfig& cfg, uint64_t seed) {
  return TrainCalibrator(variant, train, {}, cfg, seed);
}

TrainResult TrainCalibrator(CalibratorVariant variant,
                            std::span<const CalibrationSample> train_only,
                            std::span<const CalibrationSample> validation,
                            const TrainConfig& cfg, uint64_t seed) {
  CheckSamples(train_only, "training");
  TrainResult result;
  CalibratorModel& model = result.model;
  model.variant = variant;
  model.seed = seed;
  if (variant == CalibratorVariant::kTs) {
    model.temperature =
        FitTemperatureScaling(validation.empty() ? train_only : validation).temperature;
    return result;
  }
  // Validation instances are appended after the training ones.
  std::vector<CalibrationSample> pool(train_only.begin(), train_only.end());
  pool.insert(pool.end(), validation.begin(), validation.end());
  const std::span<const CalibrationSample> train = pool;
  cfg.loss.Validate();
  if (cfg.batch_size < 1 || cfg.max_epochs < 1) {
    throw std::invalid_argument("batch size and epoch count must be positive");
  }

  TemperatureNetConfig net_cfg = cfg.net;
  net_cfg.in_channels = train[0].logits->c;
  net_cfg.use_prior = variant == CalibratorVariant::kPipts;
  model.net = TemperatureNet(net_cfg);
  model.net.InitRandom(seed);

  // Corpus standardization of the downsampled logits.
  std::vector<std::vector<double>> inputs;
  inputs.reserve(train.size());
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (const CalibrationSample& s : train) {
    inputs.push_back(DownsampleLogits(*s.logits, net_cfg.input_res));
    if (inputs.size() > train_only.size()) continue;
    for (double v : inputs.back()) {
      sum += v;
      sq += v * v;
    }
    count += inputs.back().size();
  }
  model.input_mean = sum / count;
  const double var = sq / count - model.input_mean * model.input_mean;
  model.input_scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  for (auto& x : inputs) {
    for (double& v : x) v = (v - model.input_mean) / model.input_scale;
  }

  std::vector<std::array<double, 3>> priors(train.size());
  if (variant == CalibratorVariant::kPipts) {
    for (int k = 0; k < 3; ++k) {
      double m = 0.0, v = 0.0;
      for (const CalibrationSample& s : train_only) m += s.alpha[k];
      m /= static_cast<double>(train_only.size());
      for (const CalibrationSample& s : train_only) v += (s.alpha[k] - m) * (s.alpha[k] - m);
      v /= static_cast<double>(train_only.size());
      model.prior_mean[k] = m;
      model.prior_scale[k] = v > 1e-24 ? std::sqrt(v) : 1.0;
    }
    for (std::size_t i = 0; i < train.size(); ++i) priors[i] = model.PreparePrior(train[i].alpha);
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = 0;
  if (!validation.empty()) {
    order.resize(train_only.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = train_only.size(); i < train.size(); ++i) order.push_back(i);
    n_val = validation.size();
  } else if (train.size() >= 5) {
    n_val = std::max<std::size_t>(1, static_cast<std::size_t>(
                                          std::lround(cfg.validation_fraction * train.size())));
  }
  std::vector<std::size_t> val_idx(order.end() - n_val, order.end());
  std::vector<std::size_t> train_idx(order.begin(), order.end() - n_val);
  if (val_idx.empty()) val_idx = train_idx;

  auto prior_of = [&](std::size_t i) -> std::span<const double> {
    if (variant != CalibratorVariant::kPipts) return {};
    return priors[i];
  };
  auto instance_loss = [&](std::size_t i) {
    const double t = model.net.Forward(inputs[i], prior_of(i));
    return PiptsLoss(SoftMeceValue(*train[i].logits, *train[i].labels, t, cfg.loss), t, cfg.loss);
  };
  auto validation_loss = [&] {
    double total = 0.0;
    for (std::size_t i : val_idx) total += instance_loss(i);
    return total / static_cast<double>(val_idx.size());
  };

  Adam adam(model.net.num_params());
  std::vector<double> grad(model.net.num_params());
  std::vector<double> best_params(model.net.params().begin(), model.net.params().end());
  double best_val = validation_loss();
  double lr = cfg.learning_rate;
  int stale = 0;
  TemperatureNet::Cache cache;
  std::vector<double> augmented;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(train_idx.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = train_idx[b];
        std::span<const double> x = inputs[i];
        if (cfg.augment) {
          AugmentInput(inputs[i], net_cfg.input_res, net_cfg.in_channels, rng, augmented);
          x = augmented;
        }
        const double t = model.net.Forward(x, prior_of(i), &cache);
        const ValueAndSlope ece = SoftMece(*train[i].logits, *train[i].labels, t, cfg.loss);
        const double loss = PiptsLoss(ece.value, t, cfg.loss);
        if (!std::isfinite(loss) || !std::isfinite(ece.slope)) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                              " (T = " + std::to_string(t) + ")");
        }
        epoch_loss += loss;
        model.net.Backward(cache, PiptsLossSlope(ece.slope, ece.value, t, cfg.loss) * inv_batch,
                           grad);
      }
      adam.Update(model.net.params(), grad, lr, cfg);
    }
    result.history.train_loss.push_back(epoch_loss / static_cast<double>(train_idx.size()));
    const double val = validation_loss();
    if (!std::isfinite(val)) throw TrainingError("non-finite validation loss");
    result.history.val_loss.push_back(val);
    if (val < best_val) {
      best_val = val;
      stale = 0;
      result.history.best_epoch = epoch;
      std::copy(model.net.params().begin(), model.net.params().end(), best_params.begin());
    } else {
      ++stale;
      if (stale >= cfg.early_stop_epochs) break;
      if (stale % cfg.plateau_epochs == 0) lr *= 0.1;
    }
  }
  std::copy(best_params.begin(), best_params.end(), model.net.params().begin());
  return result;
}

double EvaluateMece(const CalibratorModel& model, std::span<const CalibrationSample> eval,
                    int n_bins) {
  CheckSamples(eval, "evaluation");
  double total = 0.0;
  for (const CalibrationSample& s : eval) {
    const double t = model.PredictTemperature(*s.logits, s.alpha);
    total += Mece(*s.logits, *s.labels, t, n_bins);
  }
  return total / static_cast<double>(eval.size());
}

EnsembleReport EvaluateEnsembleWithSeeds(CalibratorVariant variant,
                                         std::span<const uint64_t> seeds,
                                         std::span<const CalibrationSample> train,
                                         std::span<const CalibrationSample> eval,
                                         const TrainConfig& cfg, int threads) {
  if (seeds.size() < 2) throw std::invalid_argument("an ensemble needs at least two members");
  std::vector<std::optional<double>> scores(seeds.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t m;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= seeds.size()) return;
        m = next++;
      }
      try {
        const TrainResult trained = TrainCalibrator(variant, train, cfg, seeds[m]);
        scores[m] = EvaluateMece(trained.model, eval, cfg.loss.n_bins);
      } catch (const TrainingError&) {
        scores[m].reset();
      }
    }
  };
  const int n_threads = std::clamp(threads, 1, static_cast<int>(seeds.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  EnsembleReport report;
  report.variant = variant;
  for (std::size_t m = 0; m < seeds.size(); ++m) {
    if (scores[m]) {
      report.member_seeds.push_back(seeds[m]);
      report.member_mece.push_back(*scores[m]);
    } else {
      report.failed_seeds.push_back(seeds[m]);
    }
  }
  if (report.member_mece.empty()) throw TrainingError("every ensemble member failed to train");
  const double n = static_cast<double>(report.member_mece.size());
  report.mean = std::accumulate(report.member_mece.begin(), report.member_mece.end(), 0.0) / n;
  report.std_of_mean = SampleStd(report.member_mece) / std::sqrt(n);
  return report;
}

EnsembleReport EvaluateEnsemble(CalibratorVariant variant, int n_members,
                                std::span<const CalibrationSample> train,
                                std::span<const CalibrationSample> eval,
                                const TrainConfig& cfg, uint64_t base_seed, int threads) {
  if (n_members < 2) throw std::invalid_argument("an ensemble needs at least two members");
  std::vector<uint64_t> seeds(n_members);
  for (int m = 0; m < n_members; ++m) seeds[m] = base_seed + static_cast<uint64_t>(m);
  return EvaluateEnsembleWithSeeds(variant, seeds, train, eval, cfg, threads);
}

EnsembleComparison CompareEnsembles(EnsembleReport& a, EnsembleReport& b, double k) {
  EnsembleComparison c;
  c.difference = a.mean - b.mean;
  c.pooled_std_of_mean = std::hypot(a.std_of_mean, b.std_of_mean);
  c.threshold = k * c.pooled_std_of_mean;
  c.significant = std::abs(c.difference) > c.threshold;
  a.k_factor = b.k_factor = k;
  a.significant = b.significant = c.significant;
  return c;
}

GaussianFit FitGaussianNll(std::span<const double> samples) {
  if (samples.size() < 2) throw InsufficientDataError("Gaussian fit needs two samples");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  GaussianFit fit;
  if (ss / n < 1e-24) {
    fit.mu = mean;
    return fit;
  }
  auto nll = [&](double mu, double sigma) {
    double q = 0.0;
    for (double x : samples) q += (x - mu) * (x - mu);
    return n * std::log(sigma) + q / (2.0 * sigma * sigma);
  };
  // Newton on (mu, sigma) from a robust start; steps are halved until the NLL
  // decreases and sigma stays positive.
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double mu = sorted[sorted.size() / 2];
  double sigma = std::sqrt(ss / n) * 1.5;
  for (int iter = 0; iter < 200; ++iter) {
    double s1 = 0.0, s2 = 0.0;
    for (double x : samples) {
      s1 += x - mu;
      s2 += (x - mu) * (x - mu);
    }
    const double s = sigma;
    const double g_mu = -s1 / (s * s);
    const double g_sigma = n / s - s2 / (s * s * s);
    const double h_mumu = n / (s * s);
    const double h_musig = 2.0 * s1 / (s * s * s);
    const double h_sigsig = -n / (s * s) + 3.0 * s2 / (s * s * s * s);
    const double det = h_mumu * h_sigsig - h_musig * h_musig;
    double d_mu, d_sigma;
    if (det > 0.0 && h_mumu > 0.0) {
      d_mu = -(h_sigsig * g_mu - h_musig * g_sigma) / det;
      d_sigma = -(-h_musig * g_mu + h_mumu * g_sigma) / det;
    } else {
      d_mu = -g_mu / h_mumu;
      d_sigma = -g_sigma * s * s / n;
    }
    const double current = nll(mu, sigma);
    double scale = 1.0;
    while (scale > 1e-12 &&
           (sigma + scale * d_sigma <= 0.0 || nll(mu + scale * d_mu, sigma + scale * d_sigma) > current)) {
      scale *= 0.5;
    }
    mu += scale * d_mu;
    sigma += scale * d_sigma;
    if (std::abs(scale * d_mu) < 1e-15 * (1.0 + std::abs(mu)) &&
        std::abs(scale * d_sigma) < 1e-15 * sigma) {
      break;
    }
  }
  double q = 0.0;
  for (double x : samples) q += (x - mu) * (x - mu);
  const double curvature_mu = n / (sigma * sigma);
  const double curvature_sigma = -n / (sigma * sigma) + 3.0 * q / std::pow(sigma, 4);
  fit.mu = mu;
  fit.sigma = sigma;
  fit.mu_uncertainty = 1.0 / std::sqrt(curvature_mu);
  fit.sigma_uncertainty = curvature_sigma > 0.0 ? 1.0 / std::sqrt(curvature_sigma) : 0.0;
  return fit;
}

TemperatureDeviation SummarizeTemperatureDeviation(std::vector<double> predicted,
                                                   std::vector<double> optimal,
                                                   int histogram_bins) {
  if (predicted.size() != optimal.size()) {
    throw std::invalid_argument("predicted and optimal temperature counts differ");
  }
  if (predicted.size() < 10) {
    throw InsufficientDataError("temperature deviation analysis needs >= 10 instances");
  }
  if (histogram_bins < 1) throw std::invalid_argument("histogram needs at least one bin");
  TemperatureDeviation out;
  out.deltas.resize(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) out.deltas[i] = predicted[i] - optimal[i];
  out.predicted = std::move(predicted);
  out.optimal = std::move(optimal);
  out.fit = FitGaussianNll(out.deltas);

  const auto [lo_it, hi_it] = std::minmax_element(out.deltas.begin(), out.deltas.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  out.bin_edges.resize(histogram_bins + 1);
  for (int k = 0; k <= histogram_bins; ++k) out.bin_edges[k] = lo + (hi - lo) * k / histogram_bins;
  out.counts.assign(histogram_bins, 0);
  for (double d : out.deltas) {
    int k = static_cast<int>((d - lo) / (hi - lo) * histogram_bins);
    ++out.counts[std::clamp(k, 0, histogram_bins - 1)];
  }
  return out;
}

TemperatureDeviation TemperatureDeviationHistogram(const CalibratorModel& model,
                                                   std::span<const CalibrationSample> eval,
                                                   int histogram_bins, int n_bins) {
  if (eval.size() < 10) {
    throw InsufficientDataError("temperature deviation analysis needs >= 10 instances");
  }
  CheckSamples(eval, "evaluation");
  std::vector<double> predicted, optimal;
  for (const CalibrationSample& s : eval) {
    predicted.push_back(model.PredictTemperature(*s.logits, s.alpha));
    optimal.push_back(OptimalInstanceTemperature(*s.logits, *s.labels, n_bins).temperature);
  }
  return SummarizeTemperatureDeviation(std::move(predicted), std::move(optimal), histogram_bins);
}

}  // namespace aberro
