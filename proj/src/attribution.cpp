// Copyright 2026 The xaiseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xaiseg/attribution.hpp"

#include <algorithm>
#include <cmath>

#include "xaiseg/error.hpp"
#include "xaiseg/rng.hpp"

namespace xaiseg {

ClassLogit::ClassLogit(const ClassifierParams& params, int target_class)
    : params_(params), target_class_(target_class) {
  if (target_class < 0 || target_class >= params.num_classes) {
    throw DataError("target class " + std::to_string(target_class) +
                    " out of range for " + std::to_string(params.num_classes) +
                    " classes");
  }
}

double ClassLogit::value(const ImageTensor& image) const {
  return forward(params_, image)[target_class_];
}

ImageTensor ClassLogit::gradient(const ImageTensor& image) const {
  return input_gradient(params_, image, target_class_);
}

void IgConfig::validate(const ImageTensor& image) const {
  if (steps < 1) throw ConfigError("IG steps must be at least 1");
  if (nt_samples < 1) throw ConfigError("noise tunnel needs at least 1 sample");
  if (nt_sigma && !(*nt_sigma >= 0.0 && std::isfinite(*nt_sigma))) {
    throw ConfigError("noise tunnel sigma must be finite and non-negative");
  }
  if (baseline && !baseline->same_layout(image)) {
    throw ShapeError("IG baseline shape " + to_string(baseline->shape()) + "x" +
                     std::to_string(baseline->channels()) +
                     " differs from input " + to_string(image.shape()) + "x" +
                     std::to_string(image.channels()));
  }
}

ImageTensor IgConfig::resolved_baseline(const ImageTensor& image) const {
  if (baseline) return *baseline;
  return ImageTensor(image.height(), image.width(), image.channels());
}

double IgConfig::resolved_sigma(const ImageTensor& image) const {
  if (nt_sigma) return *nt_sigma;
  const auto [lo, hi] = std::minmax_element(image.data().begin(), image.data().end());
  return 0.1 * (*hi - *lo);
}

ImageTensor integrated_gradients(const DifferentiableModel& model,
                                 const ImageTensor& image,
                                 const IgConfig& cfg) {
  cfg.validate(image);
  const ImageTensor base = cfg.resolved_baseline(image);
  const auto x = image.data();
  const auto x0 = base.data();

  const bool trapezoid = cfg.rule == IgRule::kTrapezoid;
  const int last = trapezoid ? cfg.steps : cfg.steps - 1;
  std::vector<double> grad_sum(image.size(), 0.0);
  ImageTensor point(image.height(), image.width(), image.channels());
  for (int k = 0; k <= last; ++k) {
    const double alpha = static_cast<double>(k) / cfg.steps;
    const double weight = trapezoid && (k == 0 || k == last) ? 0.5 : 1.0;
    auto p = point.data();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = x0[i] + alpha * (x[i] - x0[i]);
    const ImageTensor g = model.gradient(point);
    if (!g.same_layout(image)) {
      throw InvariantError("model gradient has the wrong shape");
    }
    const auto gd = g.data();
    for (std::size_t i = 0; i < grad_sum.size(); ++i) grad_sum[i] += weight * gd[i];
  }
  std::vector<double> attr(image.size());
  for (std::size_t i = 0; i < attr.size(); ++i) {
    attr[i] = (x[i] - x0[i]) * (grad_sum[i] / cfg.steps);
  }
  return ImageTensor(image.height(), image.width(), image.channels(),
                     std::move(attr));
}

ImageTensor integrated_gradients(const ClassifierParams& params,
                                 const ImageTensor& image, int target_class,
                                 const IgConfig& cfg) {
  return integrated_gradients(ClassLogit(params, target_class), image, cfg);
}

ImageTensor noise_tunnel(const DifferentiableModel& model,
                         const ImageTensor& image, const IgConfig& cfg) {
  cfg.validate(image);
  const double sigma = cfg.resolved_sigma(image);
  // Zero noise: every sample is the same deterministic attribution.
  if (sigma == 0.0) return integrated_gradients(model, image, cfg);

  // Baseline is resolved against the clean input and shared by all samples.
  IgConfig inner = cfg;
  inner.baseline = cfg.resolved_baseline(image);

  std::vector<double> sum(image.size(), 0.0);
  for (int s = 0; s < cfg.nt_samples; ++s) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    std::vector<double> noisy(image.data().begin(), image.data().end());
    for (double& v : noisy) v += sigma * rng.normal();
    const ImageTensor sample(image.height(), image.width(), image.channels(),
                             std::move(noisy));
    const ImageTensor attr = integrated_gradients(model, sample, inner);
    const auto a = attr.data();
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += a[i];
  }
  for (double& v : sum) v /= cfg.nt_samples;
  return ImageTensor(image.height(), image.width(), image.channels(),
                     std::move(sum));
}

ImageTensor noise_tunnel(const ClassifierParams& params,
                         const ImageTensor& image, int target_class,
                         const IgConfig& cfg) {
  return noise_tunnel(ClassLogit(params, target_class), image, cfg);
}

RelevanceMap to_relevance_map(const ImageTensor& attribution) {
  if (!attribution.all_finite()) {
    throw DataError("attribution contains non-finite values");
  }
  const int c = attribution.channels();
  const auto a = attribution.data();
  std::vector<double> magnitude(attribution.shape().pixels());
  for (std::size_t p = 0; p < magnitude.size(); ++p) {
    double s = 0.0;
    for (int k = 0; k < c; ++k) s += a[p * c + k];
    magnitude[p] = std::abs(s);
  }
  return RelevanceMap::from_unnormalized(attribution.height(),
                                         attribution.width(),
                                         std::move(magnitude));
}

}  // namespace xaiseg
