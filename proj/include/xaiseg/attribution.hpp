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

// Integrated Gradients along the straight path from a baseline to the
// input, SmoothGrad-style noise averaging, and reduction of per-channel
// attributions to a relevance map.

#ifndef XAISEG_ATTRIBUTION_HPP_
#define XAISEG_ATTRIBUTION_HPP_

#include <cstdint>
#include <optional>

#include "xaiseg/classifier.hpp"
#include "xaiseg/image.hpp"

namespace xaiseg {

// A scalar function of an image together with its exact gradient.
class DifferentiableModel {
 public:
  virtual ~DifferentiableModel() = default;
  virtual double value(const ImageTensor& image) const = 0;
  virtual ImageTensor gradient(const ImageTensor& image) const = 0;
};

// One logit of the reference classifier.
class ClassLogit final : public DifferentiableModel {
 public:
  ClassLogit(const ClassifierParams& params, int target_class);

  double value(const ImageTensor& image) const override;
  ImageTensor gradient(const ImageTensor& image) const override;

 private:
  const ClassifierParams& params_;
  int target_class_;
};

// Quadrature over alpha_k = k / steps.
//   kLeftRiemann: k = 0 .. steps-1, equal weights.
//   kTrapezoid:   k = 0 .. steps, end points weighted 1/2.
enum class IgRule { kLeftRiemann, kTrapezoid };

struct IgConfig {
  int steps = 50;
  IgRule rule = IgRule::kTrapezoid;
  // Absent means the all-zero image.
  std::optional<ImageTensor> baseline;
  int nt_samples = 5;
  // Absent means 10% of the input's value range.
  std::optional<double> nt_sigma;
  std::uint64_t seed = 0;

  // Throws ConfigError on bad counts, ShapeError on a baseline mismatch.
  void validate(const ImageTensor& image) const;
  ImageTensor resolved_baseline(const ImageTensor& image) const;
  double resolved_sigma(const ImageTensor& image) const;
};

//   attr_i = (x_i - x'_i) * (1 / steps) * sum_k w_k dF(x' + alpha_k (x - x')) / dx_i
// with the weights w_k of `cfg.rule`. Both rules are exact on affine models.
ImageTensor integrated_gradients(const DifferentiableModel& model,
                                 const ImageTensor& image,
                                 const IgConfig& cfg);
ImageTensor integrated_gradients(const ClassifierParams& params,
                                 const ImageTensor& image, int target_class,
                                 const IgConfig& cfg);

// Mean of integrated_gradients over `nt_samples` copies of the input with
// i.i.d. Gaussian noise added. Sample s draws its noise from a substream
// derived from (seed, s), so the result does not depend on evaluation order.
ImageTensor noise_tunnel(const DifferentiableModel& model,
                         const ImageTensor& image, const IgConfig& cfg);
ImageTensor noise_tunnel(const ClassifierParams& params,
                         const ImageTensor& image, int target_class,
                         const IgConfig& cfg);

// Sum over channels, absolute value, min-max normalization.
RelevanceMap to_relevance_map(const ImageTensor& attribution);

}  // namespace xaiseg

#endif  // XAISEG_ATTRIBUTION_HPP_
