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

// Two-label fully connected CRF with Potts compatibility and the usual
// appearance + smoothness Gaussian kernels, solved by exact (dense) mean
// field inference.

#ifndef XAISEG_DENSECRF_HPP_
#define XAISEG_DENSECRF_HPP_

#include <functional>
#include <vector>

#include "xaiseg/image.hpp"

namespace xaiseg {

struct CrfConfig {
  int iterations = 5;
  double w_appearance = 4.0;
  double w_smooth = 1.0;
  double sigma_spatial_app = 8.0;     // pixels
  double sigma_intensity = 0.15;      // image value units
  double sigma_spatial_smooth = 2.0;  // pixels
  double unary_clip = 1e-3;
  // Exact pairwise cost is O(N^2); larger images are downsampled.
  std::size_t max_pixels = 4096;

  void validate() const;
};

// Negative log-probabilities per pixel for background and foreground.
struct Unary {
  int height = 0;
  int width = 0;
  std::vector<double> background;
  std::vector<double> foreground;
};

// p_fg = clamp(0.5 mask + 0.5 relevance, eps, 1 - eps).
Unary unary_from_mask(const BinaryMask& mask, const RelevanceMap& map,
                      double eps);

struct CrfMarginals {
  int height = 0;
  int width = 0;
  std::vector<double> foreground;  // Q_i(fg)
  std::vector<double> background;  // Q_i(bg) = 1 - Q_i(fg)
};

// Pairwise kernel k(i, j) between two pixels of `image`.
double crf_kernel(const ImageTensor& image, const CrfConfig& cfg, int i, int j);

// Runs `cfg.iterations` parallel mean-field updates starting from
// Q = softmax(-unary). `observer`, if set, sees Q after initialization and
// after every iteration (iteration index 0 .. iterations).
CrfMarginals mean_field(
    const ImageTensor& image, const Unary& unary, const CrfConfig& cfg,
    const std::function<void(int, const CrfMarginals&)>& observer = {});

// Per-pixel argmax of the marginals; ties resolve to background.
BinaryMask marginals_to_mask(const CrfMarginals& q);

// unary_from_mask -> mean_field -> argmax, with downsampling above the
// pixel budget and nearest-neighbour upsampling of the result.
BinaryMask crf_refine(const ImageTensor& image, const BinaryMask& mask,
                      const RelevanceMap& map, const CrfConfig& cfg);

}  // namespace xaiseg

#endif  // XAISEG_DENSECRF_HPP_
