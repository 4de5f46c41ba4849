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

#include "xaiseg/densecrf.hpp"

#include <algorithm>
#include <cmath>

#include "xaiseg/error.hpp"

namespace xaiseg {
namespace {

void softmax_pair(double energy_bg, double energy_fg, double& q_bg,
                  double& q_fg) {
  const double top = std::max(-energy_bg, -energy_fg);
  const double a = std::exp(-energy_bg - top);
  const double b = std::exp(-energy_fg - top);
  q_bg = a / (a + b);
  q_fg = b / (a + b);
}

// Dense symmetric kernel matrix with a zero diagonal.
std::vector<double> kernel_matrix(const ImageTensor& image,
                                  const CrfConfig& cfg) {
  const std::size_t n = image.shape().pixels();
  std::vector<double> k(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = crf_kernel(image, cfg, static_cast<int>(i), static_cast<int>(j));
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
  }
  return k;
}

}  // namespace

void CrfConfig::validate() const {
  if (iterations < 0) throw ConfigError("CRF iterations must be non-negative");
  if (!(w_appearance >= 0.0) || !(w_smooth >= 0.0)) {
    throw ConfigError("CRF kernel weights must be non-negative");
  }
  if (!(sigma_spatial_app > 0.0) || !(sigma_intensity > 0.0) ||
      !(sigma_spatial_smooth > 0.0)) {
    throw ConfigError("CRF kernel widths must be positive");
  }
  if (!(unary_clip > 0.0 && unary_clip < 0.5)) {
    throw ConfigError("CRF unary clip must lie in (0, 0.5)");
  }
  if (max_pixels < 1) throw ConfigError("CRF pixel budget must be positive");
}

Unary unary_from_mask(const BinaryMask& mask, const RelevanceMap& map,
                      double eps) {
  if (mask.shape() != map.shape()) {
    throw ShapeError("mask " + to_string(mask.shape()) + " and relevance map " +
                     to_string(map.shape()) + " differ in shape");
  }
  if (!(eps > 0.0 && eps < 0.5)) throw ConfigError("unary clip must lie in (0, 0.5)");
  Unary u{mask.height(), mask.width(), std::vector<double>(mask.size()),
          std::vector<double>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double p =
        std::clamp(0.5 * (mask[i] ? 1.0 : 0.0) + 0.5 * map[i], eps, 1.0 - eps);
    u.foreground[i] = -std::log(p);
    u.background[i] = -std::log(1.0 - p);
  }
  return u;
}

double crf_kernel(const ImageTensor& image, const CrfConfig& cfg, int i, int j) {
  const int w = image.width();
  const int c = image.channels();
  const double dy = i / w - j / w;
  const double dx = i % w - j % w;
  const double d2 = dy * dy + dx * dx;
  double di2 = 0.0;
  const auto data = image.data();
  for (int k = 0; k < c; ++k) {
    const double d = data[static_cast<std::size_t>(i) * c + k] -
                     data[static_cast<std::size_t>(j) * c + k];
    di2 += d * d;
  }
  const double app =
      std::exp(-d2 / (2.0 * cfg.sigma_spatial_app * cfg.sigma_spatial_app) -
               di2 / (2.0 * cfg.sigma_intensity * cfg.sigma_intensity));
  const double smooth =
      std::exp(-d2 / (2.0 * cfg.sigma_spatial_smooth * cfg.sigma_spatial_smooth));
  return cfg.w_appearance * app + cfg.w_smooth * smooth;
}

CrfMarginals mean_field(
    const ImageTensor& image, const Unary& unary, const CrfConfig& cfg,
    const std::function<void(int, const CrfMarginals&)>& observer) {
  cfg.validate();
  if (image.channels() != 1 && image.channels() != 3) {
    throw ShapeError("CRF appearance kernel needs 1 or 3 channels");
  }
  if (unary.height != image.height() || unary.width != image.width()) {
    throw ShapeError("unary and image differ in shape");
  }
  const std::size_t n = image.shape().pixels();
  if (n > cfg.max_pixels) {
    throw BudgetError("image has " + std::to_string(n) +
                      " pixels, dense CRF budget is " + std::to_string(cfg.max_pixels));
  }

  CrfMarginals q{image.height(), image.width(), std::vector<double>(n),
                 std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    softmax_pair(unary.background[i], unary.foreground[i], q.background[i],
                 q.foreground[i]);
  }
  if (observer) observer(0, q);
  if (cfg.iterations == 0) return q;

  const bool coupled = cfg.w_appearance > 0.0 || cfg.w_smooth > 0.0;
  const std::vector<double> kernel =
      coupled ? kernel_matrix(image, cfg) : std::vector<double>{};
  std::vector<double> msg_bg(n, 0.0);
  std::vector<double> msg_fg(n, 0.0);
  for (int it = 1; it <= cfg.iterations; ++it) {
    if (coupled) {
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = kernel.data() + i * n;
        double acc_bg = 0.0;
        double acc_fg = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          acc_bg += row[j] * q.background[j];
          acc_fg += row[j] * q.foreground[j];
        }
        msg_bg[i] = acc_bg;
        msg_fg[i] = acc_fg;
      }
    }
    // Potts: the cost of label l is the message mass on the other label.
    for (std::size_t i = 0; i < n; ++i) {
      softmax_pair(unary.background[i] + msg_fg[i],
                   unary.foreground[i] + msg_bg[i], q.background[i],
                   q.foreground[i]);
    }
    if (observer) observer(it, q);
  }
  return q;
}

BinaryMask marginals_to_mask(const CrfMarginals& q) {
  BinaryMask mask(q.height, q.width);
  for (std::size_t i = 0; i < q.foreground.size(); ++i) {
    mask.set(i, q.foreground[i] > q.background[i]);
  }
  return mask;
}

BinaryMask crf_refine(const ImageTensor& image, const BinaryMask& mask,
                      const RelevanceMap& map, const CrfConfig& cfg) {
  cfg.validate();
  if (image.shape() != mask.shape() || image.shape() != map.shape()) {
    throw ShapeError("CRF inputs differ in shape");
  }
  const Shape work = fit_to_budget(image.shape(), cfg.max_pixels);
  const ImageTensor small_image = resize_bilinear(image, work.height, work.width);
  const BinaryMask small_mask = resize_nearest(mask, work.height, work.width);
  const RelevanceMap small_map = resize_bilinear(map, work.height, work.width);

  const Unary unary = unary_from_mask(small_mask, small_map, cfg.unary_clip);
  const BinaryMask refined = marginals_to_mask(mean_field(small_image, unary, cfg));
  return resize_nearest(refined, image.height(), image.width());
}

}  // namespace xaiseg
