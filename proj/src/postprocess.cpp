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

#include "xaiseg/postprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>

#include "xaiseg/error.hpp"

namespace xaiseg {
namespace {

constexpr std::array<std::pair<int, int>, 4> kFourNeighbours{
    {{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};

// Breadth-first flood fill over pixels where `inside(i)` holds, starting
// from `seed`. Visits each pixel once; `visit` is called per pixel.
template <typename Inside, typename Visit>
void flood(int height, int width, std::size_t seed, Inside inside, Visit visit,
           std::vector<std::uint8_t>& seen) {
  std::deque<std::size_t> queue{seed};
  seen[seed] = 1;
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    visit(i);
    const int y = static_cast<int>(i / width);
    const int x = static_cast<int>(i % width);
    for (auto [dy, dx] : kFourNeighbours) {
      const int ny = y + dy;
      const int nx = x + dx;
      if (ny < 0 || ny >= height || nx < 0 || nx >= width) continue;
      const std::size_t j = static_cast<std::size_t>(ny) * width + nx;
      if (!seen[j] && inside(j)) {
        seen[j] = 1;
        queue.push_back(j);
      }
    }
  }
}

// One pass of dilation (`any` = true) or erosion (`any` = false).
BinaryMask morph_step(const BinaryMask& mask, const StructuringElement& element,
                      bool any) {
  const int h = mask.height();
  const int w = mask.width();
  BinaryMask out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool result = !any;
      for (auto [dy, dx] : element.offsets()) {
        const int ny = y - dy;
        const int nx = x - dx;
        const bool v = ny >= 0 && ny < h && nx >= 0 && nx < w && mask(ny, nx);
        if (any && v) {
          result = true;
          break;
        }
        if (!any && !v) {
          result = false;
          break;
        }
      }
      out.set(y, x, result);
    }
  }
  return out;
}

int quantize_bin(double v) {
  return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

// --- StructuringElement -----------------------------------------------------

StructuringElement::StructuringElement(std::vector<std::pair<int, int>> offsets)
    : offsets_(std::move(offsets)) {
  std::sort(offsets_.begin(), offsets_.end());
  offsets_.erase(std::unique(offsets_.begin(), offsets_.end()), offsets_.end());
  if (!std::binary_search(offsets_.begin(), offsets_.end(), std::pair{0, 0})) {
    throw ConfigError("structuring element must contain the origin");
  }
  for (auto [dy, dx] : offsets_) {
    if (!std::binary_search(offsets_.begin(), offsets_.end(), std::pair{-dy, -dx})) {
      throw ConfigError("structuring element must be symmetric");
    }
  }
}

StructuringElement StructuringElement::cross3() {
  return StructuringElement({{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}});
}

StructuringElement StructuringElement::square3() {
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) offsets.emplace_back(dy, dx);
  }
  return StructuringElement(std::move(offsets));
}

void MorphConfig::validate() const {
  if (dilate_iters < 0 || erode_iters < 0) {
    throw ConfigError("morphology iteration counts must be non-negative");
  }
  if (min_component_area < 1) {
    throw ConfigError("minimum component area must be at least 1");
  }
  if (threshold_mode == ThresholdMode::kFixed &&
      !(fixed_threshold >= 0.0 && fixed_threshold < 1.0)) {
    throw ConfigError("fixed threshold must lie in [0, 1)");
  }
}

// --- Thresholding -----------------------------------------------------------

double otsu_threshold(const RelevanceMap& map) {
  std::array<std::uint64_t, 256> hist{};
  for (double v : map.values()) ++hist[quantize_bin(v)];

  const std::uint64_t total = map.size();
  std::uint64_t total_sum = 0;
  for (int b = 0; b < 256; ++b) total_sum += hist[b] * static_cast<std::uint64_t>(b);

  // Minimizing the within-class sum of squares is equivalent to maximizing
  // S0^2/n0 + S1^2/n1. Candidates are compared as exact fractions so ties
  // resolve identically on every platform.
  const bool exact = total <= (std::uint64_t{1} << 23);
  using u128 = unsigned __int128;
  int best = -1;
  u128 best_num = 0;
  u128 best_den = 1;
  long double best_ratio = 0.0L;

  std::uint64_t n0 = 0;
  std::uint64_t s0 = 0;
  for (int k = 0; k < 255; ++k) {
    n0 += hist[k];
    s0 += hist[k] * static_cast<std::uint64_t>(k);
    const std::uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const std::uint64_t s1 = total_sum - s0;
    if (exact) {
      const u128 num = u128{s0} * s0 * n1 + u128{s1} * s1 * n0;
      const u128 den = u128{n0} * n1;
      if (best < 0 || num * best_den > best_num * den) {
        best = k;
        best_num = num;
        best_den = den;
      }
    } else {
      const long double ratio =
          static_cast<long double>(s0) * s0 / n0 + static_cast<long double>(s1) * s1 / n1;
      if (best < 0 || ratio > best_ratio) {
        best = k;
        best_ratio = ratio;
      }
    }
  }
  if (best < 0) {
    throw DegenerateError("Otsu threshold undefined: map has a single level");
  }
  return best / 255.0;
}

BinaryMask threshold_mask(const RelevanceMap& map, double t) {
  std::vector<std::uint8_t> out(map.size());
  const auto v = map.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] > t ? 1 : 0;
  return BinaryMask(map.height(), map.width(), std::move(out));
}

// --- Components -------------------------------------------------------------

ComponentLabels connected_components(const BinaryMask& mask) {
  ComponentLabels labels{mask.height(), mask.width(), 0,
                         std::vector<int>(mask.size(), 0)};
  std::vector<std::uint8_t> seen(mask.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] || seen[i]) continue;
    const int id = ++labels.count;
    flood(
        mask.height(), mask.width(), i, [&](std::size_t j) { return mask[j]; },
        [&](std::size_t j) { labels.ids[j] = id; }, seen);
  }
  return labels;
}

BinaryMask remove_border_and_small(const ComponentLabels& labels,
                                   int min_area) {
  const int h = labels.height;
  const int w = labels.width;
  std::vector<std::size_t> area(labels.count + 1, 0);
  std::vector<std::uint8_t> touches_border(labels.count + 1, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int id = labels(y, x);
      if (id == 0) continue;
      ++area[id];
      if (y == 0 || x == 0 || y == h - 1 || x == w - 1) touches_border[id] = 1;
    }
  }
  BinaryMask out(h, w);
  for (std::size_t i = 0; i < labels.ids.size(); ++i) {
    const int id = labels.ids[i];
    if (id != 0 && !touches_border[id] &&
        area[id] >= static_cast<std::size_t>(min_area)) {
      out.set(i, true);
    }
  }
  return out;
}

// --- Morphology -------------------------------------------------------------

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& element,
                  int iters) {
  if (iters < 0) throw ConfigError("negative iteration count");
  BinaryMask out = mask;
  for (int i = 0; i < iters; ++i) out = morph_step(out, element, true);
  return out;
}

BinaryMask erode(const BinaryMask& mask, const StructuringElement& element,
                 int iters) {
  if (iters < 0) throw ConfigError("negative iteration count");
  BinaryMask out = mask;
  for (int i = 0; i < iters; ++i) out = morph_step(out, element, false);
  return out;
}

BinaryMask fill_holes(const BinaryMask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  std::vector<std::uint8_t> outside(mask.size(), 0);
  auto is_background = [&](std::size_t j) { return !mask[j]; };
  auto seed_from = [&](int y, int x) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    if (!mask[i] && !outside[i]) {
      flood(h, w, i, is_background, [](std::size_t) {}, outside);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed_from(0, x);
    seed_from(h - 1, x);
  }
  for (int y = 0; y < h; ++y) {
    seed_from(y, 0);
    seed_from(y, w - 1);
  }
  BinaryMask out = mask;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask[i] && !outside[i]) out.set(i, true);
  }
  return out;
}

MorphResult morphology_pipeline(const RelevanceMap& map,
                                const MorphConfig& cfg) {
  cfg.validate();
  MorphResult result;
  const RelevanceMap equalized =
      to_relevance(equalize_histogram(to_image(map)));

  if (cfg.threshold_mode == ThresholdMode::kOtsu) {
    try {
      result.threshold = otsu_threshold(equalized);
    } catch (const DegenerateError& e) {
      result.mask = BinaryMask(map.height(), map.width());
      result.degenerate = true;
      result.warnings.emplace_back(e.what());
      return result;
    }
  } else {
    result.threshold = cfg.fixed_threshold;
  }

  BinaryMask mask = threshold_mask(equalized, result.threshold);
  mask = remove_border_and_small(connected_components(mask),
                                 cfg.min_component_area);
  mask = dilate(mask, cfg.element, cfg.dilate_iters);
  mask = erode(mask, cfg.element, cfg.erode_iters);
  result.mask = fill_holes(mask);
  return result;
}

}  // namespace xaiseg
