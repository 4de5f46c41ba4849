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

// Thresholding and binary morphology that turn a relevance map into a mask.

#ifndef XAISEG_POSTPROCESS_HPP_
#define XAISEG_POSTPROCESS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "xaiseg/image.hpp"

namespace xaiseg {

// Set of (dy, dx) offsets containing the origin and closed under negation.
class StructuringElement {
 public:
  // Throws ConfigError if the origin is missing or the set is not symmetric.
  explicit StructuringElement(std::vector<std::pair<int, int>> offsets);

  static StructuringElement cross3();   // 4-neighbourhood plus origin
  static StructuringElement square3();  // 3x3 block

  const std::vector<std::pair<int, int>>& offsets() const { return offsets_; }

 private:
  std::vector<std::pair<int, int>> offsets_;
};

enum class ThresholdMode { kOtsu, kFixed };

struct MorphConfig {
  StructuringElement element = StructuringElement::cross3();
  int dilate_iters = 2;
  int erode_iters = 1;
  int min_component_area = 8;
  ThresholdMode threshold_mode = ThresholdMode::kOtsu;
  double fixed_threshold = 0.5;  // used when threshold_mode == kFixed

  void validate() const;
};

// Otsu threshold over the 256-bin quantization q = round(255 v). Returns
// k / 255 for the bin k minimizing the within-class variance of {q <= k}
// versus {q > k}; ties go to the smallest k. Throws DegenerateError when no
// k splits the pixels into two non-empty classes (constant map).
double otsu_threshold(const RelevanceMap& map);

// Pixel is foreground iff its value is strictly greater than t.
BinaryMask threshold_mask(const RelevanceMap& map, double t);

// Per-pixel component id under 4-connectivity; 0 is background and ids run
// 1..count in row-major order of first pixel.
struct ComponentLabels {
  int height = 0;
  int width = 0;
  int count = 0;
  std::vector<int> ids;

  int operator()(int y, int x) const {
    return ids[static_cast<std::size_t>(y) * width + x];
  }
};

ComponentLabels connected_components(const BinaryMask& mask);

// Drops components touching the image border, then those smaller than
// `min_area`; the survivors are merged into one mask.
BinaryMask remove_border_and_small(const ComponentLabels& labels, int min_area);

// Minkowski dilation / erosion, repeated `iters` times. Pixels outside the
// image count as background.
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& element,
                  int iters);
BinaryMask erode(const BinaryMask& mask, const StructuringElement& element,
                 int iters);

// Sets every background pixel that is not 4-connected to the border.
BinaryMask fill_holes(const BinaryMask& mask);

struct MorphResult {
  BinaryMask mask;
  double threshold = 0.0;
  // Otsu found no split; the mask is empty.
  bool degenerate = false;
  std::vector<std::string> warnings;
};

// equalize -> threshold -> components -> border/area filter -> dilate ->
// erode -> fill holes.
MorphResult morphology_pipeline(const RelevanceMap& map, const MorphConfig& cfg);

}  // namespace xaiseg

#endif  // XAISEG_POSTPROCESS_HPP_
