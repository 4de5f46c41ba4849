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

// Classifier -> attribution -> mask orchestration.

#ifndef XAISEG_PIPELINE_HPP_
#define XAISEG_PIPELINE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xaiseg/attribution.hpp"
#include "xaiseg/classifier.hpp"
#include "xaiseg/densecrf.hpp"
#include "xaiseg/image.hpp"
#include "xaiseg/ncut.hpp"
#include "xaiseg/postprocess.hpp"

namespace xaiseg {

enum class ExplanationKind { kXaiOnly, kFusion };
enum class PostprocKind { kMorphology, kNcut };

// a = fusion + morphology, b = fusion + ncut, c = xai + morphology,
// xncut = xai + ncut.
struct VariantId {
  ExplanationKind explanation = ExplanationKind::kXaiOnly;
  PostprocKind postproc = PostprocKind::kNcut;
  bool crf = false;

  static VariantId parse(std::string_view name, bool crf = false);
  // "a", "b", "c" or "xncut", with "+crf" appended when refinement is on.
  std::string name() const;

  friend bool operator==(const VariantId&, const VariantId&) = default;
};

struct PipelineConfig {
  IgConfig ig;
  MorphConfig morph;
  NcutConfig ncut;
  CrfConfig crf;
  VariantId variant;
  NormalizationStats stats;
  // Images predicted as this class get an empty mask without attribution.
  std::optional<int> background_class = 0;
  // Writes one stage-trace line per stage to stderr.
  bool verbose = false;

  void validate() const;
};

// Elementwise product, min-max renormalized.
RelevanceMap fuse(const RelevanceMap& relevance, const RelevanceMap& feature);

struct StageRecord {
  std::string stage;
  std::string input;
  std::string output;
  double millis = 0.0;
};

// Classifier-side products for one image, reusable across variants.
struct Explained {
  int predicted_class = 0;
  bool skipped = false;  // background class; no attribution was run
  RelevanceMap relevance;
  RelevanceMap feature;
  std::vector<StageRecord> trace;
};

struct SegmentResult {
  int predicted_class = 0;
  BinaryMask mask;
  BinaryMask coarse_mask;  // before CRF refinement
  RelevanceMap relevance;  // the map handed to post-processing
  std::vector<std::string> warnings;
  std::vector<StageRecord> trace;
};

// Seed of the noise tunnel for `image`: a mix of the configured seed and a
// hash of the pixel data, so results do not depend on corpus order.
std::uint64_t image_seed(std::uint64_t seed, const ImageTensor& image);

// normalize -> predict -> noise tunnel on the predicted class -> relevance,
// plus the feature map.
Explained explain(const ClassifierParams& params, const ImageTensor& image,
                  const PipelineConfig& cfg);

// Fusion, post-processing and optional CRF for an explained image.
// `image` is the original, unnormalized input.
SegmentResult segment_explained(const Explained& explained,
                                const ImageTensor& image,
                                const PipelineConfig& cfg);

SegmentResult run_image(const ClassifierParams& params, const ImageTensor& image,
                        const PipelineConfig& cfg);

struct ImageOutcome {
  std::optional<SegmentResult> result;
  std::string error;  // set when result is empty
};

// One outcome per image, in input order. `workers` > 1 uses a thread pool.
std::vector<ImageOutcome> run_corpus(const ClassifierParams& params,
                                     std::span<const ImageTensor> images,
                                     const PipelineConfig& cfg, int workers = 1);

// Computes normalization stats on the raw training images, then trains on
// the normalized copies.
Checkpoint train_model(const LabeledDataset& raw, const TrainConfig& cfg,
                       TrainReport* report = nullptr);

// Normalized copy of `raw` under `stats`.
LabeledDataset normalized(const LabeledDataset& raw,
                          const NormalizationStats& stats);

}  // namespace xaiseg

#endif  // XAISEG_PIPELINE_HPP_
