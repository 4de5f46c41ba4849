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

// Overlap metrics, the synthetic disk corpus and on-disk corpus layout.

#ifndef XAISEG_EVAL_HPP_
#define XAISEG_EVAL_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "xaiseg/classifier.hpp"
#include "xaiseg/image.hpp"

namespace xaiseg {

// 2|P & T| / (|P| + |T|); 1 when both masks are empty.
double dice(const BinaryMask& pred, const BinaryMask& truth);
// |P & T| / |P | T|; 1 when both masks are empty.
double iou(const BinaryMask& pred, const BinaryMask& truth);

struct SegMetrics {
  double iou = 0.0;
  double dice = 0.0;
  bool both_empty = false;  // empty-vs-empty convention applied
};

SegMetrics score(const BinaryMask& pred, const BinaryMask& truth);

// --- Synthetic corpus -------------------------------------------------------

struct SynthConfig {
  int image_size = 64;
  double radius_min = 6.0;
  double radius_max = 14.0;
  double noise_sigma = 0.08;
  int n_positive = 100;
  int n_negative = 100;
  // Trailing fraction of each class assigned to the "val" split.
  double val_fraction = 0.25;
  std::uint64_t seed = 7;

  void validate() const;
  nlohmann::json to_json() const;
};

struct CorpusItem {
  std::string name;
  ImageTensor image;
  BinaryMask mask;
  int label = 0;
  std::string split = "all";
};

struct Corpus {
  std::vector<CorpusItem> items;
  int num_classes = 2;
  nlohmann::json config;  // provenance, echoed into reports

  // Items whose split equals `split` ("" selects everything).
  LabeledDataset dataset(const std::string& split = "") const;
};

inline constexpr double kSynthBackground = 0.2;
inline constexpr double kSynthForeground = 0.8;

// Positives: background 0.2 with a disk of 0.8 at a random centre and
// radius, plus Gaussian noise, clipped to [0, 1]; the mask is the disk.
// Negatives: background plus noise with an empty mask. Positives are named
// pos_NNN and negatives neg_NNN.
Corpus generate_synthetic(const SynthConfig& cfg);

// Layout: images/<name>.pgm|ppm, masks/<name>.pgm, manifest.json.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
// Reads manifest.json when present; otherwise pairs images/ and masks/ by
// file stem, labelling an item positive iff its mask is non-empty.
Corpus read_corpus(const std::filesystem::path& dir);

// --- Reports ----------------------------------------------------------------

struct EvalRow {
  std::string name;
  std::string split;
  SegMetrics metrics;
  double foreground_fraction = 0.0;  // of the prediction
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_iou = 0.0;
  double mean_dice = 0.0;
  std::map<std::string, std::pair<double, double>> split_means;  // iou, dice
  nlohmann::json config;

  nlohmann::json to_json() const;
};

// Scores prediction i against truth i. `names` and `splits` may be empty.
EvalReport evaluate(std::span<const BinaryMask> predictions,
                    std::span<const BinaryMask> truths,
                    std::span<const std::string> names = {},
                    std::span<const std::string> splits = {});

}  // namespace xaiseg

#endif  // XAISEG_EVAL_HPP_
