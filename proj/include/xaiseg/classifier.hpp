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

// Reference classification network:
//
//   conv 3x3 (8 filters) -> ReLU -> conv 3x3 (16 filters) -> ReLU
//     -> global average pool -> linear head
//
// Convolutions use zero padding and stride 1. Gradients are computed by
// hand-written reverse-mode differentiation, both with respect to the input
// (for attribution) and the parameters (for training).

#ifndef XAISEG_CLASSIFIER_HPP_
#define XAISEG_CLASSIFIER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "xaiseg/image.hpp"

namespace xaiseg {

inline constexpr int kConv1Filters = 8;
inline constexpr int kConv2Filters = 16;
inline constexpr int kKernelSize = 3;
inline constexpr int kKernelArea = kKernelSize * kKernelSize;

struct ClassifierParams {
  int channels = 1;
  int num_classes = 2;
  std::vector<double> conv1_weight;  // [8][channels][3][3]
  std::vector<double> conv1_bias;    // [8]
  std::vector<double> conv2_weight;  // [16][8][3][3]
  std::vector<double> conv2_bias;    // [16]
  std::vector<double> head_weight;   // [num_classes][16]
  std::vector<double> head_bias;     // [num_classes]

  static ClassifierParams zeros(int channels, int num_classes);
  // Every parameter drawn from uniform(-bound, bound).
  static ClassifierParams random_uniform(int channels, int num_classes,
                                         std::uint64_t seed,
                                         double bound = 0.05);

  // Throws ConfigError on wrong sizes, fewer than two classes or
  // non-finite values.
  void validate() const;
  std::size_t parameter_count() const;

  // Parameter blocks in declaration order (the checkpoint order).
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  friend bool operator==(const ClassifierParams&,
                         const ClassifierParams&) = default;
};

// Intermediate activations of one forward pass, channel-major (CHW).
struct ForwardTrace {
  int height = 0;
  int width = 0;
  std::vector<double> input;      // [channels][H][W]
  std::vector<double> conv1_pre;  // [8][H][W]
  std::vector<double> conv1_act;
  std::vector<double> conv2_pre;  // [16][H][W]
  std::vector<double> conv2_act;
  std::vector<double> pooled;     // [16]
  std::vector<double> logits;     // [num_classes]
};

ForwardTrace forward_trace(const ClassifierParams& params,
                           const ImageTensor& image);

std::vector<double> forward(const ClassifierParams& params,
                            const ImageTensor& image);

// Index of the largest value; ties go to the lowest index.
int argmax(std::span<const double> values);

int predict(const ClassifierParams& params, const ImageTensor& image);

// d logit[target_class] / d input, same layout as `image`.
ImageTensor input_gradient(const ClassifierParams& params,
                           const ImageTensor& image, int target_class);

// Gradient of the weighted logit sum  sum_k weights[k] * logit[k].
ImageTensor input_gradient(const ClassifierParams& params,
                           const ImageTensor& image,
                           std::span<const double> logit_weights);

// Channel mean of the second conv layer's post-ReLU activations, resampled
// to the input grid and min-max normalized.
RelevanceMap feature_map(const ClassifierParams& params,
                         const ImageTensor& image);

// --- Training ---------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 0.005;
  double momentum = 0.9;
  double decay_factor = 0.1;
  int decay_every = 50;
  int epochs = 100;
  int batch_size = 1;
  std::uint64_t seed = 0;
  // Only the linear head receives updates.
  bool freeze_backbone = false;

  void validate() const;
};

struct LabeledDataset {
  std::vector<ImageTensor> images;
  std::vector<int> labels;
  int num_classes = 2;

  std::size_t size() const { return images.size(); }
  // Throws DataError on empty data, mismatched shapes or bad labels.
  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_loss;      // mean cross-entropy per epoch
  std::vector<double> epoch_accuracy;  // training accuracy seen during epoch
};

// Softmax cross-entropy minimized with momentum SGD and step decay.
// Deterministic for a fixed seed.
ClassifierParams train(const LabeledDataset& dataset, const TrainConfig& cfg,
                       TrainReport* report = nullptr);

// Continues training from `init` instead of a fresh initialization.
ClassifierParams train_from(ClassifierParams init,
                            const LabeledDataset& dataset,
                            const TrainConfig& cfg,
                            TrainReport* report = nullptr);

double classification_accuracy(const ClassifierParams& params,
                               const LabeledDataset& dataset);

// Softmax cross-entropy of one example plus its parameter gradient.
// Exposed for gradient checking; `gradient` is overwritten.
double loss_and_gradient(const ClassifierParams& params,
                         const ImageTensor& image, int label,
                         ClassifierParams* gradient);

// --- Checkpoints ------------------------------------------------------------

struct Checkpoint {
  ClassifierParams params;
  NormalizationStats stats;
};

// Layout: "XSEGNET1", u32 version, u32 channels, u32 classes,
// u32 conv1 filters, u32 conv2 filters, u32 kernel size, parameters as
// little-endian f64 in declaration order, then per-channel mean and std
// as little-endian f64.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xaiseg

#endif  // XAISEG_CLASSIFIER_HPP_
