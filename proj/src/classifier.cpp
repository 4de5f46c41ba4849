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

#include "xaiseg/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string_view>

#include "xaiseg/error.hpp"
#include "xaiseg/rng.hpp"

namespace xaiseg {
namespace {

// Planar feature maps: `channels` planes of height x width.
struct Planes {
  int channels;
  int height;
  int width;
  std::size_t plane() const {
    return static_cast<std::size_t>(height) * width;
  }
};

// out[f] = bias[f] + sum_c w[f][c] (*) in[c], 3x3 kernels, zero padding.
void conv3x3_forward(std::span<const double> in, Planes in_dims,
                     std::span<const double> weight,
                     std::span<const double> bias, int out_channels,
                     std::span<double> out) {
  const int h = in_dims.height;
  const int w = in_dims.width;
  const std::size_t plane = in_dims.plane();
  for (int f = 0; f < out_channels; ++f) {
    double* dst = out.data() + f * plane;
    std::fill(dst, dst + plane, bias[f]);
    for (int c = 0; c < in_dims.channels; ++c) {
      const double* src = in.data() + c * plane;
      const double* k =
          weight.data() + (static_cast<std::size_t>(f) * in_dims.channels + c) *
                              kKernelArea;
      for (int ky = 0; ky < kKernelSize; ++ky) {
        const int dy = ky - 1;
        const int y_lo = std::max(0, -dy);
        const int y_hi = std::min(h, h - dy);
        for (int kx = 0; kx < kKernelSize; ++kx) {
          const int dx = kx - 1;
          const int x_lo = std::max(0, -dx);
          const int x_hi = std::min(w, w - dx);
          const double kv = k[ky * kKernelSize + kx];
          for (int y = y_lo; y < y_hi; ++y) {
            double* row = dst + static_cast<std::size_t>(y) * w;
            const double* srow = src + static_cast<std::size_t>(y + dy) * w + dx;
            for (int x = x_lo; x < x_hi; ++x) row[x] += kv * srow[x];
          }
        }
      }
    }
  }
}

// grad_in[c] += sum_f w[f][c] (*)^T grad_out[f]
void conv3x3_backward_input(std::span<const double> grad_out, int out_channels,
                            std::span<const double> weight, Planes in_dims,
                            std::span<double> grad_in) {
  const int h = in_dims.height;
  const int w = in_dims.width;
  const std::size_t plane = in_dims.plane();
  std::fill(grad_in.begin(), grad_in.end(), 0.0);
  for (int f = 0; f < out_channels; ++f) {
    const double* g = grad_out.data() + f * plane;
    for (int c = 0; c < in_dims.channels; ++c) {
      double* dst = grad_in.data() + c * plane;
      const double* k =
          weight.data() + (static_cast<std::size_t>(f) * in_dims.channels + c) *
                              kKernelArea;
      for (int ky = 0; ky < kKernelSize; ++ky) {
        const int dy = ky - 1;
        const int y_lo = std::max(0, -dy);
        const int y_hi = std::min(h, h - dy);
        for (int kx = 0; kx < kKernelSize; ++kx) {
          const int dx = kx - 1;
          const int x_lo = std::max(0, -dx);
          const int x_hi = std::min(w, w - dx);
          const double kv = k[ky * kKernelSize + kx];
          for (int y = y_lo; y < y_hi; ++y) {
            const double* grow = g + static_cast<std::size_t>(y) * w;
            double* drow = dst + static_cast<std::size_t>(y + dy) * w + dx;
            for (int x = x_lo; x < x_hi; ++x) drow[x] += kv * grow[x];
          }
        }
      }
    }
  }
}

// dweight[f][c] += grad_out[f] correlated with in[c]; dbias[f] += sum.
void conv3x3_backward_weight(std::span<const double> grad_out, int out_channels,
                             std::span<const double> in, Planes in_dims,
                             std::span<double> dweight,
                             std::span<double> dbias) {
  const int h = in_dims.height;
  const int w = in_dims.width;
  const std::size_t plane = in_dims.plane();
  // Column-wise partial sums keep the inner loop vectorizable.
  std::vector<double> partial(static_cast<std::size_t>(w));
  for (int f = 0; f < out_channels; ++f) {
    const double* g = grad_out.data() + f * plane;
    dbias[f] += std::accumulate(g, g + plane, 0.0);
    for (int c = 0; c < in_dims.channels; ++c) {
      const double* src = in.data() + c * plane;
      double* k =
          dweight.data() + (static_cast<std::size_t>(f) * in_dims.channels + c) *
                               kKernelArea;
      for (int ky = 0; ky < kKernelSize; ++ky) {
        const int dy = ky - 1;
        const int y_lo = std::max(0, -dy);
        const int y_hi = std::min(h, h - dy);
        for (int kx = 0; kx < kKernelSize; ++kx) {
          const int dx = kx - 1;
          const int x_lo = std::max(0, -dx);
          const int x_hi = std::min(w, w - dx);
          std::fill(partial.begin(), partial.end(), 0.0);
          double* acc = partial.data();
          for (int y = y_lo; y < y_hi; ++y) {
            const double* grow = g + static_cast<std::size_t>(y) * w;
            const double* srow = src + static_cast<std::size_t>(y + dy) * w + dx;
            for (int x = x_lo; x < x_hi; ++x) acc[x] += grow[x] * srow[x];
          }
          double total = 0.0;
          for (int x = x_lo; x < x_hi; ++x) total += acc[x];
          k[ky * kKernelSize + kx] += total;
        }
      }
    }
  }
}

void check_input(const ClassifierParams& params, const ImageTensor& image) {
  if (image.channels() != params.channels) {
    throw ShapeError("classifier expects " + std::to_string(params.channels) +
                     " channels, image has " +
                     std::to_string(image.channels()));
  }
  if (image.size() == 0) throw ShapeError("empty image");
}

std::vector<double> to_planar(const ImageTensor& image) {
  const int c = image.channels();
  const std::size_t plane = image.shape().pixels();
  std::vector<double> out(image.size());
  const auto in = image.data();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int k = 0; k < c; ++k) out[k * plane + p] = in[p * c + k];
  }
  return out;
}

ImageTensor from_planar(std::span<const double> planar, int height, int width,
                        int channels) {
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  std::vector<double> out(planar.size());
  for (std::size_t p = 0; p < plane; ++p) {
    for (int k = 0; k < channels; ++k) out[p * channels + k] = planar[k * plane + p];
  }
  return ImageTensor(height, width, channels, std::move(out));
}

// Backpropagates d(loss)/d(logits) through the network. Fills the input
// gradient (planar) and/or the parameter gradient when requested.
void backward(const ClassifierParams& params, const ForwardTrace& trace,
              std::span<const double> dlogits, std::vector<double>* dinput,
              ClassifierParams* dparams, bool backbone) {
  const int h = trace.height;
  const int w = trace.width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int k_classes = params.num_classes;

  std::vector<double> dpooled(kConv2Filters, 0.0);
  for (int k = 0; k < k_classes; ++k) {
    for (int f = 0; f < kConv2Filters; ++f) {
      dpooled[f] += dlogits[k] * params.head_weight[k * kConv2Filters + f];
    }
  }
  if (dparams != nullptr) {
    for (int k = 0; k < k_classes; ++k) {
      dparams->head_bias[k] += dlogits[k];
      for (int f = 0; f < kConv2Filters; ++f) {
        dparams->head_weight[k * kConv2Filters + f] +=
            dlogits[k] * trace.pooled[f];
      }
    }
  }
  if (dinput == nullptr && !backbone) return;

  // Average pool then ReLU of conv2.
  const double inv_area = 1.0 / static_cast<double>(plane);
  std::vector<double> da2(kConv2Filters * plane);
  for (int f = 0; f < kConv2Filters; ++f) {
    const double g = dpooled[f] * inv_area;
    for (std::size_t p = 0; p < plane; ++p) {
      da2[f * plane + p] = trace.conv2_pre[f * plane + p] > 0.0 ? g : 0.0;
    }
  }
  if (dparams != nullptr && backbone) {
    conv3x3_backward_weight(da2, kConv2Filters, trace.conv1_act,
                            {kConv1Filters, h, w}, dparams->conv2_weight,
                            dparams->conv2_bias);
  }
  std::vector<double> da1(kConv1Filters * plane);
  conv3x3_backward_input(da2, kConv2Filters, params.conv2_weight,
                         {kConv1Filters, h, w}, da1);
  for (std::size_t i = 0; i < da1.size(); ++i) {
    if (!(trace.conv1_pre[i] > 0.0)) da1[i] = 0.0;
  }
  if (dparams != nullptr && backbone) {
    conv3x3_backward_weight(da1, kConv1Filters, trace.input,
                            {params.channels, h, w}, dparams->conv1_weight,
                            dparams->conv1_bias);
  }
  if (dinput != nullptr) {
    dinput->assign(static_cast<std::size_t>(params.channels) * plane, 0.0);
    conv3x3_backward_input(da1, kConv1Filters, params.conv1_weight,
                           {params.channels, h, w}, *dinput);
  }
}

// Numerically stable softmax cross-entropy; writes d(loss)/d(logits).
double softmax_cross_entropy(std::span<const double> logits, int label,
                             std::span<double> dlogits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    dlogits[k] = std::exp(logits[k] - max);
    sum += dlogits[k];
  }
  for (auto& d : dlogits) d /= sum;
  const double loss = -(logits[label] - max - std::log(sum));
  dlogits[label] -= 1.0;
  return loss;
}

constexpr std::string_view kCheckpointMagic = "XSEGNET1";
constexpr std::uint32_t kCheckpointVersion = 1;

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError("truncated checkpoint", bytes_.size());
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }
  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

// --- Parameters -------------------------------------------------------------

ClassifierParams ClassifierParams::zeros(int channels, int num_classes) {
  ClassifierParams p;
  p.channels = channels;
  p.num_classes = num_classes;
  p.conv1_weight.assign(kConv1Filters * channels * kKernelArea, 0.0);
  p.conv1_bias.assign(kConv1Filters, 0.0);
  p.conv2_weight.assign(kConv2Filters * kConv1Filters * kKernelArea, 0.0);
  p.conv2_bias.assign(kConv2Filters, 0.0);
  p.head_weight.assign(static_cast<std::size_t>(num_classes) * kConv2Filters, 0.0);
  p.head_bias.assign(num_classes, 0.0);
  p.validate();
  return p;
}

ClassifierParams ClassifierParams::random_uniform(int channels,
                                                  int num_classes,
                                                  std::uint64_t seed,
                                                  double bound) {
  ClassifierParams p = zeros(channels, num_classes);
  Rng rng(seed);
  for (auto block : p.blocks()) {
    for (double& v : block) v = rng.uniform(-bound, bound);
  }
  return p;
}

void ClassifierParams::validate() const {
  if (channels < 1) throw ConfigError("classifier needs at least one channel");
  if (num_classes < 2) throw ConfigError("classifier needs at least two classes");
  const auto expect = [](const std::vector<double>& v, std::size_t n,
                         const char* name) {
    if (v.size() != n) {
      throw ConfigError(std::string("parameter block ") + name + " has size " +
                        std::to_string(v.size()) + ", expected " +
                        std::to_string(n));
    }
    for (double x : v) {
      if (!std::isfinite(x)) {
        throw ConfigError(std::string("non-finite value in ") + name);
      }
    }
  };
  expect(conv1_weight, static_cast<std::size_t>(kConv1Filters) * channels * kKernelArea,
         "conv1_weight");
  expect(conv1_bias, kConv1Filters, "conv1_bias");
  expect(conv2_weight, static_cast<std::size_t>(kConv2Filters) * kConv1Filters * kKernelArea,
         "conv2_weight");
  expect(conv2_bias, kConv2Filters, "conv2_bias");
  expect(head_weight, static_cast<std::size_t>(num_classes) * kConv2Filters,
         "head_weight");
  expect(head_bias, static_cast<std::size_t>(num_classes), "head_bias");
}

std::size_t ClassifierParams::parameter_count() const {
  std::size_t n = 0;
  for (auto b : blocks()) n += b.size();
  return n;
}

std::vector<std::span<double>> ClassifierParams::blocks() {
  return {conv1_weight, conv1_bias, conv2_weight,
          conv2_bias,   head_weight, head_bias};
}

std::vector<std::span<const double>> ClassifierParams::blocks() const {
  return {conv1_weight, conv1_bias, conv2_weight,
          conv2_bias,   head_weight, head_bias};
}

// --- Inference --------------------------------------------------------------

ForwardTrace forward_trace(const ClassifierParams& params,
                           const ImageTensor& image) {
  check_input(params, image);
  ForwardTrace t;
  t.height = image.height();
  t.width = image.width();
  const std::size_t plane = image.shape().pixels();
  t.input = to_planar(image);

  t.conv1_pre.resize(kConv1Filters * plane);
  conv3x3_forward(t.input, {params.channels, t.height, t.width},
                  params.conv1_weight, params.conv1_bias, kConv1Filters,
                  t.conv1_pre);
  t.conv1_act.resize(t.conv1_pre.size());
  std::transform(t.conv1_pre.begin(), t.conv1_pre.end(), t.conv1_act.begin(),
                 [](double v) { return v > 0.0 ? v : 0.0; });

  t.conv2_pre.resize(kConv2Filters * plane);
  conv3x3_forward(t.conv1_act, {kConv1Filters, t.height, t.width},
                  params.conv2_weight, params.conv2_bias, kConv2Filters,
                  t.conv2_pre);
  t.conv2_act.resize(t.conv2_pre.size());
  std::transform(t.conv2_pre.begin(), t.conv2_pre.end(), t.conv2_act.begin(),
                 [](double v) { return v > 0.0 ? v : 0.0; });

  t.pooled.assign(kConv2Filters, 0.0);
  for (int f = 0; f < kConv2Filters; ++f) {
    const double* a = t.conv2_act.data() + f * plane;
    t.pooled[f] = std::accumulate(a, a + plane, 0.0) / static_cast<double>(plane);
  }
  t.logits.assign(params.num_classes, 0.0);
  for (int k = 0; k < params.num_classes; ++k) {
    double acc = params.head_bias[k];
    for (int f = 0; f < kConv2Filters; ++f) {
      acc += params.head_weight[k * kConv2Filters + f] * t.pooled[f];
    }
    t.logits[k] = acc;
  }
  return t;
}

std::vector<double> forward(const ClassifierParams& params,
                            const ImageTensor& image) {
  return forward_trace(params, image).logits;
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw DataError("argmax of an empty vector");
  int best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = static_cast<int>(k);
  }
  return best;
}

int predict(const ClassifierParams& params, const ImageTensor& image) {
  return argmax(forward(params, image));
}

ImageTensor input_gradient(const ClassifierParams& params,
                           const ImageTensor& image, int target_class) {
  if (target_class < 0 || target_class >= params.num_classes) {
    throw DataError("target class " + std::to_string(target_class) +
                    " out of range");
  }
  std::vector<double> weights(params.num_classes, 0.0);
  weights[target_class] = 1.0;
  return input_gradient(params, image, weights);
}

ImageTensor input_gradient(const ClassifierParams& params,
                           const ImageTensor& image,
                           std::span<const double> logit_weights) {
  if (static_cast<int>(logit_weights.size()) != params.num_classes) {
    throw ShapeError("logit weight vector has wrong length");
  }
  const ForwardTrace trace = forward_trace(params, image);
  std::vector<double> dinput;
  backward(params, trace, logit_weights, &dinput, nullptr, false);
  return from_planar(dinput, image.height(), image.width(), image.channels());
}

RelevanceMap feature_map(const ClassifierParams& params,
                         const ImageTensor& image) {
  const ForwardTrace trace = forward_trace(params, image);
  const std::size_t plane = image.shape().pixels();
  std::vector<double> mean(plane, 0.0);
  for (int f = 0; f < kConv2Filters; ++f) {
    const double* a = trace.conv2_act.data() + f * plane;
    for (std::size_t p = 0; p < plane; ++p) mean[p] += a[p];
  }
  for (double& v : mean) v /= kConv2Filters;
  // The conv stack preserves the grid, so resampling is the identity here;
  // it is kept so strided variants slot in without touching callers.
  ImageTensor activation(trace.height, trace.width, 1, std::move(mean));
  activation = resize_bilinear(activation, image.height(), image.width());
  return RelevanceMap::from_unnormalized(
      image.height(), image.width(),
      {activation.data().begin(), activation.data().end()});
}

// --- Training ---------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
    throw ConfigError("decay factor must lie in (0, 1]");
  }
  if (decay_every < 1) throw ConfigError("decay interval must be positive");
  if (epochs < 0) throw ConfigError("epoch count must be non-negative");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
}

void LabeledDataset::validate() const {
  if (images.empty()) throw DataError("dataset is empty");
  if (images.size() != labels.size()) {
    throw DataError("dataset has " + std::to_string(images.size()) +
                    " images but " + std::to_string(labels.size()) + " labels");
  }
  if (num_classes < 2) throw DataError("label set needs at least two classes");
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_layout(images.front())) {
      throw ShapeError("dataset image " + std::to_string(i) +
                       " differs in shape from image 0");
    }
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw DataError("label " + std::to_string(labels[i]) + " of item " +
                      std::to_string(i) + " out of range");
    }
  }
}

double loss_and_gradient(const ClassifierParams& params,
                         const ImageTensor& image, int label,
                         ClassifierParams* gradient) {
  const ForwardTrace trace = forward_trace(params, image);
  std::vector<double> dlogits(params.num_classes);
  const double loss = softmax_cross_entropy(trace.logits, label, dlogits);
  if (gradient != nullptr) {
    *gradient = ClassifierParams::zeros(params.channels, params.num_classes);
    backward(params, trace, dlogits, nullptr, gradient, true);
  }
  return loss;
}

ClassifierParams train(const LabeledDataset& dataset, const TrainConfig& cfg,
                       TrainReport* report) {
  dataset.validate();
  cfg.validate();
  const ClassifierParams init = ClassifierParams::random_uniform(
      dataset.images.front().channels(), dataset.num_classes,
      mix_seed(cfg.seed, 0));
  return train_from(init, dataset, cfg, report);
}

ClassifierParams train_from(ClassifierParams params,
                            const LabeledDataset& dataset,
                            const TrainConfig& cfg, TrainReport* report) {
  dataset.validate();
  cfg.validate();
  params.validate();
  if (params.channels != dataset.images.front().channels() ||
      params.num_classes != dataset.num_classes) {
    throw ShapeError("initial parameters do not match the dataset");
  }

  Rng order_rng(mix_seed(cfg.seed, 1));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  ClassifierParams velocity = ClassifierParams::zeros(params.channels, params.num_classes);
  ClassifierParams grad = velocity;
  std::vector<double> dlogits(params.num_classes);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr =
        cfg.learning_rate * std::pow(cfg.decay_factor, epoch / cfg.decay_every);
    order_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (auto block : grad.blocks()) std::fill(block.begin(), block.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        const ForwardTrace trace = forward_trace(params, dataset.images[i]);
        if (argmax(trace.logits) == dataset.labels[i]) ++correct;
        loss_sum += softmax_cross_entropy(trace.logits, dataset.labels[i], dlogits);
        backward(params, trace, dlogits, nullptr, &grad, !cfg.freeze_backbone);
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      auto p_blocks = params.blocks();
      auto v_blocks = velocity.blocks();
      auto g_blocks = grad.blocks();
      // Blocks 0-3 are the convolutional backbone.
      const std::size_t first = cfg.freeze_backbone ? 4 : 0;
      for (std::size_t blk = first; blk < p_blocks.size(); ++blk) {
        for (std::size_t j = 0; j < p_blocks[blk].size(); ++j) {
          v_blocks[blk][j] = cfg.momentum * v_blocks[blk][j] + scale * g_blocks[blk][j];
          p_blocks[blk][j] -= lr * v_blocks[blk][j];
        }
      }
    }
    if (report != nullptr) {
      report->epoch_loss.push_back(loss_sum / static_cast<double>(dataset.size()));
      report->epoch_accuracy.push_back(static_cast<double>(correct) /
                                       static_cast<double>(dataset.size()));
    }
  }
  params.validate();
  return params;
}

double classification_accuracy(const ClassifierParams& params,
                               const LabeledDataset& dataset) {
  dataset.validate();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (predict(params, dataset.images[i]) == dataset.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

// --- Checkpoints ------------------------------------------------------------

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint) {
  const ClassifierParams& p = checkpoint.params;
  p.validate();
  checkpoint.stats.validate();
  if (static_cast<int>(checkpoint.stats.channels()) != p.channels) {
    throw ShapeError("checkpoint stats channel count differs from the model");
  }
  ByteWriter out;
  out.raw(kCheckpointMagic);
  out.u32(kCheckpointVersion);
  out.u32(static_cast<std::uint32_t>(p.channels));
  out.u32(static_cast<std::uint32_t>(p.num_classes));
  out.u32(kConv1Filters);
  out.u32(kConv2Filters);
  out.u32(kKernelSize);
  for (auto block : p.blocks()) {
    for (double v : block) out.f64(v);
  }
  for (double v : checkpoint.stats.mean) out.f64(v);
  for (double v : checkpoint.stats.stddev) out.f64(v);
  return out.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (bytes.size() < kCheckpointMagic.size() ||
      in.raw(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw FormatError("not an xaiseg checkpoint", 0);
  }
  const std::size_t version_at = in.pos();
  if (in.u32() != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version", version_at);
  }
  const std::size_t dims_at = in.pos();
  const auto channels = in.u32();
  const auto classes = in.u32();
  const auto f1 = in.u32();
  const auto f2 = in.u32();
  const auto kernel = in.u32();
  if (channels < 1 || channels > 64 || classes < 2 || classes > 1 << 16 ||
      f1 != kConv1Filters || f2 != kConv2Filters || kernel != kKernelSize) {
    throw FormatError("checkpoint architecture does not match this build",
                      dims_at);
  }
  Checkpoint ck;
  ck.params = ClassifierParams::zeros(static_cast<int>(channels),
                                      static_cast<int>(classes));
  for (auto block : ck.params.blocks()) {
    for (double& v : block) v = in.f64();
  }
  ck.stats.mean.resize(channels);
  ck.stats.stddev.resize(channels);
  for (double& v : ck.stats.mean) v = in.f64();
  for (double& v : ck.stats.stddev) v = in.f64();
  if (!in.at_end()) throw FormatError("trailing bytes in checkpoint", in.pos());
  try {
    ck.params.validate();
    ck.stats.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid checkpoint contents: ") + e.what(),
                      dims_at);
  }
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace xaiseg
