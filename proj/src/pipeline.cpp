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

#include "xaiseg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdio>
#include <thread>
#include <utility>

#include "xaiseg/error.hpp"
#include "xaiseg/rng.hpp"

namespace xaiseg {
namespace {

std::string describe(const ImageTensor& image) {
  return to_string(image.shape()) + "x" + std::to_string(image.channels());
}

// Runs `fn` as a named stage: records timing and shapes, and prefixes any
// library error with the stage name while keeping its category.
template <typename Fn>
auto stage(std::vector<StageRecord>& trace, const PipelineConfig& cfg,
           const char* name, std::string input, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  try {
    auto out = fn();
    const auto end = std::chrono::steady_clock::now();
    StageRecord rec{name, std::move(input), "",
                    std::chrono::duration<double, std::milli>(end - start).count()};
    if constexpr (std::is_same_v<decltype(out), ImageTensor>) {
      rec.output = describe(out);
    } else if constexpr (requires { out.shape(); }) {
      rec.output = to_string(out.shape());
    } else if constexpr (requires { out.mask; }) {
      rec.output = to_string(out.mask.shape());
    } else {
      rec.output = "scalar";
    }
    if (cfg.verbose) {
      std::fprintf(stderr, "[stage] %-14s in=%s out=%s %.2f ms\n", rec.stage.c_str(),
                   rec.input.c_str(), rec.output.c_str(), rec.millis);
    }
    trace.push_back(std::move(rec));
    return out;
  } catch (const Error& e) {
    throw Error(e.category(), std::string("stage ") + name + ": " + e.what());
  }
}

}  // namespace

VariantId VariantId::parse(std::string_view name, bool crf) {
  if (name == "a" || name == "A") {
    return {ExplanationKind::kFusion, PostprocKind::kMorphology, crf};
  }
  if (name == "b" || name == "B") {
    return {ExplanationKind::kFusion, PostprocKind::kNcut, crf};
  }
  if (name == "c" || name == "C") {
    return {ExplanationKind::kXaiOnly, PostprocKind::kMorphology, crf};
  }
  if (name == "xncut" || name == "XNCut") {
    return {ExplanationKind::kXaiOnly, PostprocKind::kNcut, crf};
  }
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected a, b, c or xncut)");
}

std::string VariantId::name() const {
  std::string base;
  if (explanation == ExplanationKind::kFusion) {
    base = postproc == PostprocKind::kMorphology ? "a" : "b";
  } else {
    base = postproc == PostprocKind::kMorphology ? "c" : "xncut";
  }
  return crf ? base + "+crf" : base;
}

void PipelineConfig::validate() const {
  morph.validate();
  ncut.validate();
  crf.validate();
  stats.validate();
  if (ig.steps < 1) throw ConfigError("IG steps must be at least 1");
  if (ig.nt_samples < 1) throw ConfigError("noise tunnel samples must be at least 1");
  if (ig.nt_sigma && !(*ig.nt_sigma >= 0.0)) {
    throw ConfigError("noise tunnel sigma must be non-negative");
  }
  if (background_class && *background_class < 0) {
    throw ConfigError("background class must be non-negative");
  }
}

RelevanceMap fuse(const RelevanceMap& relevance, const RelevanceMap& feature) {
  if (relevance.shape() != feature.shape()) {
    throw ShapeError("fuse: relevance " + to_string(relevance.shape()) +
                     " and feature " + to_string(feature.shape()) + " differ");
  }
  std::vector<double> product(relevance.size());
  for (std::size_t i = 0; i < product.size(); ++i) {
    product[i] = relevance[i] * feature[i];
  }
  return RelevanceMap::from_unnormalized(relevance.height(), relevance.width(),
                                         std::move(product));
}

std::uint64_t image_seed(std::uint64_t seed, const ImageTensor& image) {
  // FNV-1a over the dimensions and the bit patterns of the samples.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  feed(static_cast<std::uint64_t>(image.height()));
  feed(static_cast<std::uint64_t>(image.width()));
  feed(static_cast<std::uint64_t>(image.channels()));
  for (double v : image.data()) feed(std::bit_cast<std::uint64_t>(v));
  return mix_seed(seed, h);
}

Explained explain(const ClassifierParams& params, const ImageTensor& image,
                  const PipelineConfig& cfg) {
  cfg.validate();
  if (image.channels() != params.channels) {
    throw ShapeError("image has " + std::to_string(image.channels()) +
                     " channels, model expects " + std::to_string(params.channels));
  }
  Explained out;
  const ImageTensor x = stage(out.trace, cfg, "normalize", describe(image),
                              [&] { return normalize(image, cfg.stats); });
  out.predicted_class = stage(out.trace, cfg, "predict", describe(x),
                              [&] { return predict(params, x); });
  if (cfg.background_class && out.predicted_class == *cfg.background_class) {
    out.skipped = true;
    return out;
  }
  IgConfig ig = cfg.ig;
  ig.seed = image_seed(cfg.ig.seed, image);
  const ImageTensor attribution =
      stage(out.trace, cfg, "noise_tunnel", describe(x),
            [&] { return noise_tunnel(params, x, out.predicted_class, ig); });
  out.relevance = stage(out.trace, cfg, "relevance", describe(attribution),
                        [&] { return to_relevance_map(attribution); });
  if (cfg.variant.explanation == ExplanationKind::kFusion) {
    out.feature = stage(out.trace, cfg, "feature_map", describe(x),
                        [&] { return feature_map(params, x); });
  }
  return out;
}

SegmentResult segment_explained(const Explained& explained,
                                const ImageTensor& image,
                                const PipelineConfig& cfg) {
  SegmentResult out;
  out.predicted_class = explained.predicted_class;
  out.trace = explained.trace;
  if (explained.skipped) {
    out.mask = BinaryMask(image.height(), image.width());
    out.coarse_mask = out.mask;
    out.relevance = RelevanceMap(image.height(), image.width(),
                                 std::vector<double>(image.shape().pixels(), 0.0));
    out.warnings.push_back("predicted background class " +
                           std::to_string(explained.predicted_class) +
                           "; mask left empty");
    return out;
  }
  if (explained.relevance.shape() != image.shape()) {
    throw ShapeError("explanation does not match the image shape");
  }

  out.relevance = explained.relevance;
  if (cfg.variant.explanation == ExplanationKind::kFusion) {
    if (explained.feature.shape() != image.shape()) {
      throw ShapeError("fusion variant needs a feature map");
    }
    out.relevance =
        stage(out.trace, cfg, "fuse", to_string(image.shape()),
              [&] { return fuse(explained.relevance, explained.feature); });
  }

  if (cfg.variant.postproc == PostprocKind::kMorphology) {
    MorphResult r = stage(out.trace, cfg, "morphology", to_string(image.shape()),
                          [&] { return morphology_pipeline(out.relevance, cfg.morph); });
    out.mask = std::move(r.mask);
    out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
  } else {
    NcutResult r = stage(out.trace, cfg, "ncut", to_string(image.shape()),
                         [&] { return ncut_segment(out.relevance, cfg.ncut); });
    out.mask = std::move(r.mask);
    out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
  }
  out.coarse_mask = out.mask;

  if (cfg.variant.crf) {
    out.mask = stage(out.trace, cfg, "crf", describe(image), [&] {
      return crf_refine(image, out.coarse_mask, out.relevance, cfg.crf);
    });
  }
  return out;
}

SegmentResult run_image(const ClassifierParams& params, const ImageTensor& image,
                        const PipelineConfig& cfg) {
  return segment_explained(explain(params, image, cfg), image, cfg);
}

std::vector<ImageOutcome> run_corpus(const ClassifierParams& params,
                                     std::span<const ImageTensor> images,
                                     const PipelineConfig& cfg, int workers) {
  if (images.empty()) throw DataError("run_corpus: no images");
  cfg.validate();
  std::vector<ImageOutcome> outcomes(images.size());
  auto work = [&](std::size_t i) {
    try {
      outcomes[i].result = run_image(params, images[i], cfg);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < images.size(); ++i) work(i);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(n_threads, images.size()); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < images.size(); i = next++) work(i);
    });
  }
  pool.clear();  // joins
  return outcomes;
}

LabeledDataset normalized(const LabeledDataset& raw,
                          const NormalizationStats& stats) {
  LabeledDataset out = raw;
  for (auto& img : out.images) img = normalize(img, stats);
  return out;
}

Checkpoint train_model(const LabeledDataset& raw, const TrainConfig& cfg,
                       TrainReport* report) {
  raw.validate();
  Checkpoint ck;
  ck.stats = compute_stats(raw.images);
  ck.params = train(normalized(raw, ck.stats), cfg, report);
  return ck;
}

}  // namespace xaiseg
