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

#include "xaiseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "xaiseg/error.hpp"
#include "xaiseg/rng.hpp"

namespace xaiseg {
namespace {

struct Overlap {
  std::size_t intersection = 0;
  std::size_t pred = 0;
  std::size_t truth = 0;
};

Overlap overlap(const BinaryMask& pred, const BinaryMask& truth) {
  if (pred.shape() != truth.shape()) {
    throw ShapeError("prediction " + to_string(pred.shape()) + " and truth " +
                     to_string(truth.shape()) + " differ in shape");
  }
  Overlap o;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    o.pred += pred[i];
    o.truth += truth[i];
    o.intersection += pred[i] && truth[i];
  }
  return o;
}

std::string numbered(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03d", prefix, i);
  return buf;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace

double dice(const BinaryMask& pred, const BinaryMask& truth) {
  const Overlap o = overlap(pred, truth);
  if (o.pred + o.truth == 0) return 1.0;
  return 2.0 * static_cast<double>(o.intersection) /
         static_cast<double>(o.pred + o.truth);
}

double iou(const BinaryMask& pred, const BinaryMask& truth) {
  const Overlap o = overlap(pred, truth);
  const std::size_t uni = o.pred + o.truth - o.intersection;
  if (uni == 0) return 1.0;
  return static_cast<double>(o.intersection) / static_cast<double>(uni);
}

SegMetrics score(const BinaryMask& pred, const BinaryMask& truth) {
  const Overlap o = overlap(pred, truth);
  return {iou(pred, truth), dice(pred, truth), o.pred + o.truth == 0};
}

// --- Synthetic corpus -------------------------------------------------------

void SynthConfig::validate() const {
  if (image_size < 8) throw ConfigError("synthetic image size must be >= 8");
  if (!(radius_min > 0.0) || radius_max < radius_min) {
    throw ConfigError("invalid blob radius range");
  }
  const int reach = static_cast<int>(std::ceil(radius_max)) + 2;
  if (2 * reach + 1 > image_size) {
    throw ConfigError("blob radius range does not fit the image with a 2 px margin");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (n_positive < 0 || n_negative < 0 || n_positive + n_negative == 0) {
    throw ConfigError("synthetic corpus needs at least one image");
  }
  if (!(val_fraction >= 0.0 && val_fraction <= 1.0)) {
    throw ConfigError("validation fraction must lie in [0, 1]");
  }
}

nlohmann::json SynthConfig::to_json() const {
  return {{"image_size", image_size},   {"radius_min", radius_min},
          {"radius_max", radius_max},   {"noise_sigma", noise_sigma},
          {"n_positive", n_positive},   {"n_negative", n_negative},
          {"val_fraction", val_fraction}, {"seed", seed}};
}

LabeledDataset Corpus::dataset(const std::string& split) const {
  LabeledDataset data;
  data.num_classes = num_classes;
  for (const auto& item : items) {
    if (!split.empty() && item.split != split) continue;
    data.images.push_back(item.image);
    data.labels.push_back(item.label);
  }
  return data;
}

Corpus generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const int size = cfg.image_size;
  Rng rng(cfg.seed);
  Corpus corpus;
  corpus.config = {{"generator", "synthetic-disk"}, {"synth", cfg.to_json()}};

  auto split_of = [&](int i, int n) {
    const int n_val = static_cast<int>(std::lround(n * cfg.val_fraction));
    return i >= n - n_val ? "val" : "train";
  };
  auto noisy_pixel = [&](double base) {
    const double noise = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal() : 0.0;
    return std::clamp(base + noise, 0.0, 1.0);
  };

  for (int i = 0; i < cfg.n_positive; ++i) {
    const double radius = rng.uniform(cfg.radius_min, cfg.radius_max);
    const int reach = static_cast<int>(std::ceil(radius)) + 2;
    const int span = size - 2 * reach;
    const int cy = reach + static_cast<int>(rng.uniform_index(span));
    const int cx = reach + static_cast<int>(rng.uniform_index(span));
    CorpusItem item{numbered("pos", i), ImageTensor(size, size, 1),
                    BinaryMask(size, size), 1, split_of(i, cfg.n_positive)};
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double d2 = static_cast<double>((y - cy) * (y - cy) + (x - cx) * (x - cx));
        const bool inside = d2 <= radius * radius;
        item.mask.set(y, x, inside);
        item.image(y, x) = noisy_pixel(inside ? kSynthForeground : kSynthBackground);
      }
    }
    corpus.items.push_back(std::move(item));
  }
  for (int i = 0; i < cfg.n_negative; ++i) {
    CorpusItem item{numbered("neg", i), ImageTensor(size, size, 1),
                    BinaryMask(size, size), 0, split_of(i, cfg.n_negative)};
    for (double& v : item.image.data()) v = noisy_pixel(kSynthBackground);
    corpus.items.push_back(std::move(item));
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : corpus.items) {
    const std::string ext = item.image.channels() == 3 ? ".ppm" : ".pgm";
    const std::string image_rel = "images/" + item.name + ext;
    const std::string mask_rel = "masks/" + item.name + ".pgm";
    save_image(item.image, dir / image_rel);
    save_mask(item.mask, dir / mask_rel);
    items.push_back({{"name", item.name},
                     {"image", image_rel},
                     {"mask", mask_rel},
                     {"label", item.label},
                     {"split", item.split}});
  }
  const nlohmann::json manifest = {{"format", "xaiseg-corpus"},
                                   {"version", 1},
                                   {"num_classes", corpus.num_classes},
                                   {"config", corpus.config},
                                   {"items", items}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

Corpus read_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  Corpus corpus;
  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    const nlohmann::json manifest = read_json(manifest_path);
    try {
      corpus.num_classes = manifest.value("num_classes", 2);
      corpus.config = manifest.value("config", nlohmann::json::object());
      for (const auto& entry : manifest.at("items")) {
        CorpusItem item;
        item.name = entry.at("name").get<std::string>();
        item.image = load_image(dir / entry.at("image").get<std::string>());
        item.mask = entry.contains("mask")
                        ? load_mask(dir / entry.at("mask").get<std::string>())
                        : BinaryMask(item.image.height(), item.image.width());
        item.label = entry.value("label", item.mask.empty_foreground() ? 0 : 1);
        item.split = entry.value("split", std::string("all"));
        corpus.items.push_back(std::move(item));
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
  } else {
    if (!fs::is_directory(dir / "images")) {
      throw IoError(dir.string() + " has neither manifest.json nor images/");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir / "images")) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      CorpusItem item;
      item.name = f.stem().string();
      item.image = load_image(f);
      const fs::path mask_path = dir / "masks" / (item.name + ".pgm");
      item.mask = fs::exists(mask_path)
                      ? load_mask(mask_path)
                      : BinaryMask(item.image.height(), item.image.width());
      item.label = item.mask.empty_foreground() ? 0 : 1;
      corpus.items.push_back(std::move(item));
    }
  }
  for (const auto& item : corpus.items) {
    if (item.mask.shape() != item.image.shape()) {
      throw ShapeError("mask of " + item.name + " differs in shape from its image");
    }
  }
  if (corpus.items.empty()) throw DataError("corpus in " + dir.string() + " is empty");
  return corpus;
}

// --- Reports ----------------------------------------------------------------

EvalReport evaluate(std::span<const BinaryMask> predictions,
                    std::span<const BinaryMask> truths,
                    std::span<const std::string> names,
                    std::span<const std::string> splits) {
  if (predictions.size() != truths.size()) {
    throw DataError("evaluate: " + std::to_string(predictions.size()) +
                    " predictions for " + std::to_string(truths.size()) + " truths");
  }
  if ((!names.empty() && names.size() != truths.size()) ||
      (!splits.empty() && splits.size() != truths.size())) {
    throw DataError("evaluate: name/split lists have the wrong length");
  }
  EvalReport report;
  std::map<std::string, std::pair<double, double>> sums;
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    EvalRow row;
    row.name = names.empty() ? std::to_string(i) : names[i];
    row.split = splits.empty() ? "all" : splits[i];
    row.metrics = score(predictions[i], truths[i]);
    row.foreground_fraction = static_cast<double>(predictions[i].count()) /
                              static_cast<double>(predictions[i].size());
    report.mean_iou += row.metrics.iou;
    report.mean_dice += row.metrics.dice;
    sums[row.split].first += row.metrics.iou;
    sums[row.split].second += row.metrics.dice;
    ++counts[row.split];
    report.rows.push_back(std::move(row));
  }
  if (!truths.empty()) {
    report.mean_iou /= static_cast<double>(truths.size());
    report.mean_dice /= static_cast<double>(truths.size());
  }
  for (const auto& [split, s] : sums) {
    const auto n = static_cast<double>(counts[split]);
    report.split_means[split] = {s.first / n, s.second / n};
  }
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"name", r.name},
                         {"split", r.split},
                         {"iou", r.metrics.iou},
                         {"dice", r.metrics.dice},
                         {"both_empty", r.metrics.both_empty},
                         {"foreground_fraction", r.foreground_fraction}});
  }
  nlohmann::json splits_json = nlohmann::json::object();
  for (const auto& [split, m] : split_means) {
    splits_json[split] = {{"mean_iou", m.first}, {"mean_dice", m.second}};
  }
  return {{"mean_iou", mean_iou},
          {"mean_dice", mean_dice},
          {"count", rows.size()},
          {"splits", splits_json},
          {"config", config},
          {"images", rows_json}};
}

}  // namespace xaiseg
