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

// xaiseg command-line tool: synth, train, segment, evaluate.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
// Every subcommand accepts --config FILE.json whose keys are flag names
// (with or without leading dashes); flags given on the command line win.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xaiseg/error.hpp"
#include "xaiseg/eval.hpp"
#include "xaiseg/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

int exit_code(xaiseg::ErrorCategory category) {
  switch (category) {
    case xaiseg::ErrorCategory::kUsage:
      return kExitUsage;
    case xaiseg::ErrorCategory::kData:
      return kExitData;
    case xaiseg::ErrorCategory::kInvariant:
      return kExitInternal;
  }
  return kExitInternal;
}

// Converts a JSON config object into command-line tokens.
std::vector<std::string> config_tokens(const fs::path& path,
                                       const std::string& subcommand) {
  std::ifstream in(path);
  if (!in) throw xaiseg::ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw xaiseg::ConfigError("config file " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw xaiseg::ConfigError("config file must hold a JSON object");
  if (doc.contains(subcommand) && doc[subcommand].is_object()) doc = doc[subcommand];

  std::vector<std::string> tokens;
  for (const auto& [key, value] : doc.items()) {
    if (value.is_object()) continue;  // another subcommand's section
    std::string flag = key;
    while (!flag.empty() && flag.front() == '-') flag.erase(0, 1);
    std::replace(flag.begin(), flag.end(), '_', '-');
    flag = "--" + flag;
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_string()) {
      tokens.push_back(flag);
      tokens.push_back(value.get<std::string>());
    } else if (value.is_number() || value.is_null()) {
      if (value.is_null()) continue;
      tokens.push_back(flag);
      tokens.push_back(value.dump());
    } else {
      throw xaiseg::ConfigError("config key '" + key + "' must be a scalar");
    }
  }
  return tokens;
}

// Splices config-file tokens in right after the subcommand so that later
// command-line flags override them.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  std::string config;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    }
  }
  if (config.empty()) return args;
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  for (auto& t : config_tokens(config, args[1])) out.push_back(std::move(t));
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

void write_json(const json& doc, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw xaiseg::IoError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  xaiseg::SynthConfig cfg;
};

int run_synth(const SynthArgs& a) {
  xaiseg::Corpus corpus = xaiseg::generate_synthetic(a.cfg);
  xaiseg::write_corpus(corpus, a.out);
  std::printf("wrote %zu images to %s\n", corpus.items.size(), a.out.c_str());
  return 0;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string split = "train";
  xaiseg::TrainConfig cfg;
};

int run_train(const TrainArgs& a) {
  const xaiseg::Corpus corpus = xaiseg::read_corpus(a.data);
  xaiseg::LabeledDataset data = corpus.dataset(a.split);
  if (data.size() == 0) data = corpus.dataset();  // corpus without splits
  xaiseg::TrainReport report;
  const xaiseg::Checkpoint ck = xaiseg::train_model(data, a.cfg, &report);
  xaiseg::save_checkpoint(ck, a.out);
  const double acc =
      xaiseg::classification_accuracy(ck.params, xaiseg::normalized(data, ck.stats));
  std::printf("trained on %zu images, %d epochs, final loss %.6f, accuracy %.4f\n",
              data.size(), a.cfg.epochs,
              report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back(), acc);
  return 0;
}

// --- segment ----------------------------------------------------------------

struct SegmentArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string variant = "xncut";
  std::string crf = "off";
  std::string threshold = "otsu";
  int ig_steps = 50;
  int nt_samples = 5;
  double nt_sigma = -1.0;  // negative: 10% of the input range
  std::uint64_t seed = 0;
  int workers = 1;
  bool verbose = false;
  bool save_relevance = false;
};

int run_segment(const SegmentArgs& a) {
  if (a.crf != "on" && a.crf != "off") {
    throw xaiseg::ConfigError("--crf must be 'on' or 'off'");
  }
  const xaiseg::Checkpoint ck = xaiseg::load_checkpoint(a.model);
  const xaiseg::Corpus corpus = xaiseg::read_corpus(a.data);

  xaiseg::PipelineConfig cfg;
  cfg.stats = ck.stats;
  cfg.variant = xaiseg::VariantId::parse(a.variant, a.crf == "on");
  cfg.ig.steps = a.ig_steps;
  cfg.ig.nt_samples = a.nt_samples;
  if (a.nt_sigma >= 0.0) cfg.ig.nt_sigma = a.nt_sigma;
  cfg.ig.seed = a.seed;
  cfg.verbose = a.verbose;
  if (a.threshold == "otsu") {
    cfg.morph.threshold_mode = xaiseg::ThresholdMode::kOtsu;
  } else {
    cfg.morph.threshold_mode = xaiseg::ThresholdMode::kFixed;
    try {
      cfg.morph.fixed_threshold = std::stod(a.threshold);
    } catch (const std::exception&) {
      throw xaiseg::ConfigError("--threshold must be 'otsu' or a number");
    }
  }
  cfg.validate();

  std::vector<xaiseg::ImageTensor> images;
  for (const auto& item : corpus.items) images.push_back(item.image);
  const auto outcomes = xaiseg::run_corpus(ck.params, images, cfg, a.workers);

  const fs::path out(a.out);
  fs::create_directories(out / "masks");
  if (a.save_relevance) fs::create_directories(out / "relevance");
  json rows = json::array();
  int failures = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& item = corpus.items[i];
    const auto& o = outcomes[i];
    json row = {{"name", item.name}};
    if (o.result) {
      xaiseg::save_mask(o.result->mask, out / "masks" / (item.name + ".pgm"));
      if (a.save_relevance) {
        xaiseg::save_relevance(o.result->relevance,
                               out / "relevance" / (item.name + ".pgm"));
      }
      row["predicted_class"] = o.result->predicted_class;
      row["foreground_pixels"] = o.result->mask.count();
      row["warnings"] = o.result->warnings;
    } else {
      ++failures;
      xaiseg::save_mask(xaiseg::BinaryMask(item.image.height(), item.image.width()),
                        out / "masks" / (item.name + ".pgm"));
      row["error"] = o.error;
      std::fprintf(stderr, "%s: %s\n", item.name.c_str(), o.error.c_str());
    }
    rows.push_back(std::move(row));
  }
  const json config = {{"model", a.model},
                       {"data", a.data},
                       {"variant", cfg.variant.name()},
                       {"ig_steps", a.ig_steps},
                       {"nt_samples", a.nt_samples},
                       {"nt_sigma", a.nt_sigma >= 0.0 ? json(a.nt_sigma) : json("auto")},
                       {"threshold", a.threshold},
                       {"seed", a.seed}};
  write_json({{"config", config}, {"images", rows}}, out / "predictions.json");
  std::printf("segmented %zu images (%d failed) into %s\n", outcomes.size(),
              failures, a.out.c_str());
  return 0;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string pred;
  std::string truth;
  std::string out;
};

int run_evaluate(const EvaluateArgs& a) {
  const xaiseg::Corpus truth = xaiseg::read_corpus(a.truth);
  fs::path pred_dir(a.pred);
  if (fs::is_directory(pred_dir / "masks")) pred_dir /= "masks";

  std::vector<xaiseg::BinaryMask> preds;
  std::vector<xaiseg::BinaryMask> truths;
  std::vector<std::string> names;
  std::vector<std::string> splits;
  for (const auto& item : truth.items) {
    const fs::path p = pred_dir / (item.name + ".pgm");
    if (!fs::exists(p)) throw xaiseg::IoError("missing prediction " + p.string());
    preds.push_back(xaiseg::load_mask(p));
    truths.push_back(item.mask);
    names.push_back(item.name);
    splits.push_back(item.split);
  }
  xaiseg::EvalReport report = xaiseg::evaluate(preds, truths, names, splits);
  report.config = {{"truth", a.truth}, {"pred", a.pred}, {"corpus", truth.config}};
  const fs::path predictions = fs::path(a.pred) / "predictions.json";
  if (fs::exists(predictions)) {
    std::ifstream in(predictions);
    try {
      report.config["segment"] = json::parse(in).value("config", json::object());
    } catch (const json::exception& e) {
      throw xaiseg::DataError(predictions.string() + ": " + e.what());
    }
  }
  write_json(report.to_json(), a.out);
  std::printf("mean IoU %.4f  mean Dice %.4f  over %zu images\n", report.mean_iou,
              report.mean_dice, report.rows.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segmentation masks from classifier explanations"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic disk corpus");
  s->add_option("--config", config_path, "JSON file supplying flags");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--n-pos", synth.cfg.n_positive, "Positive images");
  s->add_option("--n-neg", synth.cfg.n_negative, "Negative images");
  s->add_option("--size", synth.cfg.image_size, "Image side length");
  s->add_option("--seed", synth.cfg.seed, "Random seed");
  s->add_option("--radius-min", synth.cfg.radius_min, "Smallest disk radius");
  s->add_option("--radius-max", synth.cfg.radius_max, "Largest disk radius");
  s->add_option("--noise-sigma", synth.cfg.noise_sigma, "Gaussian noise level");
  s->add_option("--val-fraction", synth.cfg.val_fraction,
                "Trailing fraction of each class put in the val split");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the reference classifier");
  t->add_option("--config", config_path, "JSON file supplying flags");
  t->add_option("--data", train.data, "Corpus directory")->required();
  t->add_option("--out", train.out, "Checkpoint path")->required();
  t->add_option("--split", train.split, "Split to train on");
  t->add_option("--epochs", train.cfg.epochs, "Training epochs");
  t->add_option("--lr", train.cfg.learning_rate, "Initial learning rate");
  t->add_option("--momentum", train.cfg.momentum, "SGD momentum");
  t->add_option("--decay", train.cfg.decay_factor, "Step decay factor");
  t->add_option("--decay-every", train.cfg.decay_every, "Epochs between decays");
  t->add_option("--batch-size", train.cfg.batch_size, "Mini-batch size");
  t->add_flag("--freeze-backbone", train.cfg.freeze_backbone, "Train the head only");
  t->add_option("--seed", train.cfg.seed, "Random seed");

  SegmentArgs seg;
  auto* g = app.add_subcommand("segment", "Produce masks for a corpus");
  g->add_option("--config", config_path, "JSON file supplying flags");
  g->add_option("--model", seg.model, "Checkpoint path")->required();
  g->add_option("--data", seg.data, "Corpus directory")->required();
  g->add_option("--out", seg.out, "Output directory")->required();
  g->add_option("--variant", seg.variant, "a | b | c | xncut");
  g->add_option("--crf", seg.crf, "on | off");
  g->add_option("--ig-steps", seg.ig_steps, "Integrated Gradients steps");
  g->add_option("--nt-samples", seg.nt_samples, "Noise tunnel samples");
  g->add_option("--nt-sigma", seg.nt_sigma, "Noise tunnel sigma (default: 10% of range)");
  g->add_option("--threshold", seg.threshold, "otsu or a fixed value in [0, 1]");
  g->add_option("--seed", seg.seed, "Random seed");
  g->add_option("--workers", seg.workers, "Worker threads");
  g->add_flag("--verbose", seg.verbose, "Stage trace on stderr");
  g->add_flag("--save-relevance", seg.save_relevance, "Also write relevance maps");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score predicted masks");
  e->add_option("--config", config_path, "JSON file supplying flags");
  e->add_option("--pred", ev.pred, "Prediction directory")->required();
  e->add_option("--truth", ev.truth, "Ground-truth corpus directory")->required();
  e->add_option("--out", ev.out, "Report path")->required();

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(args);
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& err) {
      const int code = app.exit(err);
      return code == 0 ? 0 : kExitUsage;
    }
    if (s->parsed()) return run_synth(synth);
    if (t->parsed()) return run_train(train);
    if (g->parsed()) return run_segment(seg);
    return run_evaluate(ev);
  } catch (const xaiseg::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code(err.category());
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return kExitInternal;
  }
}
