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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "test_util.hpp"
#include "xaiseg/error.hpp"
#include "xaiseg/eval.hpp"
#include "xaiseg/rng.hpp"

namespace xaiseg {
namespace {

BinaryMask first_n(int n, int offset = 0) {
  BinaryMask m(4, 4);
  for (int i = offset; i < offset + n; ++i) m.set(static_cast<std::size_t>(i), true);
  return m;
}

TEST(Metrics, HandExamples) {
  EXPECT_EQ(dice(first_n(4), first_n(4, 2)), 0.5);
  EXPECT_EQ(iou(first_n(4), first_n(4)), 1.0);
  EXPECT_EQ(dice(first_n(3), first_n(3, 3)), 0.0);
  // |P & T| = 2, |P | T| = 6.
  EXPECT_EQ(iou(first_n(4), first_n(4, 2)), 1.0 / 3.0);
  EXPECT_EQ(dice(BinaryMask(4, 4), BinaryMask(4, 4)), 1.0);
  EXPECT_TRUE(score(BinaryMask(4, 4), BinaryMask(4, 4)).both_empty);
  EXPECT_EQ(dice(BinaryMask(4, 4), first_n(2)), 0.0);
  EXPECT_THROW(dice(BinaryMask(4, 4), BinaryMask(2, 8)), ShapeError);
}

TEST(Metrics, IdentityAndSymmetryOnRandomPairs) {
  Rng rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    BinaryMask p(16, 16), t(16, 16);
    const double dp = rng.uniform01();
    const double dt = rng.uniform01();
    for (std::size_t i = 0; i < p.size(); ++i) {
      p.set(i, rng.uniform01() < dp);
      t.set(i, rng.uniform01() < dt);
    }
    const double j = iou(p, t);
    const double d = dice(p, t);
    EXPECT_NEAR(d, 2.0 * j / (1.0 + j), 1e-12);
    EXPECT_EQ(d, dice(t, p));
    EXPECT_EQ(j, iou(t, p));
    const auto [oj, od] = oracle::iou_dice(p, t);
    EXPECT_NEAR(j, oj, 1e-15);
    EXPECT_NEAR(d, od, 1e-15);
  }
}

TEST(Evaluate, MeansAndSplits) {
  const std::vector<BinaryMask> truth{first_n(4), first_n(4)};
  const std::vector<BinaryMask> pred{first_n(4), first_n(4, 2)};
  const std::vector<std::string> names{"x", "y"};
  const std::vector<std::string> splits{"train", "val"};
  const auto r = evaluate(pred, truth, names, splits);
  EXPECT_EQ(r.mean_dice, 0.75);
  EXPECT_EQ(r.split_means.at("val").second, 0.5);
  EXPECT_EQ(r.rows[1].name, "y");

  EXPECT_EQ(evaluate(truth, truth).mean_iou, 1.0);
  const std::vector<BinaryMask> empty{BinaryMask(4, 4), BinaryMask(4, 4)};
  const auto z = evaluate(empty, truth);
  EXPECT_EQ(z.mean_iou, 0.0);
  EXPECT_EQ(z.mean_dice, 0.0);

  const std::vector<BinaryMask> one{first_n(1)};
  EXPECT_THROW(evaluate(one, truth), DataError);
}

TEST(Evaluate, OrderInvariant) {
  Rng rng(3);
  std::vector<BinaryMask> p, t;
  for (int i = 0; i < 20; ++i) {
    BinaryMask a(8, 8), b(8, 8);
    for (std::size_t k = 0; k < 64; ++k) {
      a.set(k, rng.uniform01() < 0.4);
      b.set(k, rng.uniform01() < 0.4);
    }
    p.push_back(a);
    t.push_back(b);
  }
  const auto r1 = evaluate(p, t);
  std::vector<std::size_t> order(20);
  for (std::size_t i = 0; i < 20; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<BinaryMask> ps, ts;
  for (auto i : order) {
    ps.push_back(p[i]);
    ts.push_back(t[i]);
  }
  const auto r2 = evaluate(ps, ts);
  EXPECT_NEAR(r1.mean_dice, r2.mean_dice, 1e-12);
  EXPECT_NEAR(r1.mean_iou, r2.mean_iou, 1e-12);
}

TEST(Evaluate, JsonFields) {
  const std::vector<BinaryMask> m{first_n(3)};
  auto r = evaluate(m, m);
  r.config = {{"variant", "xncut"}};
  const auto j = r.to_json();
  EXPECT_EQ(j.at("mean_dice"), 1.0);
  EXPECT_EQ(j.at("mean_iou"), 1.0);
  EXPECT_EQ(j.at("count"), 1);
  EXPECT_EQ(j.at("config").at("variant"), "xncut");
  EXPECT_EQ(j.at("images").size(), 1u);
  EXPECT_TRUE(j.at("splits").contains("all"));
}

TEST(Synthetic, NoiselessImagesAreTwoLevel) {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.n_positive = 20;
  cfg.n_negative = 5;
  const auto corpus = generate_synthetic(cfg);
  ASSERT_EQ(corpus.items.size(), 25u);
  for (const auto& item : corpus.items) {
    for (int y = 0; y < cfg.image_size; ++y) {
      for (int x = 0; x < cfg.image_size; ++x) {
        EXPECT_EQ(item.image(y, x), item.mask(y, x) ? kSynthForeground : kSynthBackground);
      }
    }
    EXPECT_EQ(item.label, item.mask.empty_foreground() ? 0 : 1);
  }
}

TEST(Synthetic, DiskGeometry) {
  SynthConfig cfg;
  cfg.n_negative = 0;
  const auto corpus = generate_synthetic(cfg);
  const double lo = cfg.radius_min - 0.5;
  const double hi = cfg.radius_max + 0.5;
  for (const auto& item : corpus.items) {
    const auto area = static_cast<double>(item.mask.count());
    EXPECT_GE(area, std::numbers::pi * lo * lo);
    EXPECT_LE(area, std::numbers::pi * hi * hi);
    // At least two background pixels between the disk and the frame.
    for (int i = 0; i < cfg.image_size; ++i) {
      for (int k : {0, 1, cfg.image_size - 2, cfg.image_size - 1}) {
        EXPECT_FALSE(item.mask(i, k));
        EXPECT_FALSE(item.mask(k, i));
      }
    }
    EXPECT_EQ(oracle::flood_fill(item.mask).count, 1);
  }
}

TEST(Synthetic, SeededAndSplit) {
  SynthConfig cfg;
  cfg.n_positive = 12;
  cfg.n_negative = 8;
  const auto a = generate_synthetic(cfg);
  const auto b = generate_synthetic(cfg);
  int val = 0;
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    EXPECT_EQ(a.items[i].image, b.items[i].image);
    EXPECT_EQ(a.items[i].mask, b.items[i].mask);
    val += a.items[i].split == "val";
  }
  EXPECT_EQ(val, 3 + 2);
  EXPECT_EQ(a.items[0].name, "pos_000");
  EXPECT_EQ(a.items[12].name, "neg_000");
  cfg.seed = 8;
  EXPECT_NE(generate_synthetic(cfg).items[0].image, a.items[0].image);
  EXPECT_EQ(a.dataset("val").size(), 5u);
  EXPECT_EQ(a.dataset().size(), 20u);
  cfg.radius_max = 40;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(CorpusIo, RoundTrip) {
  testutil::TempDir dir("corpus");
  SynthConfig cfg;
  cfg.n_positive = 3;
  cfg.n_negative = 2;
  cfg.image_size = 32;
  cfg.radius_min = 4;
  cfg.radius_max = 6;
  const auto corpus = generate_synthetic(cfg);
  write_corpus(corpus, dir.path());
  const auto back = read_corpus(dir.path());
  ASSERT_EQ(back.items.size(), corpus.items.size());
  EXPECT_EQ(back.config, corpus.config);
  for (std::size_t i = 0; i < back.items.size(); ++i) {
    EXPECT_EQ(back.items[i].name, corpus.items[i].name);
    EXPECT_EQ(back.items[i].mask, corpus.items[i].mask);
    EXPECT_EQ(back.items[i].label, corpus.items[i].label);
    EXPECT_EQ(back.items[i].split, corpus.items[i].split);
    const auto src = corpus.items[i].image.data();
    const auto got = back.items[i].image.data();
    for (std::size_t k = 0; k < src.size(); ++k) EXPECT_NEAR(got[k], src[k], 0.5 / 255 + 1e-12);
  }
}

TEST(CorpusIo, PlainDirectoryWithoutManifest) {
  testutil::TempDir dir("plain");
  SynthConfig cfg;
  cfg.n_positive = 2;
  cfg.n_negative = 2;
  cfg.image_size = 32;
  cfg.radius_min = 4;
  cfg.radius_max = 6;
  write_corpus(generate_synthetic(cfg), dir.path());
  std::filesystem::remove(dir.path() / "manifest.json");
  const auto back = read_corpus(dir.path());
  ASSERT_EQ(back.items.size(), 4u);
  std::set<std::string> names;
  for (const auto& item : back.items) {
    names.insert(item.name);
    EXPECT_EQ(item.label, item.name.starts_with("pos") ? 1 : 0);
    EXPECT_EQ(item.split, "all");
  }
  EXPECT_EQ(names.size(), 4u);

  // An image without a mask is an unlabelled negative.
  std::filesystem::remove(dir.path() / "masks" / "pos_000.pgm");
  const auto unlabelled = read_corpus(dir.path());
  EXPECT_EQ(unlabelled.items[2].name, "pos_000");
  EXPECT_EQ(unlabelled.items[2].label, 0);
  EXPECT_THROW(read_corpus(dir.path() / "missing"), DataError);
}

}  // namespace
}  // namespace xaiseg
