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
#include <vector>

#include "oracles.hpp"
#include "xaiseg/error.hpp"
#include "xaiseg/ncut.hpp"
#include "xaiseg/rng.hpp"

namespace xaiseg {
namespace {

PixelAffinityGraph path4() {
  return PixelAffinityGraph(4, {{0, 1, 1.0}, {1, 2, 0.01}, {2, 3, 1.0}});
}

// Connected random graph: a random spanning path plus extra edges.
PixelAffinityGraph random_graph(int n, Rng& rng, int offset = 0,
                                std::vector<Edge>* into = nullptr) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(std::span<int>(order));
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) {
    edges.push_back({offset + order[i], offset + order[i + 1], rng.uniform(0.05, 1.0)});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform01() < 0.3) edges.push_back({offset + i, offset + j, rng.uniform(0.05, 1.0)});
    }
  }
  if (into) into->insert(into->end(), edges.begin(), edges.end());
  return PixelAffinityGraph(offset + n, std::move(edges));
}

TEST(NcutValue, PathFixture) {
  const auto g = path4();
  const Partition p{1, 1, 0, 0};
  EXPECT_NEAR(ncut_value(g, p), 2.0 * 0.01 / 2.01, 1e-9);
  EXPECT_NEAR(ncut_value(g, p), 0.009950, 1e-6);
  EXPECT_NEAR(*oracle::min_ncut(g), ncut_value(g, p), 1e-15);
  EXPECT_EQ(spectral_bipartition(g, NcutConfig{}).in_a[0],
            spectral_bipartition(g, NcutConfig{}).in_a[1]);
  const auto s = spectral_bipartition(g, NcutConfig{});
  EXPECT_EQ(s.in_a[0], s.in_a[1]);
  EXPECT_EQ(s.in_a[2], s.in_a[3]);
  EXPECT_NE(s.in_a[1], s.in_a[2]);
}

TEST(NcutValue, DisconnectedCliquesAndErrors) {
  const PixelAffinityGraph g(4, {{0, 1, 0.7}, {2, 3, 0.4}});
  EXPECT_EQ(ncut_value(g, Partition{1, 1, 0, 0}), 0.0);
  EXPECT_THROW(ncut_value(g, Partition{1, 1, 1, 1}), DegenerateError);
  const PixelAffinityGraph iso(3, {{0, 1, 1.0}});
  EXPECT_THROW(ncut_value(iso, Partition{1, 1, 0}), DegenerateError);
  EXPECT_THROW(PixelAffinityGraph(2, {{0, 0, 1.0}}), DataError);
  EXPECT_THROW(PixelAffinityGraph(2, {{0, 1, -1.0}}), DataError);
  EXPECT_THROW(PixelAffinityGraph(2, {{0, 2, 1.0}}), DataError);
}

TEST(NcutValue, SymmetricScaleInvariantAndMatchesOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_index(10));
    const auto g = random_graph(n, rng);
    Partition p(n), q(n);
    p[0] = 1;
    p[n - 1] = 0;
    for (int i = 1; i + 1 < n; ++i) p[i] = rng.uniform01() < 0.5;
    for (int i = 0; i < n; ++i) q[i] = !p[i];
    const double v = ncut_value(g, p);
    EXPECT_NEAR(v, *oracle::ncut(oracle::dense_weights(g), p), 1e-12);
    EXPECT_NEAR(ncut_value(g, q), v, 1e-12);
    const double c = rng.uniform(0.01, 100.0);
    EXPECT_NEAR(ncut_value(g.scaled(c), p), v, 1e-9 * v);
  }
}

TEST(Spectral, EigenpairResidual) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform_index(30));
    const auto g = random_graph(n, rng);
    const auto s = spectral_bipartition(g, NcutConfig{});
    const auto w = oracle::dense_weights(g);
    double res = 0.0;
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      double wy = 0.0;
      for (int j = 0; j < n; ++j) wy += w[i][j] * s.eigenvector[j];
      const double d = g.degree()[i];
      const double r = d * s.eigenvector[i] - wy - s.eigenvalue * d * s.eigenvector[i];
      res += r * r;
      norm += s.eigenvector[i] * s.eigenvector[i];
    }
    EXPECT_GT(norm, 0.0);
    EXPECT_LE(std::sqrt(res), 1e-8 * std::sqrt(norm)) << trial;
    EXPECT_NEAR(s.ncut, ncut_value(g, s.in_a), 1e-15);
  }
}

TEST(Spectral, TwoComponentsSplitExactly) {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const int n1 = 2 + static_cast<int>(rng.uniform_index(8));
    const int n2 = 2 + static_cast<int>(rng.uniform_index(8));
    std::vector<Edge> edges;
    random_graph(n1, rng, 0, &edges);
    random_graph(n2, rng, n1, &edges);
    const PixelAffinityGraph g(n1 + n2, edges);
    const auto s = spectral_bipartition(g, NcutConfig{});
    for (int i = 1; i < n1; ++i) EXPECT_EQ(s.in_a[i], s.in_a[0]);
    for (int i = n1 + 1; i < n1 + n2; ++i) EXPECT_EQ(s.in_a[i], s.in_a[n1]);
    EXPECT_NE(s.in_a[0], s.in_a[n1]) << trial;
    EXPECT_EQ(s.ncut, 0.0);
  }
}

TEST(Spectral, IsolatedNodesGoToB) {
  const PixelAffinityGraph g(5, {{0, 1, 1.0}, {1, 2, 0.01}, {2, 3, 1.0}});
  const auto s = spectral_bipartition(g, NcutConfig{});
  EXPECT_EQ(s.in_a[4], 0);
  EXPECT_EQ(s.eigenvector[4], 0.0);
}

TEST(Spectral, FindsBruteForceOptimumOnSmallGraphs) {
  Rng rng(2718);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_index(8));
    const auto g = random_graph(n, rng);
    const auto s = spectral_bipartition(g, NcutConfig{});
    const double v = ncut_value(g, s.in_a);  // throws if undefined
    if (std::abs(v - *oracle::min_ncut(g)) <= 1e-12) ++hits;
  }
  EXPECT_GE(hits, 80);
}

TEST(Spectral, Deterministic) {
  Rng rng(9);
  const auto g = random_graph(20, rng);
  const auto a = spectral_bipartition(g, NcutConfig{});
  const auto b = spectral_bipartition(g, NcutConfig{});
  EXPECT_EQ(a.in_a, b.in_a);
  EXPECT_EQ(a.eigenvector, b.eigenvector);
}

TEST(BuildGraph, ClosedFormAndRadius) {
  NcutConfig cfg;
  const auto g = build_graph(RelevanceMap(1, 2, {0.5, 0.5}), cfg);
  ASSERT_EQ(g.edges().size(), 1u);
  EXPECT_DOUBLE_EQ(g.edges()[0].weight, std::exp(-1.0 / (cfg.sigma_s * cfg.sigma_s)));

  cfg.radius = 2;
  const auto row = build_graph(RelevanceMap(1, 4, {0.0, 0.3, 0.6, 1.0}), cfg);
  for (const auto& e : row.edges()) {
    EXPECT_LE(e.j - e.i, 2);
    EXPECT_GT(e.weight, 0.0);
    EXPECT_LE(e.weight, 1.0);
  }
  EXPECT_EQ(row.edges().size(), 5u);

  // Diagonal neighbours at distance sqrt(2) fall inside radius 2, (2,1) does not.
  cfg.radius = 2;
  const auto sq = build_graph(RelevanceMap(3, 3), cfg);
  int diagonal = 0;
  for (const auto& e : sq.edges()) {
    const int dy = e.j / 3 - e.i / 3;
    const int dx = e.j % 3 - e.i % 3;
    EXPECT_LE(dy * dy + dx * dx, 4);
    diagonal += dy * dy + dx * dx == 2;
  }
  EXPECT_EQ(diagonal, 8);

  cfg.max_nodes = 8;
  EXPECT_THROW(build_graph(RelevanceMap(3, 3), cfg), BudgetError);
  cfg.sigma_r = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

RelevanceMap square_map(int size, int lo, int hi, Rng& rng, bool invert = false) {
  std::vector<double> v(size * size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool in = y >= lo && y < hi && x >= lo && x < hi;
      const double r = (in ? 0.85 : 0.15) + rng.uniform(-0.05, 0.05);
      v[y * size + x] = invert ? 1.0 - r : r;
    }
  }
  return RelevanceMap(size, size, v);
}

BinaryMask square_mask(int size, int lo, int hi) {
  BinaryMask m(size, size);
  for (int y = lo; y < hi; ++y) {
    for (int x = lo; x < hi; ++x) m.set(y, x, true);
  }
  return m;
}

TEST(NcutSegment, SquareOnFloor) {
  for (int size : {24, 64}) {
    Rng rng(size);
    const int lo = size / 4;
    const int hi = size - size / 4 - 2;
    const auto r = ncut_segment(square_map(size, lo, hi, rng), NcutConfig{});
    EXPECT_FALSE(r.degenerate);
    EXPECT_GE(oracle::iou_dice(r.mask, square_mask(size, lo, hi)).second, 0.9) << size;
  }
}

TEST(NcutSegment, InversionFlipsForeground) {
  Rng a(3), b(3);
  const auto fwd = ncut_segment(square_map(24, 6, 16, a), NcutConfig{});
  const auto inv = ncut_segment(square_map(24, 6, 16, b, true), NcutConfig{});
  for (std::size_t i = 0; i < fwd.mask.size(); ++i) EXPECT_NE(fwd.mask[i], inv.mask[i]);
}

TEST(NcutSegment, ConstantMapIsEmpty) {
  const auto r = ncut_segment(RelevanceMap(16, 16, std::vector<double>(256, 0.4)), NcutConfig{});
  EXPECT_TRUE(r.mask.empty_foreground());
  EXPECT_TRUE(r.degenerate);
  EXPECT_FALSE(r.warnings.empty());
}

}  // namespace
}  // namespace xaiseg
