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
#include <numeric>
#include <vector>

#include "xaiseg/attribution.hpp"
#include "xaiseg/error.hpp"
#include "xaiseg/rng.hpp"

namespace xaiseg {
namespace {

// F(x) = b + sum_i w_i x_i.
class AffineModel final : public DifferentiableModel {
 public:
  AffineModel(ImageTensor w, double b) : w_(std::move(w)), b_(b) {}
  double value(const ImageTensor& x) const override {
    double s = b_;
    for (std::size_t i = 0; i < x.size(); ++i) s += w_.data()[i] * x.data()[i];
    return s;
  }
  ImageTensor gradient(const ImageTensor&) const override { return w_; }

 private:
  ImageTensor w_;
  double b_;
};

double total(const ImageTensor& t) {
  return std::accumulate(t.data().begin(), t.data().end(), 0.0);
}

ImageTensor random_image(int h, int w, int c, std::uint64_t seed, double lo = -1,
                         double hi = 1) {
  Rng rng(seed);
  ImageTensor img(h, w, c);
  for (double& v : img.data()) v = rng.uniform(lo, hi);
  return img;
}

TEST(IntegratedGradients, LinearModelHandExample) {
  const AffineModel f(ImageTensor(1, 2, 1, {3.0, -1.0}), 0.0);
  const ImageTensor x(1, 2, 1, {1.0, 2.0});
  for (IgRule rule : {IgRule::kLeftRiemann, IgRule::kTrapezoid}) {
    for (int steps : {1, 2, 7, 50}) {
      IgConfig cfg;
      cfg.steps = steps;
      cfg.rule = rule;
      const auto a = integrated_gradients(f, x, cfg);
      EXPECT_NEAR(a.data()[0], 3.0, 1e-12);
      EXPECT_NEAR(a.data()[1], -2.0, 1e-12);
    }
  }
}

TEST(IntegratedGradients, AffineCompletenessWithBaseline) {
  const AffineModel f(random_image(4, 5, 3, 1), 0.7);
  const auto x = random_image(4, 5, 3, 2);
  IgConfig cfg;
  cfg.baseline = random_image(4, 5, 3, 3);
  for (int steps : {1, 3, 300}) {
    cfg.steps = steps;
    const double sum = total(integrated_gradients(f, x, cfg));
    EXPECT_NEAR(sum, f.value(x) - f.value(*cfg.baseline), 1e-12);
  }
}

TEST(IntegratedGradients, InputAtBaselineGivesZero) {
  const auto p = ClassifierParams::random_uniform(1, 2, 4, 0.5);
  const auto x = random_image(6, 6, 1, 5);
  IgConfig cfg;
  cfg.baseline = x;
  const auto attr = integrated_gradients(p, x, 1, cfg);
  for (double v : attr.data()) EXPECT_EQ(v, 0.0);
}

TEST(IntegratedGradients, ValidatesConfig) {
  const AffineModel f(ImageTensor(2, 2, 1), 0.0);
  IgConfig cfg;
  cfg.steps = 0;
  EXPECT_THROW(integrated_gradients(f, ImageTensor(2, 2, 1), cfg), ConfigError);
  cfg.steps = 5;
  cfg.baseline = ImageTensor(3, 2, 1);
  EXPECT_THROW(integrated_gradients(f, ImageTensor(2, 2, 1), cfg), ShapeError);
  const auto p = ClassifierParams::random_uniform(1, 2, 4);
  EXPECT_THROW(integrated_gradients(p, ImageTensor(2, 2, 1), 2, IgConfig{}), DataError);
}

double completeness_error(const ClassifierParams& p, const ImageTensor& x, int target,
                          int steps, IgRule rule) {
  IgConfig cfg;
  cfg.steps = steps;
  cfg.rule = rule;
  const double delta = forward(p, x)[target] -
                       forward(p, ImageTensor(x.height(), x.width(), x.channels()))[target];
  return std::abs(total(integrated_gradients(p, x, target, cfg)) - delta) /
         std::abs(delta);
}

// Untrained weights on a tiny image give a path with few, sharp kinks; at
// 300 steps one of these fixtures sits at 2.6e-3, so they are checked at
// 3000. The 300-step bound on trained weights lives in the acceptance run.
TEST(IntegratedGradients, CompletenessOnReferenceNetwork) {
  for (int trial = 0; trial < 8; ++trial) {
    const auto p = ClassifierParams::random_uniform(1, 2, 40 + trial, 0.4);
    const auto x = random_image(12, 12, 1, 50 + trial, 0.0, 1.0);
    EXPECT_LE(completeness_error(p, x, trial % 2, 3000, IgRule::kTrapezoid), 1e-3)
        << trial;
  }
}

TEST(IntegratedGradients, CompletenessErrorShrinksWithSteps) {
  for (IgRule rule : {IgRule::kLeftRiemann, IgRule::kTrapezoid}) {
    const auto p = ClassifierParams::random_uniform(1, 2, 61, 0.4);
    const auto x = random_image(10, 10, 1, 62, 0.0, 1.0);
    std::vector<double> err;
    for (int steps = 25; steps <= 400; steps *= 2) {
      err.push_back(completeness_error(p, x, 1, steps, rule));
    }
    int non_increasing = 0;
    for (std::size_t k = 1; k < err.size(); ++k) non_increasing += err[k] <= err[k - 1];
    EXPECT_GE(non_increasing, 3);
  }
}

TEST(NoiseTunnel, ZeroSigmaEqualsPlainIg) {
  const auto p = ClassifierParams::random_uniform(1, 2, 7, 0.4);
  const auto x = random_image(6, 6, 1, 8);
  IgConfig cfg;
  cfg.nt_sigma = 0.0;
  cfg.nt_samples = 4;
  cfg.steps = 10;
  EXPECT_EQ(noise_tunnel(p, x, 0, cfg), integrated_gradients(p, x, 0, cfg));
}

TEST(NoiseTunnel, SeededAndReproducible) {
  const auto p = ClassifierParams::random_uniform(1, 2, 7, 0.4);
  const auto x = random_image(6, 6, 1, 8);
  IgConfig cfg;
  cfg.steps = 8;
  cfg.nt_samples = 1;
  cfg.seed = 99;
  const auto a = noise_tunnel(p, x, 1, cfg);
  EXPECT_EQ(noise_tunnel(p, x, 1, cfg), a);
  cfg.seed = 100;
  EXPECT_NE(noise_tunnel(p, x, 1, cfg), a);
  // Default sigma is 10% of the input range.
  EXPECT_DOUBLE_EQ(IgConfig{}.resolved_sigma(ImageTensor(1, 2, 1, {0.2, 0.7})), 0.05);
}

TEST(NoiseTunnel, MonteCarloMeanOnLinearModel) {
  const ImageTensor w(1, 4, 1, {2.0, -1.0, 0.5, 3.0});
  const AffineModel f(w, 0.0);
  const ImageTensor x(1, 4, 1, {0.3, 0.9, -0.4, 0.1});
  IgConfig cfg;
  cfg.steps = 2;
  cfg.nt_samples = 1000;
  cfg.nt_sigma = 0.2;
  cfg.seed = 5;
  const auto a = noise_tunnel(f, x, cfg);
  for (std::size_t i = 0; i < 4; ++i) {
    const double expected = w.data()[i] * x.data()[i];
    const double se = std::abs(w.data()[i]) * 0.2 / std::sqrt(1000.0);
    EXPECT_LE(std::abs(a.data()[i] - expected), 3.0 * se) << i;
  }
}

TEST(RelevanceReduction, SumThenAbs) {
  const ImageTensor a(1, 2, 3, {0.3, -0.3, 0.0, 1.0, 0.0, 0.0});
  const auto m = to_relevance_map(a);
  EXPECT_EQ(m[0], 0.0);
  EXPECT_EQ(m[1], 1.0);
}

TEST(RelevanceReduction, EndpointsAndDegenerate) {
  ImageTensor single(3, 3, 1);
  single(1, 2) = -4.0;
  const auto m = to_relevance_map(single);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(m[i], i == 5 ? 1.0 : 0.0);
  const auto flat = to_relevance_map(ImageTensor(2, 2, 1, {0.4, 0.4, 0.4, 0.4}));
  for (double v : flat.values()) EXPECT_EQ(v, 0.0);
}

TEST(RelevanceReduction, RangeAndScaleInvariance) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto a = random_image(5, 4, 3, 300 + s);
    const auto m = to_relevance_map(a);
    for (double v : m.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    for (double& v : a.data()) v *= 8.0;  // power of two keeps rounding exact
    EXPECT_EQ(to_relevance_map(a), m);
  }
}

}  // namespace
}  // namespace xaiseg
