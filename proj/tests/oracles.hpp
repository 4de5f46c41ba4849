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

// Reference implementations used as test oracles. Each one is written
// from the textbook definition, independently of the library code.

#ifndef XAISEG_TESTS_ORACLES_HPP_
#define XAISEG_TESTS_ORACLES_HPP_

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "xaiseg/image.hpp"
#include "xaiseg/ncut.hpp"

namespace xaiseg::oracle {

// Exhaustive Otsu over all 256 bin boundaries with exact rational
// arithmetic. Returns the smallest k minimizing the pooled within-class
// variance of {q <= k} vs {q > k}, or nullopt if no k gives two classes.
inline std::optional<int> otsu(const RelevanceMap& map) {
  using boost::multiprecision::cpp_rational;
  std::vector<long long> hist(256, 0);
  for (double v : map.values()) ++hist[static_cast<int>(std::lround(v * 255.0))];
  long long total_n = 0, total_s = 0, total_s2 = 0;
  for (long long q = 0; q < 256; ++q) {
    total_n += hist[q];
    total_s += hist[q] * q;
    total_s2 += hist[q] * q * q;
  }
  std::optional<int> best;
  cpp_rational best_value;
  long long n0 = 0, s0 = 0, s2_0 = 0;
  for (long long k = 0; k < 256; ++k) {
    n0 += hist[k];
    s0 += hist[k] * k;
    s2_0 += hist[k] * k * k;
    const long long n[2] = {n0, total_n - n0};
    const long long s[2] = {s0, total_s - s0};
    const long long s2[2] = {s2_0, total_s2 - s2_0};
    if (n[0] == 0 || n[1] == 0) continue;
    // n * variance = sum of squares about the class mean.
    cpp_rational within = 0;
    for (int side = 0; side < 2; ++side) {
      const cpp_rational mean(s[side], n[side]);
      within += s2[side] - 2 * mean * s[side] + n[side] * mean * mean;
    }
    if (!best || within < best_value) {
      best = static_cast<int>(k);
      best_value = within;
    }
  }
  return best;
}

// Iterative flood fill, scanning seeds in row-major order.
struct Labels {
  int count = 0;
  std::vector<int> ids;
};

inline Labels flood_fill(const BinaryMask& mask, bool value = true) {
  const int h = mask.height();
  const int w = mask.width();
  Labels out{0, std::vector<int>(mask.size(), 0)};
  std::vector<std::pair<int, int>> stack;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (mask(y0, x0) != value || out.ids[y0 * w + x0] != 0) continue;
      ++out.count;
      stack.push_back({y0, x0});
      out.ids[y0 * w + x0] = out.count;
      while (!stack.empty()) {
        const auto [y, x] = stack.back();
        stack.pop_back();
        const int dy[] = {-1, 1, 0, 0};
        const int dx[] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
          const int yy = y + dy[d];
          const int xx = x + dx[d];
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          if (mask(yy, xx) != value || out.ids[yy * w + xx] != 0) continue;
          out.ids[yy * w + xx] = out.count;
          stack.push_back({yy, xx});
        }
      }
    }
  }
  return out;
}

// Dense symmetric weight matrix of a graph.
inline std::vector<std::vector<double>> dense_weights(const PixelAffinityGraph& g) {
  const int n = g.node_count();
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (const auto& e : g.edges()) {
    w[e.i][e.j] += e.weight;
    w[e.j][e.i] += e.weight;
  }
  return w;
}

// cut(A,B)/assoc(A,V) + cut(A,B)/assoc(B,V) summed over the full matrix;
// nullopt when undefined.
inline std::optional<double> ncut(const std::vector<std::vector<double>>& w,
                                  const std::vector<std::uint8_t>& in_a) {
  const std::size_t n = w.size();
  double cut = 0.0;
  double assoc_a = 0.0;
  double assoc_b = 0.0;
  bool any_a = false;
  bool any_b = false;
  for (std::size_t u = 0; u < n; ++u) {
    (in_a[u] ? any_a : any_b) = true;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_a[u]) {
        assoc_a += w[u][v];
        if (!in_a[v]) cut += w[u][v];
      } else {
        assoc_b += w[u][v];
      }
    }
  }
  if (!any_a || !any_b || assoc_a <= 0.0 || assoc_b <= 0.0) return std::nullopt;
  return cut / assoc_a + cut / assoc_b;
}

// Minimum ncut over every bipartition (node 0 fixed in A).
inline std::optional<double> min_ncut(const PixelAffinityGraph& g) {
  const auto w = dense_weights(g);
  const int n = g.node_count();
  std::optional<double> best;
  for (std::uint32_t bits = 0; bits < (1u << (n - 1)); ++bits) {
    std::vector<std::uint8_t> in_a(n, 0);
    in_a[0] = 1;
    for (int u = 1; u < n; ++u) in_a[u] = (bits >> (u - 1)) & 1u;
    const auto v = ncut(w, in_a);
    if (v && (!best || *v < *best)) best = v;
  }
  return best;
}

// Set-based overlap metrics.
inline std::pair<double, double> iou_dice(const BinaryMask& p, const BinaryMask& t) {
  long long inter = 0, uni = 0, np = 0, nt = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += p[i] && t[i];
    uni += p[i] || t[i];
    np += p[i];
    nt += t[i];
  }
  if (uni == 0) return {1.0, 1.0};
  return {static_cast<double>(inter) / static_cast<double>(uni),
          2.0 * static_cast<double>(inter) / static_cast<double>(np + nt)};
}

}  // namespace xaiseg::oracle

#endif  // XAISEG_TESTS_ORACLES_HPP_
