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

#include "xaiseg/ncut.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "xaiseg/error.hpp"

namespace xaiseg {
namespace {

struct EigenPair {
  double value;
  std::vector<double> vector;
};

// Two smallest eigenpairs of a dense symmetric row-major matrix.
std::vector<EigenPair> smallest_two(std::vector<double> matrix, int n) {
  std::vector<double> values(n);
  std::vector<double> vectors(static_cast<std::size_t>(n) * 2);
  std::vector<lapack_int> support(4);
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_ROW_MAJOR, 'V', 'I', 'U', n, matrix.data(), n, 0.0, 0.0, 1, 2,
      0.0, &found, values.data(), vectors.data(), 2, support.data());
  if (info != 0 || found != 2) {
    throw InvariantError("symmetric eigensolver failed (info " +
                         std::to_string(info) + ")");
  }
  std::vector<EigenPair> out(2);
  for (int k = 0; k < 2; ++k) {
    out[k].value = values[k];
    out[k].vector.resize(n);
    for (int i = 0; i < n; ++i) out[k].vector[i] = vectors[static_cast<std::size_t>(i) * 2 + k];
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// NCut of `in_a`, or nullopt when a side is empty or has zero association.
std::optional<double> try_ncut(const PixelAffinityGraph& graph,
                               std::span<const std::uint8_t> in_a) {
  double cut = 0.0;
  for (const Edge& e : graph.edges()) {
    if ((in_a[e.i] != 0) != (in_a[e.j] != 0)) cut += e.weight;
  }
  double assoc_a = 0.0;
  double assoc_b = 0.0;
  std::size_t count_a = 0;
  const auto& degree = graph.degree();
  for (int i = 0; i < graph.node_count(); ++i) {
    if (in_a[i]) {
      assoc_a += degree[i];
      ++count_a;
    } else {
      assoc_b += degree[i];
    }
  }
  if (count_a == 0 || count_a == static_cast<std::size_t>(graph.node_count())) {
    return std::nullopt;
  }
  if (!(assoc_a > 0.0) || !(assoc_b > 0.0)) return std::nullopt;
  return cut / assoc_a + cut / assoc_b;
}

}  // namespace

void NcutConfig::validate() const {
  if (!(sigma_r > 0.0) || !(sigma_s > 0.0)) {
    throw ConfigError("NCut scales must be positive");
  }
  if (radius < 1) throw ConfigError("NCut radius must be at least 1");
  if (split_candidates < 1) throw ConfigError("need at least one split candidate");
  if (max_nodes < 2) throw ConfigError("NCut node budget must be at least 2");
}

// --- Graph ------------------------------------------------------------------

PixelAffinityGraph::PixelAffinityGraph(int node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)),
      degree_(std::max(node_count, 0), 0.0) {
  if (node_count < 1) throw DataError("graph needs at least one node");
  for (Edge& e : edges_) {
    if (e.i == e.j) throw DataError("self-loop at node " + std::to_string(e.i));
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i < 0 || e.j >= node_count) throw DataError("edge endpoint out of range");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw DataError("edge weights must be finite and non-negative");
    }
    degree_[e.i] += e.weight;
    degree_[e.j] += e.weight;
  }
}

PixelAffinityGraph PixelAffinityGraph::scaled(double factor) const {
  std::vector<Edge> edges = edges_;
  for (Edge& e : edges) e.weight *= factor;
  return PixelAffinityGraph(node_count_, std::move(edges));
}

PixelAffinityGraph build_graph(const RelevanceMap& map, const NcutConfig& cfg) {
  cfg.validate();
  if (map.size() > cfg.max_nodes) {
    throw BudgetError("relevance map has " + std::to_string(map.size()) +
                      " pixels, NCut budget is " + std::to_string(cfg.max_nodes));
  }
  const int h = map.height();
  const int w = map.width();
  const int r = cfg.radius;
  const double inv_r2 = 1.0 / (cfg.sigma_r * cfg.sigma_r);
  const double inv_s2 = 1.0 / (cfg.sigma_s * cfg.sigma_s);
  std::vector<Edge> edges;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      // Forward half-neighbourhood so each pair is visited once.
      for (int dy = 0; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (dy == 0 && dx <= 0) continue;
          const int d2 = dy * dy + dx * dx;
          if (d2 > r * r) continue;
          const int ny = y + dy;
          const int nx = x + dx;
          if (ny >= h || nx < 0 || nx >= w) continue;
          const int j = ny * w + nx;
          const double dr = map[i] - map[j];
          const double weight = std::exp(-dr * dr * inv_r2) * std::exp(-d2 * inv_s2);
          if (weight > 0.0) edges.push_back({i, j, weight});
        }
      }
    }
  }
  return PixelAffinityGraph(h * w, std::move(edges));
}

double ncut_value(const PixelAffinityGraph& graph,
                  std::span<const std::uint8_t> in_a) {
  if (in_a.size() != static_cast<std::size_t>(graph.node_count())) {
    throw ShapeError("partition length differs from node count");
  }
  const auto value = try_ncut(graph, in_a);
  if (!value) {
    throw DegenerateError("NCut undefined: a side is empty or isolated");
  }
  return *value;
}

// --- Spectral bipartition ---------------------------------------------------

SpectralResult spectral_bipartition(const PixelAffinityGraph& graph,
                                    const NcutConfig& cfg) {
  cfg.validate();
  const int n = graph.node_count();
  const auto& degree = graph.degree();

  // Isolated nodes take no part in the eigenproblem.
  std::vector<int> active;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    if (degree[i] > 0.0) {
      slot[i] = static_cast<int>(active.size());
      active.push_back(i);
    }
  }
  const int m = static_cast<int>(active.size());
  if (m < 2) throw DegenerateError("NCut needs at least two connected nodes");
  if (static_cast<std::size_t>(m) > cfg.max_nodes) {
    throw BudgetError("graph has " + std::to_string(m) +
                      " active nodes, budget is " + std::to_string(cfg.max_nodes));
  }

  std::vector<double> inv_sqrt_d(m);
  std::vector<double> sqrt_d(m);
  for (int a = 0; a < m; ++a) {
    sqrt_d[a] = std::sqrt(degree[active[a]]);
    inv_sqrt_d[a] = 1.0 / sqrt_d[a];
  }
  // Normalized Laplacian I - D^-1/2 W D^-1/2.
  std::vector<double> lap(static_cast<std::size_t>(m) * m, 0.0);
  for (int a = 0; a < m; ++a) lap[static_cast<std::size_t>(a) * m + a] = 1.0;
  for (const Edge& e : graph.edges()) {
    const int a = slot[e.i];
    const int b = slot[e.j];
    if (a < 0 || b < 0) continue;
    const double v = -e.weight * inv_sqrt_d[a] * inv_sqrt_d[b];
    lap[static_cast<std::size_t>(a) * m + b] += v;
    lap[static_cast<std::size_t>(b) * m + a] += v;
  }
  const auto pairs = smallest_two(std::move(lap), m);

  // The trivial eigenvector is D^1/2 1. Project it out; when the zero
  // eigenvalue is repeated (disconnected graph) the solver may return any
  // basis of that space, so fall back to the other vector if needed.
  std::vector<double> trivial = sqrt_d;
  const double trivial_norm = std::sqrt(dot(trivial, trivial));
  for (double& v : trivial) v /= trivial_norm;
  auto deflate = [&](const std::vector<double>& z) {
    std::vector<double> v = z;
    const double c = dot(z, trivial);
    for (int a = 0; a < m; ++a) v[a] -= c * trivial[a];
    return v;
  };
  std::vector<double> z = deflate(pairs[1].vector);
  if (dot(z, z) < 0.25) z = deflate(pairs[0].vector);
  const double z_norm = std::sqrt(dot(z, z));
  if (!(z_norm > 0.0)) throw InvariantError("degenerate Fiedler vector");
  for (double& v : z) v /= z_norm;

  SpectralResult result;
  result.eigenvector.assign(n, 0.0);
  for (int a = 0; a < m; ++a) result.eigenvector[active[a]] = z[a] * inv_sqrt_d[a];

  // Rayleigh quotient y^T (D - W) y / y^T D y.
  {
    const auto& y = result.eigenvector;
    double num = 0.0;
    for (const Edge& e : graph.edges()) {
      const double d = y[e.i] - y[e.j];
      num += e.weight * d * d;
    }
    double den = 0.0;
    for (int i = 0; i < n; ++i) den += degree[i] * y[i] * y[i];
    result.eigenvalue = num / den;
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i : active) {
    lo = std::min(lo, result.eigenvector[i]);
    hi = std::max(hi, result.eigenvector[i]);
  }
  Partition candidate(n, 0);
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](double t) {
    for (int i = 0; i < n; ++i) {
      candidate[i] = (slot[i] >= 0 && result.eigenvector[i] > t) ? 1 : 0;
    }
    const auto value = try_ncut(graph, candidate);
    if (value && *value < best) {
      best = *value;
      result.in_a = candidate;
    }
  };
  const int count = cfg.split_candidates;
  for (int k = 1; k <= count; ++k) {
    consider(lo + (hi - lo) * k / (count + 1));
  }
  if (result.in_a.empty()) consider(0.0);  // sign split as a last resort
  if (result.in_a.empty()) {
    throw DegenerateError("no threshold of the Fiedler vector gives a valid cut");
  }
  result.ncut = best;
  return result;
}

NcutResult ncut_segment(const RelevanceMap& map, const NcutConfig& cfg) {
  cfg.validate();
  NcutResult result;
  result.mask = BinaryMask(map.height(), map.width());
  const auto [lo, hi] = std::minmax_element(map.values().begin(), map.values().end());
  if (!(*hi > *lo)) {
    result.degenerate = true;
    result.warnings.emplace_back("constant relevance map; empty mask");
    return result;
  }

  const Shape work = fit_to_budget(map.shape(), cfg.max_nodes);
  const RelevanceMap small = resize_bilinear(map, work.height, work.width);
  const PixelAffinityGraph graph = build_graph(small, cfg);

  SpectralResult split;
  try {
    split = spectral_bipartition(graph, cfg);
  } catch (const DegenerateError& e) {
    result.degenerate = true;
    result.warnings.emplace_back(e.what());
    return result;
  }

  double sum_a = 0.0;
  double sum_b = 0.0;
  std::size_t n_a = 0;
  for (std::size_t i = 0; i < small.size(); ++i) {
    if (split.in_a[i]) {
      sum_a += small[i];
      ++n_a;
    } else {
      sum_b += small[i];
    }
  }
  const std::size_t n_b = small.size() - n_a;
  const bool a_is_foreground = sum_a / n_a > sum_b / n_b;

  BinaryMask coarse(work.height, work.width);
  for (std::size_t i = 0; i < small.size(); ++i) {
    coarse.set(i, (split.in_a[i] != 0) == a_is_foreground);
  }
  result.mask = resize_nearest(coarse, map.height(), map.width());
  return result;
}

}  // namespace xaiseg
