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

// Normalized Cut bipartition of a pixel affinity graph.
//
//   NCut(A, B) = cut(A, B) / assoc(A, V) + cut(A, B) / assoc(B, V)
//
// The relaxed problem (D - W) y = lambda D y is solved densely through the
// normalized Laplacian I - D^-1/2 W D^-1/2; the second eigenvector is then
// swept over evenly spaced thresholds and the split with the smallest NCut
// is kept.

#ifndef XAISEG_NCUT_HPP_
#define XAISEG_NCUT_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xaiseg/image.hpp"

namespace xaiseg {

struct NcutConfig {
  double sigma_r = 0.1;  // relevance similarity scale
  double sigma_s = 4.0;  // spatial scale, pixels
  int radius = 5;        // neighbourhood radius, pixels
  int split_candidates = 32;
  // Dense eigenproblem budget. Larger maps are downsampled to fit.
  std::size_t max_nodes = 1024;

  void validate() const;
};

struct Edge {
  int i = 0;  // i < j
  int j = 0;
  double weight = 0.0;
};

// Undirected weighted graph; each edge is stored once.
class PixelAffinityGraph {
 public:
  // Throws DataError on self-loops, out-of-range endpoints or negative /
  // non-finite weights. Endpoints are reordered so that i < j.
  PixelAffinityGraph(int node_count, std::vector<Edge> edges);

  int node_count() const { return node_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<double>& degree() const { return degree_; }

  // The same graph with all weights multiplied by `factor` > 0.
  PixelAffinityGraph scaled(double factor) const;

 private:
  int node_count_;
  std::vector<Edge> edges_;
  std::vector<double> degree_;
};

// Node per pixel (row-major); edge between pixels at Euclidean distance
// <= radius with weight exp(-(r_i - r_j)^2 / sigma_r^2) *
// exp(-|p_i - p_j|^2 / sigma_s^2). Throws BudgetError above max_nodes.
PixelAffinityGraph build_graph(const RelevanceMap& map, const NcutConfig& cfg);

// in_a[i] != 0 places node i in A, otherwise in B.
using Partition = std::vector<std::uint8_t>;

// Throws DegenerateError if a side is empty or has zero association.
double ncut_value(const PixelAffinityGraph& graph, std::span<const std::uint8_t> in_a);

struct SpectralResult {
  Partition in_a;
  // Generalized eigenvector y of (D - W) y = lambda D y; zero on isolated
  // nodes, which are always placed in B.
  std::vector<double> eigenvector;
  double eigenvalue = 0.0;
  double ncut = 0.0;
};

SpectralResult spectral_bipartition(const PixelAffinityGraph& graph,
                                    const NcutConfig& cfg);

struct NcutResult {
  BinaryMask mask;
  bool degenerate = false;
  std::vector<std::string> warnings;
};

// build_graph + spectral_bipartition; the side with the higher mean
// relevance becomes foreground. A constant map yields an empty mask.
NcutResult ncut_segment(const RelevanceMap& map, const NcutConfig& cfg);

}  // namespace xaiseg

#endif  // XAISEG_NCUT_HPP_
