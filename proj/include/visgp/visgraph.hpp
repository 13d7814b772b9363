// Copyright 2026 The visgp Authors.
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "visgp/geometry.hpp"

namespace visgp {

using Edge = std::pair<int, int>;

/// Dense symmetric adjacency stored as packed 64-bit rows.
class BitMatrix {
 public:
  BitMatrix() = default;
  explicit BitMatrix(int n);

  int size() const { return n_; }
  int words_per_row() const { return words_; }

  bool test(int i, int j) const { return (data_[idx(i, j)] >> (j & 63)) & 1u; }
  void set(int i, int j) { data_[idx(i, j)] |= std::uint64_t{1} << (j & 63); }
  void reset(int i, int j) { data_[idx(i, j)] &= ~(std::uint64_t{1} << (j & 63)); }
  void set_symmetric(int i, int j) { set(i, j), set(j, i); }

  std::span<std::uint64_t> row(int i) { return {data_.data() + static_cast<std::size_t>(i) * words_, static_cast<std::size_t>(words_)}; }
  std::span<const std::uint64_t> row(int i) const {
    return {data_.data() + static_cast<std::size_t>(i) * words_, static_cast<std::size_t>(words_)};
  }

  int degree(int i) const;
  std::vector<int> neighbors(int i) const;
  std::size_t edge_count() const;  // unordered pairs, assumes symmetry
  std::vector<Edge> edges() const;

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * words_ + (j >> 6); }

  int n_ = 0;
  int words_ = 0;
  std::vector<std::uint64_t> data_;
};

struct VisibilityGraph {
  std::vector<Point2> points;
  BitMatrix adjacency;
  std::optional<double> d_max;

  int size() const { return adjacency.size(); }
  bool adjacent(int i, int j) const { return adjacency.test(i, j); }
};

/// Pairs (i, j) are adjacent iff the segment lies in the domain and, when
/// given, their distance is at most d_max. Throws InvalidInput listing any
/// points outside the domain.
VisibilityGraph build_visibility_graph(std::span<const Point2> points, const PolygonDomain& dom,
                                       std::optional<double> d_max = std::nullopt);

/// Every pair adjacent; the Euclidean-GP graph.
VisibilityGraph complete_graph(std::span<const Point2> points);

struct CompletedGraph {
  BitMatrix adjacency;
  std::vector<Edge> added_edges;
};

/// Chordal supergraph by elimination fill-in along a maximum-cardinality-search
/// ordering (lowest index breaks ties). Adds nothing to a chordal graph.
CompletedGraph chordal_completion(const BitMatrix& adjacency);

/// Maximum cardinality search visit order, lowest index first among ties.
std::vector<int> mcs_order(const BitMatrix& adjacency);

bool is_chordal(const BitMatrix& adjacency);

/// Maximal cliques in a perfect (running-intersection) order, with
/// separators[i] = cliques[i] ∩ (cliques[0] ∪ ... ∪ cliques[i-1]).
struct ChordalDecomposition {
  int n = 0;
  std::vector<std::vector<int>> cliques;
  std::vector<std::vector<int>> separators;
  std::vector<Edge> added_edges;

  std::size_t size() const { return cliques.size(); }
};

/// Throws NotChordal if the graph is not chordal.
ChordalDecomposition perfect_ordering(const BitMatrix& chordal, std::vector<Edge> added_edges = {});

/// chordal_completion followed by perfect_ordering.
ChordalDecomposition decompose(const BitMatrix& adjacency);

/// Throws NotChordal describing the first violated property.
void check_decomposition(const ChordalDecomposition& d);

/// All maximal cliques of the subgraph induced by `vertices` (Bron-Kerbosch
/// with pivoting). Each clique is sorted by vertex position in `vertices`.
std::vector<std::vector<int>> maximal_cliques(const BitMatrix& adjacency, std::span<const int> vertices);

struct AddedEdgeDiagnostic {
  Edge edge;
  double euclidean = 0.0;
  double geodesic = 0.0;
  double ratio = 1.0;
  bool distorting = false;  // ratio > 1.5
};

struct CompletionReport {
  std::size_t added = 0;
  std::size_t distorting = 0;
  std::vector<AddedEdgeDiagnostic> edges;
  /// Counts of ratios in [1,1.1), [1.1,1.25), [1.25,1.5), [1.5,2), [2,inf).
  std::vector<std::size_t> histogram;
};

CompletionReport completion_diagnostics(const ChordalDecomposition& decomp, const VisibilityGraph& g,
                                        const PolygonDomain& dom);

nlohmann::json decomposition_to_json(const ChordalDecomposition& d);
ChordalDecomposition decomposition_from_json(const nlohmann::json& j);

/// FNV-1a over the points, the domain file bytes and d_max.
std::uint64_t adjacency_content_hash(std::span<const Point2> points, std::string_view domain_bytes,
                                     std::optional<double> d_max);

/// Cache layout: "VISG1", u64 n, f64 d_max (0 when absent), u64 hash, then
/// n*n bits row-major, LSB first within each byte. Little-endian.
void save_adjacency_cache(const std::filesystem::path& path, const VisibilityGraph& g, std::uint64_t hash);

/// nullopt when the file is missing, malformed, or for a different hash.
std::optional<BitMatrix> load_adjacency_cache(const std::filesystem::path& path, std::uint64_t expected_hash);

}  // namespace visgp
