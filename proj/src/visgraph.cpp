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

#include "visgp/visgraph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "visgp/error.hpp"

namespace visgp {
namespace {

template <class F>
void for_each_bit(std::span<const std::uint64_t> words, F&& f) {
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t bits = words[w];
    while (bits) {
      const int b = std::countr_zero(bits);
      f(static_cast<int>(w * 64 + b));
      bits &= bits - 1;
    }
  }
}

std::vector<std::uint64_t> make_bits(int n) { return std::vector<std::uint64_t>((n + 63) / 64, 0); }
void set_bit(std::vector<std::uint64_t>& v, int i) { v[i >> 6] |= std::uint64_t{1} << (i & 63); }
void reset_bit(std::vector<std::uint64_t>& v, int i) { v[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
bool test_bit(const std::vector<std::uint64_t>& v, int i) { return (v[i >> 6] >> (i & 63)) & 1u; }

// Earlier-visited neighbors of each vertex under an MCS order.
std::vector<std::vector<std::uint64_t>> earlier_neighbors(const BitMatrix& adj, const std::vector<int>& order) {
  const int n = adj.size();
  std::vector<std::vector<std::uint64_t>> out(n);
  auto seen = make_bits(n);
  for (int v : order) {
    auto row = adj.row(v);
    out[v].assign(row.begin(), row.end());
    for (std::size_t w = 0; w < seen.size(); ++w) out[v][w] &= seen[w];
    set_bit(seen, v);
  }
  return out;
}

// Reverse MCS order is a perfect elimination order iff the graph is chordal.
// Returns the first vertex violating it, or -1.
int first_peo_violation(const BitMatrix& adj, const std::vector<int>& order,
                        const std::vector<std::vector<std::uint64_t>>& earlier) {
  const int n = adj.size();
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) pos[order[i]] = i;
  for (int v : order) {
    int latest = -1;
    for_each_bit(std::span<const std::uint64_t>(earlier[v]), [&](int u) {
      if (latest < 0 || pos[u] > pos[latest]) latest = u;
    });
    if (latest < 0) continue;
    auto urow = adj.row(latest);
    for (std::size_t w = 0; w < earlier[v].size(); ++w) {
      std::uint64_t rest = earlier[v][w];
      if (static_cast<int>(w) == (latest >> 6)) rest &= ~(std::uint64_t{1} << (latest & 63));
      if (rest & ~urow[w]) return v;
    }
  }
  return -1;
}

std::string edge_list(const std::vector<std::size_t>& idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size() && i < 20; ++i) s += (i ? "," : "") + std::to_string(idx[i]);
  if (idx.size() > 20) s += ",...";
  return s;
}

void fnv1a(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

template <class T>
void write_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "cache format assumes little-endian host");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool read_le(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

BitMatrix::BitMatrix(int n) : n_(n), words_((n + 63) / 64), data_(static_cast<std::size_t>(n) * words_, 0) {}

int BitMatrix::degree(int i) const {
  int d = 0;
  for (std::uint64_t w : row(i)) d += std::popcount(w);
  return d;
}

std::vector<int> BitMatrix::neighbors(int i) const {
  std::vector<int> out;
  for_each_bit(row(i), [&](int j) { out.push_back(j); });
  return out;
}

std::size_t BitMatrix::edge_count() const {
  std::size_t total = 0;
  for (int i = 0; i < n_; ++i) total += static_cast<std::size_t>(degree(i));
  return total / 2;
}

std::vector<Edge> BitMatrix::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < n_; ++i) {
    for_each_bit(row(i), [&](int j) {
      if (j > i) out.emplace_back(i, j);
    });
  }
  return out;
}

VisibilityGraph build_visibility_graph(std::span<const Point2> points, const PolygonDomain& dom,
                                       std::optional<double> d_max) {
  if (d_max && !(*d_max > 0)) throw Error(ErrorCode::InvalidInput, "d_max must be positive");
  std::vector<std::size_t> outside;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!point_in_domain(points[i], dom)) outside.push_back(i);
  }
  if (!outside.empty()) {
    throw Error(ErrorCode::InvalidInput, std::to_string(outside.size()) + " point(s) outside the domain: " +
                                             edge_list(outside));
  }

  const int n = static_cast<int>(points.size());
  VisibilityGraph g{std::vector<Point2>(points.begin(), points.end()), BitMatrix(n), d_max};
  // Each iteration writes only row i, so rows can be filled in parallel.
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (d_max && distance(points[i], points[j]) > *d_max) continue;
      if (segment_in_domain(points[i], points[j], dom)) g.adjacency.set(i, j);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (g.adjacency.test(i, j)) g.adjacency.set(j, i);
    }
  }
  return g;
}

VisibilityGraph complete_graph(std::span<const Point2> points) {
  const int n = static_cast<int>(points.size());
  VisibilityGraph g{std::vector<Point2>(points.begin(), points.end()), BitMatrix(n), std::nullopt};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) g.adjacency.set(i, j);
    }
  }
  return g;
}

std::vector<int> mcs_order(const BitMatrix& adjacency) {
  const int n = adjacency.size();
  std::vector<int> weight(n, 0);
  std::vector<char> visited(n, 0);
  std::vector<int> order;
  order.reserve(n);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v) {
      if (!visited[v] && (best < 0 || weight[v] > weight[best])) best = v;
    }
    visited[best] = 1;
    order.push_back(best);
    for_each_bit(adjacency.row(best), [&](int u) {
      if (!visited[u]) ++weight[u];
    });
  }
  return order;
}

bool is_chordal(const BitMatrix& adjacency) {
  const auto order = mcs_order(adjacency);
  return first_peo_violation(adjacency, order, earlier_neighbors(adjacency, order)) < 0;
}

CompletedGraph chordal_completion(const BitMatrix& adjacency) {
  const int n = adjacency.size();
  CompletedGraph out{adjacency, {}};
  const auto order = mcs_order(adjacency);
  auto alive = make_bits(n);
  for (int v = 0; v < n; ++v) set_bit(alive, v);

  // Eliminate in reverse visit order; the remaining neighbors become a clique.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int v = *it;
    reset_bit(alive, v);
    std::vector<std::uint64_t> higher(alive.size());
    auto vrow = out.adjacency.row(v);
    for (std::size_t w = 0; w < alive.size(); ++w) higher[w] = vrow[w] & alive[w];
    for_each_bit(std::span<const std::uint64_t>(higher), [&](int u) {
      auto urow = out.adjacency.row(u);
      for (std::size_t w = 0; w < higher.size(); ++w) {
        std::uint64_t fresh = higher[w] & ~urow[w];
        if (static_cast<int>(w) == (u >> 6)) fresh &= ~(std::uint64_t{1} << (u & 63));
        if (!fresh) continue;
        urow[w] |= fresh;
        for_each_bit(std::span<const std::uint64_t>(&fresh, 1), [&](int b) {
          const int x = static_cast<int>(w * 64) + b;
          if (u < x) out.added_edges.emplace_back(u, x);
        });
      }
    });
  }
  std::sort(out.added_edges.begin(), out.added_edges.end());
  return out;
}

ChordalDecomposition perfect_ordering(const BitMatrix& chordal, std::vector<Edge> added_edges) {
  const int n = chordal.size();
  const auto order = mcs_order(chordal);
  const auto earlier = earlier_neighbors(chordal, order);
  if (int v = first_peo_violation(chordal, order, earlier); v >= 0) {
    throw Error(ErrorCode::NotChordal, "earlier neighbors of vertex " + std::to_string(v) + " are not a clique");
  }

  ChordalDecomposition d;
  d.n = n;
  d.added_edges = std::move(added_edges);
  std::vector<int> weight(n);
  for (int i = 0; i < n; ++i) {
    weight[i] = 0;
    for (std::uint64_t w : earlier[order[i]]) weight[i] += std::popcount(w);
  }
  auto covered = make_bits(n);
  for (int i = 0; i < n; ++i) {
    // The candidate clique of the i-th visited vertex is maximal unless the
    // next vertex extends it.
    if (i + 1 < n && weight[i + 1] > weight[i]) continue;
    const int v = order[i];
    std::vector<int> clique;
    for_each_bit(std::span<const std::uint64_t>(earlier[v]), [&](int u) { clique.push_back(u); });
    clique.push_back(v);
    std::sort(clique.begin(), clique.end());
    std::vector<int> sep;
    for (int u : clique) {
      if (test_bit(covered, u)) sep.push_back(u);
    }
    for (int u : clique) set_bit(covered, u);
    d.cliques.push_back(std::move(clique));
    d.separators.push_back(std::move(sep));
  }
  return d;
}

ChordalDecomposition decompose(const BitMatrix& adjacency) {
  auto completed = chordal_completion(adjacency);
  return perfect_ordering(completed.adjacency, std::move(completed.added_edges));
}

void check_decomposition(const ChordalDecomposition& d) {
  if (d.cliques.size() != d.separators.size()) throw Error(ErrorCode::NotChordal, "clique/separator count mismatch");
  std::vector<char> seen(d.n, 0);
  for (std::size_t i = 0; i < d.cliques.size(); ++i) {
    std::vector<int> expect;
    for (int u : d.cliques[i]) {
      if (u < 0 || u >= d.n) throw Error(ErrorCode::NotChordal, "vertex index out of range");
      if (seen[u]) expect.push_back(u);
    }
    std::vector<int> sep = d.separators[i];
    std::sort(sep.begin(), sep.end());
    std::sort(expect.begin(), expect.end());
    if (sep != expect) {
      throw Error(ErrorCode::NotChordal, "separator " + std::to_string(i) + " is not the running intersection");
    }
    if (!sep.empty()) {
      bool inside_earlier = false;
      for (std::size_t j = 0; j < i && !inside_earlier; ++j) {
        inside_earlier = std::all_of(sep.begin(), sep.end(), [&](int u) {
          return std::find(d.cliques[j].begin(), d.cliques[j].end(), u) != d.cliques[j].end();
        });
      }
      if (!inside_earlier) {
        throw Error(ErrorCode::NotChordal, "separator " + std::to_string(i) + " not contained in an earlier clique");
      }
    }
    for (int u : d.cliques[i]) seen[u] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorCode::NotChordal, "cliques do not cover every vertex");
  }
}

std::vector<std::vector<int>> maximal_cliques(const BitMatrix& adjacency, std::span<const int> vertices) {
  const int m = static_cast<int>(vertices.size());
  std::vector<std::vector<int>> out;
  if (m == 0) return out;
  // Local adjacency over positions in `vertices`.
  std::vector<std::vector<char>> adj(m, std::vector<char>(m, 0));
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) adj[a][b] = a != b && adjacency.test(vertices[a], vertices[b]);
  }

  std::vector<int> r;
  auto recurse = [&](auto&& self, std::vector<int> p, std::vector<int> x) -> void {
    if (p.empty() && x.empty()) {
      std::vector<int> c = r;
      std::sort(c.begin(), c.end());
      std::vector<int> ids;
      for (int a : c) ids.push_back(vertices[a]);
      out.push_back(std::move(ids));
      return;
    }
    int pivot = -1, best = -1;
    for (const auto* set : {&p, &x}) {
      for (int u : *set) {
        int cnt = 0;
        for (int v : p) cnt += adj[u][v];
        if (cnt > best) best = cnt, pivot = u;
      }
    }
    std::vector<int> candidates;
    for (int v : p) {
      if (!adj[pivot][v]) candidates.push_back(v);
    }
    for (int v : candidates) {
      std::vector<int> np, nx;
      for (int u : p) {
        if (adj[v][u]) np.push_back(u);
      }
      for (int u : x) {
        if (adj[v][u]) nx.push_back(u);
      }
      r.push_back(v);
      self(self, std::move(np), std::move(nx));
      r.pop_back();
      p.erase(std::find(p.begin(), p.end(), v));
      x.push_back(v);
    }
  };
  std::vector<int> all(m);
  for (int a = 0; a < m; ++a) all[a] = a;
  recurse(recurse, all, {});
  std::sort(out.begin(), out.end());
  return out;
}

CompletionReport completion_diagnostics(const ChordalDecomposition& decomp, const VisibilityGraph& g,
                                        const PolygonDomain& dom) {
  CompletionReport rep;
  rep.histogram.assign(5, 0);
  for (const Edge& e : decomp.added_edges) {
    AddedEdgeDiagnostic diag;
    diag.edge = e;
    const Point2 a = g.points[e.first], b = g.points[e.second];
    diag.euclidean = distance(a, b);
    diag.geodesic = geodesic_distance(a, b, dom);
    diag.ratio = diag.euclidean > 0 ? diag.geodesic / diag.euclidean : 1.0;
    diag.distorting = diag.ratio > 1.5;
    const double r = diag.ratio;
    const std::size_t bin = r < 1.1 ? 0 : r < 1.25 ? 1 : r < 1.5 ? 2 : r < 2.0 ? 3 : 4;
    ++rep.histogram[bin];
    rep.distorting += diag.distorting;
    rep.edges.push_back(diag);
  }
  rep.added = rep.edges.size();
  return rep;
}

nlohmann::json decomposition_to_json(const ChordalDecomposition& d) {
  nlohmann::json added = nlohmann::json::array();
  for (const Edge& e : d.added_edges) added.push_back({e.first, e.second});
  return {{"n", d.n}, {"cliques", d.cliques}, {"separators", d.separators}, {"added_edges", added}};
}

ChordalDecomposition decomposition_from_json(const nlohmann::json& j) {
  ChordalDecomposition d;
  d.cliques = j.at("cliques").get<std::vector<std::vector<int>>>();
  d.separators = j.at("separators").get<std::vector<std::vector<int>>>();
  for (const auto& e : j.at("added_edges")) d.added_edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  if (j.contains("n")) {
    d.n = j.at("n").get<int>();
  } else {
    for (const auto& c : d.cliques) {
      for (int u : c) d.n = std::max(d.n, u + 1);
    }
  }
  check_decomposition(d);
  return d;
}

std::uint64_t adjacency_content_hash(std::span<const Point2> points, std::string_view domain_bytes,
                                     std::optional<double> d_max) {
  std::uint64_t h = 14695981039346656037ULL;
  const std::uint64_t n = points.size();
  fnv1a(h, &n, sizeof(n));
  for (const Point2& p : points) {
    fnv1a(h, &p.x, sizeof(double));
    fnv1a(h, &p.y, sizeof(double));
  }
  fnv1a(h, domain_bytes.data(), domain_bytes.size());
  const double dm = d_max.value_or(0.0);
  fnv1a(h, &dm, sizeof(dm));
  return h;
}

void save_adjacency_cache(const std::filesystem::path& path, const VisibilityGraph& g, std::uint64_t hash) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::InvalidInput, "cannot write cache file " + path.string());
  os.write("VISG1", 5);
  const int n = g.size();
  write_le<std::uint64_t>(os, static_cast<std::uint64_t>(n));
  write_le<double>(os, g.d_max.value_or(0.0));
  write_le<std::uint64_t>(os, hash);
  std::vector<unsigned char> bytes((static_cast<std::size_t>(n) * n + 7) / 8, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (g.adjacency.test(i, j)) {
        const std::size_t bit = static_cast<std::size_t>(i) * n + j;
        bytes[bit >> 3] |= static_cast<unsigned char>(1u << (bit & 7));
      }
    }
  }
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::optional<BitMatrix> load_adjacency_cache(const std::filesystem::path& path, std::uint64_t expected_hash) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[5];
  if (!is.read(magic, 5) || std::memcmp(magic, "VISG1", 5) != 0) return std::nullopt;
  std::uint64_t n = 0, hash = 0;
  double d_max = 0;
  if (!read_le(is, n) || !read_le(is, d_max) || !read_le(is, hash)) return std::nullopt;
  if (hash != expected_hash || n > (1u << 20)) return std::nullopt;
  std::vector<unsigned char> bytes((n * n + 7) / 8);
  if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
    return std::nullopt;
  }
  BitMatrix m(static_cast<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t bit = i * n + j;
      if ((bytes[bit >> 3] >> (bit & 7)) & 1u) m.set(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return m;
}

}  // namespace visgp
