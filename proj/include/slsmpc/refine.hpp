#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "slsmpc/csv.hpp"
#include "slsmpc/error.hpp"
#include "slsmpc/prob_graph.hpp"

namespace slsmpc {

using NeighborSets = std::vector<std::vector<std::uint32_t>>;

/// Neighbor sets taken from the graph's own adjacency.
inline NeighborSets adjacency_sets(const ProbGraph& g) {
  NeighborSets out(g.n());
  for (std::size_t i = 0; i < g.n(); ++i)
    for (const auto& inc : g.incident(i)) out[i].push_back(inc.neighbor);
  return out;
}

/// CSV under the header "sample_index,neighbors"; neighbors are
/// space-separated sample indices.
inline void write_neighbor_sets(const NeighborSets& sets, const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << "sample_index,neighbors\n";
  for (std::size_t i = 0; i < sets.size(); ++i) {
    out << i << ',';
    for (std::size_t r = 0; r < sets[i].size(); ++r) out << (r ? " " : "") << sets[i][r];
    out << '\n';
  }
}

inline NeighborSets read_neighbor_sets(const std::filesystem::path& path) {
  auto rows = csv::read_rows(path);
  if (rows.empty() || rows.front().size() != 2 || rows.front()[0] != "sample_index") {
    throw DataError(path.string() + ": not a neighbor-set CSV");
  }
  NeighborSets out(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw DataError(path.string() + ": row " + std::to_string(r) + " needs 2 fields");
    const auto i = csv::parse_int(rows[r][0], path.string());
    if (i < 0 || static_cast<std::size_t>(i) >= out.size()) throw DataError(path.string() + ": sample index out of range");
    std::istringstream ss(rows[r][1]);
    std::string tok;
    auto& v = out[static_cast<std::size_t>(i)];
    while (ss >> tok) v.push_back(static_cast<std::uint32_t>(csv::parse_int(tok, path.string())));
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

namespace detail {

template <typename Fn>
void for_each_common(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b, Fn&& fn) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      fn(*ia);
      ++ia;
      ++ib;
    }
  }
}

}  // namespace detail

/// One synchronous pass of P(i,j) <- max(P(i,j), max_h P(i,h) P(h,j)) over
/// h in knn_i ∩ knn_j. `neighbors` must hold sorted per-sample sets; pairs
/// (i,h) missing from the graph contribute no path.
inline ProbGraph path_propagate(const ProbGraph& g, const NeighborSets& neighbors) {
  if (neighbors.size() != g.n()) throw ArgumentError("neighbor sets do not match graph size");
  ProbGraph out = g;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edge(e);
    double best = edge.p;
    detail::for_each_common(neighbors[edge.i], neighbors[edge.j], [&](std::uint32_t h) {
      if (h == edge.i || h == edge.j) return;
      auto pih = g.get(edge.i, h);
      auto phj = g.get(h, edge.j);
      if (pih && phj) best = std::max(best, *pih * *phj);
    });
    out.set(e, best);
  }
  out.set_provenance(Provenance::refined);
  return out;
}

/// Per sample, the k incident edges with the highest probability
/// (ties: lower neighbor index), returned as sorted sets.
inline NeighborSets top_k_neighbors(const ProbGraph& g, std::size_t k) {
  NeighborSets out(g.n());
  std::vector<ProbGraph::Incident> cand;
  for (std::size_t i = 0; i < g.n(); ++i) {
    auto inc = g.incident(i);
    cand.assign(inc.begin(), inc.end());
    const auto take = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                      [&](const ProbGraph::Incident& a, const ProbGraph::Incident& b) {
                        const double pa = g.edge(a.edge).p, pb = g.edge(b.edge).p;
                        if (pa != pb) return pa > pb;
                        return a.neighbor < b.neighbor;
                      });
    for (std::size_t r = 0; r < take; ++r) out[i].push_back(cand[r].neighbor);
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

/// One synchronous pass of
///   P(i,j) <- sum_{h in knn_i ∩ knn_j} (P(i,h) + P(j,h)) /
///             (sum_{h in knn_i} P(i,h) + sum_{h in knn_j} P(j,h))
/// with knn recomputed as the top-k incident edges of the current graph.
inline ProbGraph co_neighbor_propagate(const ProbGraph& g, std::size_t k) {
  if (k == 0) throw ArgumentError("co-neighbor k must be at least 1");
  const auto knn = top_k_neighbors(g, k);
  std::vector<double> mass(g.n(), 0.0);
  for (std::size_t i = 0; i < g.n(); ++i) {
    if (knn[i].empty()) {
      throw DataError("sample " + std::to_string(i) + " has no neighbors; graph too sparse for co-neighbor propagation");
    }
    for (auto h : knn[i]) mass[i] += *g.get(i, h);
  }
  ProbGraph out = g;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edge(e);
    double num = 0.0;
    detail::for_each_common(knn[edge.i], knn[edge.j], [&](std::uint32_t h) {
      num += *g.get(edge.i, h) + *g.get(edge.j, h);
    });
    const double den = mass[edge.i] + mass[edge.j];
    out.set(e, den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0);
  }
  out.set_provenance(Provenance::refined);
  return out;
}

struct RefineOptions {
  /// Rounds of (path pass, co-neighbor pass); 0 leaves the graph unchanged.
  std::size_t passes = 1;
  std::size_t coneighbor_k = 20;
  bool path = true;
  bool coneighbor = true;
};

inline ProbGraph refine(const ProbGraph& g, const NeighborSets& neighbors, const RefineOptions& opts) {
  ProbGraph cur = g;
  for (std::size_t r = 0; r < opts.passes; ++r) {
    if (opts.path) cur = path_propagate(cur, neighbors);
    if (opts.coneighbor) cur = co_neighbor_propagate(cur, opts.coneighbor_k);
  }
  return cur;
}

/// The three-sample path bound q = (bc + (1-b-c)/2) / (bc/2 + 1 - b/2 - c/2)
/// for a fuzzy direct link P(i,j) = 0.5, and whether q >= bc.
struct PathBound {
  double q;
  bool holds;
};

inline PathBound check_path_bound(double b, double c) {
  if (!(b > 0.0 && b < 1.0 && c > 0.0 && c < 1.0)) throw ArgumentError("path bound needs 0 < b, c < 1");
  const double q = (b * c + 0.5 * (1.0 - b - c)) / (0.5 * b * c + 1.0 - 0.5 * b - 0.5 * c);
  return {q, q >= b * c};
}

}  // namespace slsmpc
