#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "slsmpc/csv.hpp"
#include "slsmpc/dataset.hpp"
#include "slsmpc/error.hpp"
#include "slsmpc/prob_graph.hpp"
#include "slsmpc/probfn.hpp"
#include "slsmpc/refine.hpp"

namespace slsmpc {

/// Cluster assignment over N samples. Canonical form numbers clusters
/// 0..C-1 in order of their smallest member.
struct Partition {
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }

  std::size_t cluster_count() const {
    std::vector<int> l = labels;
    std::sort(l.begin(), l.end());
    return static_cast<std::size_t>(std::unique(l.begin(), l.end()) - l.begin());
  }

  std::vector<std::vector<std::uint32_t>> clusters() const {
    auto c = canonical(*this);
    std::vector<std::vector<std::uint32_t>> out(c.cluster_count());
    for (std::size_t i = 0; i < c.labels.size(); ++i) out[static_cast<std::size_t>(c.labels[i])].push_back(static_cast<std::uint32_t>(i));
    return out;
  }

  static Partition canonical(const Partition& p) {
    Partition out;
    out.labels.resize(p.labels.size());
    std::vector<std::pair<int, int>> seen;  // (old, new)
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
      auto it = std::find_if(seen.begin(), seen.end(), [&](auto s) { return s.first == p.labels[i]; });
      if (it == seen.end()) {
        seen.emplace_back(p.labels[i], static_cast<int>(seen.size()));
        out.labels[i] = seen.back().second;
      } else {
        out.labels[i] = it->second;
      }
    }
    return out;
  }

  static Partition singletons(std::size_t n) {
    Partition p;
    p.labels.resize(n);
    std::iota(p.labels.begin(), p.labels.end(), 0);
    return p;
  }

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// w = log P(e=1) - log P(e=0), P clamped to [eps, 1 - eps].
inline double edge_weight(double p) {
  const double c = clamp_prob(p);
  return std::log(c) - std::log1p(-c);
}

/// Sum over stored intra-cluster edges of log P(e=0) - log P(e=1); lower is
/// better. The partition-independent constant is dropped.
inline double objective(const ProbGraph& g, const Partition& part) {
  if (part.size() != g.n()) throw ArgumentError("partition size does not match graph");
  double total = 0.0;
  for (const auto& e : g.edges())
    if (part.labels[e.i] == part.labels[e.j]) total -= edge_weight(e.p);
  return total;
}

struct ClusterOptions {
  std::size_t k = 20;
  std::size_t maxiter = 20;
  std::uint64_t seed = 0;
  /// Also offer a fresh singleton cluster as a move target.
  bool singleton_escape = true;
};

struct ClusterStats {
  std::size_t sweeps = 0;
  std::size_t moves = 0;
};

/// Local-move optimization from singletons. Each sweep visits samples in a
/// seeded random order and moves a sample to the candidate cluster (its
/// top-k neighbors' clusters, a fresh singleton) with the largest summed edge
/// log-odds, if that strictly beats staying. Stops after a sweep without
/// moves or after maxiter sweeps.
inline Partition cluster(const ProbGraph& g, const ClusterOptions& opts = {}, ClusterStats* stats = nullptr) {
  const auto n = g.n();
  if (n == 0) throw ArgumentError("cannot cluster an empty graph");
  if (opts.k == 0) throw ArgumentError("cluster k must be at least 1");
  std::vector<double> w(g.edge_count());
  for (std::size_t e = 0; e < g.edge_count(); ++e) w[e] = edge_weight(g.edge(e).p);
  const auto nbrs = top_k_neighbors(g, opts.k);

  std::vector<int> z(n);
  std::iota(z.begin(), z.end(), 0);
  std::vector<std::size_t> sizes(n, 1);
  std::set<int> empty_labels;

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opts.seed);

  std::vector<double> acc(n, 0.0);
  std::vector<int> touched;
  ClusterStats local;
  for (std::size_t it = 0; it < opts.maxiter; ++it) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t moves = 0;
    for (auto i : order) {
      touched.clear();
      for (const auto& inc : g.incident(i)) {
        const int lab = z[inc.neighbor];
        if (acc[static_cast<std::size_t>(lab)] == 0.0) touched.push_back(lab);
        acc[static_cast<std::size_t>(lab)] += w[inc.edge];
      }
      const int cur = z[i];
      const double stay = acc[static_cast<std::size_t>(cur)];
      double best_gain = stay;
      int best = cur;
      auto consider = [&](int lab, double gain) {
        if (lab == cur) return;
        if (gain > best_gain || (gain == best_gain && best != cur && lab < best)) {
          best_gain = gain;
          best = lab;
        }
      };
      for (auto h : nbrs[i]) consider(z[h], acc[static_cast<std::size_t>(z[h])]);
      if (opts.singleton_escape && sizes[static_cast<std::size_t>(cur)] > 1 && !empty_labels.empty()) {
        consider(*empty_labels.begin(), 0.0);
      }
      for (int lab : touched) acc[static_cast<std::size_t>(lab)] = 0.0;
      if (best == cur || !(best_gain > stay)) continue;

      if (--sizes[static_cast<std::size_t>(cur)] == 0) empty_labels.insert(cur);
      if (sizes[static_cast<std::size_t>(best)]++ == 0) empty_labels.erase(best);
      z[i] = best;
      ++moves;
    }
    ++local.sweeps;
    local.moves += moves;
    if (moves == 0) break;
  }
  if (stats) *stats = local;
  return Partition::canonical(Partition{std::move(z)});
}

inline constexpr std::size_t kOracleMaxSamples = 12;

/// Exact minimizer of objective() by enumerating all set partitions.
/// Ties prefer more clusters, then the lexicographically smallest canonical
/// labeling.
inline Partition oracle_cluster(const ProbGraph& g) {
  const auto n = g.n();
  if (n > kOracleMaxSamples) {
    throw ArgumentError("oracle clustering supports at most " + std::to_string(kOracleMaxSamples) + " samples");
  }
  if (n == 0) return {};
  // cost[i][j] for j < i: contribution when i and j share a cluster
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (const auto& e : g.edges()) cost[e.j][e.i] = -edge_weight(e.p);

  constexpr double tol = 1e-12;
  std::vector<int> labels(n, 0), best_labels;
  double best = 0.0;
  int best_clusters = -1;
  std::function<void(std::size_t, int, double)> rec = [&](std::size_t i, int used, double value) {
    if (i == n) {
      if (best_clusters < 0 || value < best - tol || (std::abs(value - best) <= tol && used > best_clusters)) {
        best = value;
        best_clusters = used;
        best_labels = labels;
      }
      return;
    }
    for (int lab = 0; lab <= used; ++lab) {
      labels[i] = lab;
      double v = value;
      for (std::size_t j = 0; j < i; ++j)
        if (labels[j] == lab) v += cost[i][j];
      rec(i + 1, std::max(used, lab + 1), v);
    }
  };
  labels[0] = 0;
  rec(1, 1, 0.0);
  return Partition{best_labels};
}

/// CSV rows "sample_index,label" under that header.
inline void write_partition(const Partition& p, const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << "sample_index,label\n";
  for (std::size_t i = 0; i < p.labels.size(); ++i) out << i << ',' << p.labels[i] << '\n';
}

inline Partition read_partition(const std::filesystem::path& path) { return Partition{read_labels(path)}; }

}  // namespace slsmpc
