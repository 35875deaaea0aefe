#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "slsmpc/csv.hpp"
#include "slsmpc/error.hpp"
#include "slsmpc/similarity.hpp"

namespace slsmpc {

using SamplePair = std::pair<std::uint32_t, std::uint32_t>;

/// Training pairs with their per-view similarities and equal-population
/// segment assignment. Segment indices are 0-based; -1 marks a pair that is
/// unobserved in that view.
class PairTable {
 public:
  PairTable() = default;

  /// `sims` is T x M; entries where `observed` is false are ignored.
  PairTable(std::vector<SamplePair> pairs, Eigen::MatrixXd sims, std::vector<std::uint8_t> observed,
            std::size_t n_segments)
      : pairs_(std::move(pairs)), sims_(std::move(sims)), observed_(std::move(observed)), n_segments_(n_segments) {
    assign_segments();
  }

  std::size_t size() const { return pairs_.size(); }
  std::size_t n_views() const { return static_cast<std::size_t>(sims_.cols()); }
  std::size_t n_segments() const { return n_segments_; }

  const std::vector<SamplePair>& pairs() const { return pairs_; }
  const SamplePair& pair(std::size_t t) const { return pairs_[t]; }
  bool observed(std::size_t t, std::size_t m) const { return observed_[t * n_views() + m] != 0; }
  double sim(std::size_t t, std::size_t m) const {
    return sims_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m));
  }
  int seg(std::size_t t, std::size_t m) const { return segs_[t * n_views() + m]; }

  /// Pair indices in segment s of view m, in ascending similarity order.
  const std::vector<std::uint32_t>& members(std::size_t m, std::size_t s) const { return members_[m][s]; }
  const std::vector<double>& seg_means(std::size_t m) const { return means_[m]; }
  /// I + 1 cut points: first/last observed similarity at the ends, midpoints
  /// between neighbouring segments inside.
  const std::vector<double>& seg_bounds(std::size_t m) const { return bounds_[m]; }

 private:
  void assign_segments() {
    const auto t_count = pairs_.size();
    const auto m_count = n_views();
    if (observed_.size() != t_count * m_count) throw DataError("pair table: observation flags have the wrong size");
    if (static_cast<std::size_t>(sims_.rows()) != t_count) throw DataError("pair table: similarity rows != pair count");
    if (n_segments_ < 2) throw ArgumentError("need at least 2 segments");
    segs_.assign(t_count * m_count, -1);
    members_.assign(m_count, std::vector<std::vector<std::uint32_t>>(n_segments_));
    means_.assign(m_count, std::vector<double>(n_segments_, 0.0));
    bounds_.assign(m_count, std::vector<double>(n_segments_ + 1, 0.0));

    for (std::size_t m = 0; m < m_count; ++m) {
      std::vector<std::uint32_t> order;
      for (std::size_t t = 0; t < t_count; ++t)
        if (observed(t, m)) order.push_back(static_cast<std::uint32_t>(t));
      const auto n_obs = order.size();
      if (n_obs < n_segments_) {
        throw DataError("view " + std::to_string(m) + " has " + std::to_string(n_obs) +
                        " observed training pairs, fewer than " + std::to_string(n_segments_) + " segments");
      }
      std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return sim(a, m) < sim(b, m); });
      for (std::size_t s = 0; s < n_segments_; ++s) {
        const auto lo = s * n_obs / n_segments_;
        const auto hi = (s + 1) * n_obs / n_segments_;
        double sum = 0.0;
        for (auto r = lo; r < hi; ++r) {
          segs_[order[r] * m_count + m] = static_cast<int>(s);
          members_[m][s].push_back(order[r]);
          sum += sim(order[r], m);
        }
        means_[m][s] = sum / static_cast<double>(hi - lo);
        if (s > 0) bounds_[m][s] = 0.5 * (sim(order[lo - 1], m) + sim(order[lo], m));
      }
      bounds_[m].front() = sim(order.front(), m);
      bounds_[m].back() = sim(order.back(), m);
    }
  }

  std::vector<SamplePair> pairs_;
  Eigen::MatrixXd sims_;
  std::vector<std::uint8_t> observed_;
  std::size_t n_segments_ = 0;
  std::vector<int> segs_;
  std::vector<std::vector<std::vector<std::uint32_t>>> members_;
  std::vector<std::vector<double>> means_;
  std::vector<std::vector<double>> bounds_;
};

/// Union of all views' KNN edges (undirected, deduplicated, p < q), with
/// similarities looked up in every view where both samples are observed.
inline std::vector<SamplePair> knn_edge_union(const std::vector<KnnLists>& knn) {
  std::vector<SamplePair> pairs;
  for (const auto& lists : knn) {
    for (std::size_t i = 0; i < lists.neighbors.size(); ++i) {
      for (auto j : lists.neighbors[i]) {
        auto a = static_cast<std::uint32_t>(i);
        pairs.emplace_back(std::min(a, j), std::max(a, j));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

inline PairTable build_pair_table(const std::vector<KnnLists>& knn, const std::vector<SimilarityMatrix>& sims,
                                  std::size_t n_segments) {
  if (sims.size() < 2) throw ArgumentError("pair table needs at least 2 views");
  auto pairs = knn_edge_union(knn);
  const auto m_count = sims.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(pairs.size()),
                                                static_cast<Eigen::Index>(m_count),
                                                std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> obs(pairs.size() * m_count, 0);
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto [p, q] = pairs[t];
    for (std::size_t m = 0; m < m_count; ++m) {
      if (!sims[m].valid(p, q)) continue;
      obs[t * m_count + m] = 1;
      w(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m)) = sims[m](p, q);
    }
  }
  return PairTable(std::move(pairs), std::move(w), std::move(obs), n_segments);
}

/// CSV: header "p,q,w0,...,w{M-1}"; an empty field marks an unobserved view.
inline void write_pair_table(const PairTable& table, const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << "p,q";
  for (std::size_t m = 0; m < table.n_views(); ++m) out << ",w" << m;
  out << '\n';
  for (std::size_t t = 0; t < table.size(); ++t) {
    out << table.pair(t).first << ',' << table.pair(t).second;
    for (std::size_t m = 0; m < table.n_views(); ++m) {
      out << ',';
      if (table.observed(t, m)) out << csv::format_double(table.sim(t, m));
    }
    out << '\n';
  }
}

inline PairTable read_pair_table(const std::filesystem::path& path, std::size_t n_segments) {
  auto rows = csv::read_rows(path);
  if (rows.empty() || rows.front().size() < 3 || rows.front()[0] != "p") {
    throw DataError(path.string() + ": not a pair-table CSV");
  }
  const auto m_count = rows.front().size() - 2;
  std::vector<SamplePair> pairs;
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(rows.size() - 1),
                                                static_cast<Eigen::Index>(m_count),
                                                std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> obs((rows.size() - 1) * m_count, 0);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != m_count + 2) throw DataError(path.string() + ": row " + std::to_string(r) + " has wrong width");
    auto p = csv::parse_int(row[0], path.string());
    auto q = csv::parse_int(row[1], path.string());
    if (p < 0 || q < 0 || p >= q) throw DataError(path.string() + ": pairs must satisfy 0 <= p < q");
    pairs.emplace_back(static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(q));
    const auto t = r - 1;
    for (std::size_t m = 0; m < m_count; ++m) {
      if (row[m + 2].empty()) continue;
      obs[t * m_count + m] = 1;
      w(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m)) = csv::parse_double(row[m + 2], path.string());
    }
  }
  return PairTable(std::move(pairs), std::move(w), std::move(obs), n_segments);
}

}  // namespace slsmpc
