#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "slsmpc/csv.hpp"
#include "slsmpc/dataset.hpp"
#include "slsmpc/error.hpp"

namespace slsmpc {

struct Metric {
  enum class Kind { cosine, lp };
  Kind kind = Kind::cosine;
  double p = 2.0;

  static Metric cosine() { return {Kind::cosine, 0.0}; }
  static Metric lp(double p) {
    if (!(p >= 1.0)) throw ArgumentError("L_p metric needs p >= 1");
    return {Kind::lp, p};
  }

  /// Accepts "cosine", "l1", "l2", "l3", ... .
  static Metric parse(const std::string& name) {
    if (name == "cosine") return cosine();
    if (name.size() >= 2 && (name[0] == 'l' || name[0] == 'L')) {
      try {
        return lp(std::stod(name.substr(1)));
      } catch (const std::logic_error&) {
      }
    }
    throw ArgumentError("unknown metric '" + name + "'");
  }

  std::string name() const {
    if (kind == Kind::cosine) return "cosine";
    auto s = csv::format_double(p);
    return "l" + s;
  }

  friend bool operator==(const Metric&, const Metric&) = default;
};

/// Dense symmetric N x N similarity for one view. Entries touching a sample
/// unobserved in that view are NaN and flagged invalid.
struct SimilarityMatrix {
  std::size_t view = 0;
  Metric metric;
  Eigen::MatrixXd entries;
  std::vector<std::uint8_t> observed;

  std::size_t size() const { return observed.size(); }
  bool valid(std::size_t i, std::size_t j) const { return observed[i] && observed[j]; }
  double operator()(std::size_t i, std::size_t j) const {
    assert(valid(i, j) && "similarity entry touches an unobserved sample");
    return entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
};

/// Cosine similarity, or for L_p: s = -distance min-max rescaled to [0, 1]
/// over valid pairs (self-pairs included), i.e. 1 - d / d_max.
inline SimilarityMatrix compute_similarity(const MultiViewDataset& ds, std::size_t view, Metric metric) {
  if (view >= ds.n_views()) throw ArgumentError("view index " + std::to_string(view) + " out of range");
  const auto n = static_cast<Eigen::Index>(ds.n_samples());
  const auto& x = ds.features(view);
  SimilarityMatrix sim;
  sim.view = view;
  sim.metric = metric;
  sim.observed = ds.mask(view);
  sim.entries = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());

  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < n; ++i)
    if (sim.observed[static_cast<std::size_t>(i)]) idx.push_back(i);
  const auto n_obs = static_cast<Eigen::Index>(idx.size());

  // compact the observed columns so unobserved ones are never touched
  Eigen::MatrixXd obs(x.rows(), n_obs);
  for (Eigen::Index c = 0; c < n_obs; ++c) obs.col(c) = x.col(idx[static_cast<std::size_t>(c)]);

  Eigen::MatrixXd block(n_obs, n_obs);
  if (metric.kind == Metric::Kind::cosine) {
    Eigen::VectorXd norms = obs.colwise().norm().transpose();
    for (Eigen::Index c = 0; c < n_obs; ++c) {
      if (!(norms(c) > 0.0)) {
        throw DataError("zero-norm feature vector for sample " + std::to_string(idx[static_cast<std::size_t>(c)]) +
                        " in view " + std::to_string(view) + " under cosine similarity");
      }
      obs.col(c) /= norms(c);
    }
    block.noalias() = obs.transpose() * obs;
    block = block.cwiseMax(-1.0).cwiseMin(1.0);
    block.diagonal().setOnes();
  } else {
    const double p = metric.p;
    double dmax = 0.0;
    for (Eigen::Index a = 0; a < n_obs; ++a) {
      block(a, a) = 0.0;
      for (Eigen::Index b = a + 1; b < n_obs; ++b) {
        double d;
        if (p == 1.0) {
          d = (obs.col(a) - obs.col(b)).cwiseAbs().sum();
        } else if (p == 2.0) {
          d = (obs.col(a) - obs.col(b)).norm();
        } else {
          d = std::pow((obs.col(a) - obs.col(b)).cwiseAbs().array().pow(p).sum(), 1.0 / p);
        }
        block(a, b) = block(b, a) = d;
        dmax = std::max(dmax, d);
      }
    }
    if (dmax > 0.0) {
      block = (1.0 - block.array() / dmax).matrix();
    } else {
      block.setOnes();
    }
  }
  for (Eigen::Index a = 0; a < n_obs; ++a)
    for (Eigen::Index b = 0; b < n_obs; ++b)
      sim.entries(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]) = block(a, b);
  return sim;
}

/// Per observed sample, the k most similar other observed samples, sorted by
/// descending similarity (ties: lower index first). Unobserved samples get
/// empty lists.
struct KnnLists {
  std::size_t view = 0;
  std::size_t k = 0;
  std::vector<std::vector<std::uint32_t>> neighbors;
};

inline KnnLists build_knn(const SimilarityMatrix& sim, std::size_t k) {
  if (k == 0) throw ArgumentError("k must be at least 1");
  const auto n = sim.size();
  KnnLists out;
  out.view = sim.view;
  out.k = k;
  out.neighbors.resize(n);
  std::vector<std::uint32_t> cand;
  for (std::size_t i = 0; i < n; ++i) {
    if (!sim.observed[i]) continue;
    cand.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && sim.observed[j]) cand.push_back(static_cast<std::uint32_t>(j));
    const auto take = std::min(k, cand.size());
    auto better = [&](std::uint32_t a, std::uint32_t b) {
      const double sa = sim(i, a), sb = sim(i, b);
      if (sa != sb) return sa > sb;
      return a < b;
    };
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(), better);
    out.neighbors[i].assign(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

/// Per-sample union of neighbor sets across views, sorted ascending.
inline std::vector<std::vector<std::uint32_t>> knn_union(const std::vector<KnnLists>& lists, std::size_t n) {
  std::vector<std::vector<std::uint32_t>> out(n);
  for (const auto& l : lists)
    for (std::size_t i = 0; i < l.neighbors.size(); ++i)
      out[i].insert(out[i].end(), l.neighbors[i].begin(), l.neighbors[i].end());
  for (auto& v : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

/// (i, j, w) triples of the valid upper triangle.
inline void write_similarity_csv(const SimilarityMatrix& sim, const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << "i,j,w\n";
  for (std::size_t i = 0; i < sim.size(); ++i)
    for (std::size_t j = i + 1; j < sim.size(); ++j)
      if (sim.valid(i, j)) out << i << ',' << j << ',' << csv::format_double(sim(i, j)) << '\n';
}

}  // namespace slsmpc
