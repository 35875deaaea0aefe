#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slsmpc/error.hpp"
#include "slsmpc/pair_table.hpp"
#include "slsmpc/prob_graph.hpp"
#include "slsmpc/probfn.hpp"

namespace slsmpc {

enum class Aggregation { formula, mean, max, min, multiply };

inline std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::formula: return "formula";
    case Aggregation::mean: return "mean";
    case Aggregation::max: return "max";
    case Aggregation::min: return "min";
    case Aggregation::multiply: return "multiply";
  }
  return "formula";
}

inline Aggregation parse_aggregation(const std::string& name) {
  for (auto a : {Aggregation::formula, Aggregation::mean, Aggregation::max, Aggregation::min, Aggregation::multiply})
    if (to_string(a) == name) return a;
  throw ArgumentError("unknown aggregation '" + name + "'");
}

/// Combines the per-view probabilities of one pair; result clamped to [0, 1].
inline double aggregate(std::span<const double> f, Aggregation agg) {
  if (f.empty()) throw DataError("pair observed in zero views");
  double r = 0.0;
  switch (agg) {
    case Aggregation::formula:
      r = eval_fjoint(f);
      break;
    case Aggregation::mean:
      for (double v : f) r += v;
      r /= static_cast<double>(f.size());
      break;
    case Aggregation::max:
      r = *std::max_element(f.begin(), f.end());
      break;
    case Aggregation::min:
      r = *std::min_element(f.begin(), f.end());
      break;
    case Aggregation::multiply:
      r = 1.0;
      for (double v : f) r *= v;
      break;
  }
  return std::clamp(r, 0.0, 1.0);
}

struct Anchor {
  std::size_t view;
  std::size_t segment;
};

/// Synthesized probability for a view the pair lacks: the geometric mean of
/// each observed anchor view's cross functional toward the target, read at
/// the anchor's segment. `cross` is indexed [anchor][target][segment].
/// Returns nullopt with fewer than two anchors.
inline std::optional<double> complete_view(const std::vector<std::vector<std::vector<double>>>& cross,
                                           std::span<const Anchor> anchors, std::size_t target) {
  if (anchors.size() < 2) return std::nullopt;
  double log_sum = 0.0;
  for (const auto& a : anchors) {
    if (a.view == target) throw ArgumentError("anchor view equals completion target");
    const double v = std::clamp(cross.at(a.view).at(target).at(a.segment), kProbEps, 1.0);
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(anchors.size()));
}

struct FusionOptions {
  Aggregation aggregation = Aggregation::formula;
  /// Fill unobserved views of a pair from cross functionals when it has at
  /// least two observed views. Requires `cross`.
  bool completion = false;
  const std::vector<std::vector<std::vector<double>>>* cross = nullptr;
};

/// Per-pair posterior P(e_ij = 1) over the table's pairs, from the functions
/// evaluated at each observed view's similarity.
inline ProbGraph fuse(const PairTable& table, const std::vector<PiecewiseProbFn>& fns, std::size_t n_samples,
                      const FusionOptions& opts = {}) {
  const auto m_count = table.n_views();
  if (fns.size() != m_count) {
    throw DataError("have " + std::to_string(fns.size()) + " functions for " + std::to_string(m_count) + " views");
  }
  if (opts.completion && !opts.cross) throw ArgumentError("view completion needs cross functionals");
  std::vector<ProbGraph::Edge> edges;
  edges.reserve(table.size());
  std::vector<double> vals;
  std::vector<Anchor> anchors;
  for (std::size_t t = 0; t < table.size(); ++t) {
    vals.clear();
    anchors.clear();
    for (std::size_t m = 0; m < m_count; ++m) {
      if (!table.observed(t, m)) continue;
      const double w = table.sim(t, m);
      vals.push_back(fns[m](w));
      anchors.push_back({m, fns[m].segment_of(w)});
    }
    if (vals.empty()) {
      throw DataError("pair (" + std::to_string(table.pair(t).first) + ", " + std::to_string(table.pair(t).second) +
                      ") is observed in zero views");
    }
    if (opts.completion && anchors.size() >= 2 && anchors.size() < m_count) {
      const auto observed_count = anchors.size();
      for (std::size_t m = 0; m < m_count; ++m) {
        if (table.observed(t, m)) continue;
        if (auto c = complete_view(*opts.cross, std::span<const Anchor>(anchors.data(), observed_count), m)) {
          vals.push_back(*c);
        }
      }
    }
    edges.push_back({table.pair(t).first, table.pair(t).second, aggregate(vals, opts.aggregation)});
  }
  return ProbGraph(n_samples, std::move(edges), Provenance::fused, to_string(opts.aggregation));
}

}  // namespace slsmpc
