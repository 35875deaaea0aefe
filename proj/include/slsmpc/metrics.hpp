#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slsmpc/error.hpp"

namespace slsmpc {

/// Counts n_ij of items with predicted cluster i and true class j, plus the
/// row and column margins.
struct Contingency {
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::vector<std::size_t> row_of;  // per item
  std::vector<std::size_t> col_of;
  std::size_t n = 0;

  Contingency(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) {
      throw ArgumentError("label vectors differ in length: " + std::to_string(pred.size()) + " vs " +
                          std::to_string(truth.size()));
    }
    n = pred.size();
    row_of = dense(pred);
    col_of = dense(truth);
    std::size_t r = 0, c = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r = std::max(r, row_of[i] + 1);
      c = std::max(c, col_of[i] + 1);
    }
    counts.assign(r, std::vector<std::size_t>(c, 0));
    rows.assign(r, 0);
    cols.assign(c, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[row_of[i]][col_of[i]];
      ++rows[row_of[i]];
      ++cols[col_of[i]];
    }
  }

  /// Same partition up to relabeling.
  bool identical() const {
    if (rows.size() != cols.size()) return false;
    for (const auto& row : counts) {
      std::size_t nonzero = 0;
      for (auto v : row) nonzero += v > 0;
      if (nonzero != 1) return false;
    }
    return true;
  }

 private:
  static std::vector<std::size_t> dense(std::span<const int> labels) {
    std::map<int, std::size_t> ids;
    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto [it, inserted] = ids.emplace(labels[i], ids.size());
      out[i] = it->second;
    }
    return out;
  }
};

namespace detail {

inline double pairs_of(std::size_t k) { return 0.5 * static_cast<double>(k) * (static_cast<double>(k) - 1.0); }

inline double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace detail

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  /// Set when a denominator was empty and the affected value defaulted to 0.
  bool degenerate = false;
};

inline PRF pairwise_prf(std::span<const int> pred, std::span<const int> truth) {
  Contingency ct(pred, truth);
  double tp = 0.0, pred_pairs = 0.0, true_pairs = 0.0;
  for (const auto& row : ct.counts)
    for (auto v : row) tp += detail::pairs_of(v);
  for (auto a : ct.rows) pred_pairs += detail::pairs_of(a);
  for (auto b : ct.cols) true_pairs += detail::pairs_of(b);
  PRF out;
  if (pred_pairs > 0.0) out.precision = tp / pred_pairs;
  else out.degenerate = true;
  if (true_pairs > 0.0) out.recall = tp / true_pairs;
  else out.degenerate = true;
  out.fscore = detail::harmonic(out.precision, out.recall);
  return out;
}

inline PRF bcubed_prf(std::span<const int> pred, std::span<const int> truth) {
  Contingency ct(pred, truth);
  PRF out;
  if (ct.n == 0) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < ct.n; ++i) {
    const double overlap = static_cast<double>(ct.counts[ct.row_of[i]][ct.col_of[i]]);
    out.precision += overlap / static_cast<double>(ct.rows[ct.row_of[i]]);
    out.recall += overlap / static_cast<double>(ct.cols[ct.col_of[i]]);
  }
  out.precision /= static_cast<double>(ct.n);
  out.recall /= static_cast<double>(ct.n);
  out.fscore = detail::harmonic(out.precision, out.recall);
  return out;
}

enum class NmiNorm { sqrt, max, arithmetic };

inline NmiNorm parse_nmi_norm(const std::string& s) {
  if (s == "sqrt") return NmiNorm::sqrt;
  if (s == "max") return NmiNorm::max;
  if (s == "arithmetic") return NmiNorm::arithmetic;
  throw ArgumentError("unknown NMI normalization '" + s + "'");
}

/// Normalized mutual information with natural logs. When either partition
/// has zero entropy the result is 1 for identical partitions and 0 otherwise.
inline double nmi(std::span<const int> pred, std::span<const int> truth, NmiNorm norm = NmiNorm::sqrt) {
  Contingency ct(pred, truth);
  if (ct.identical()) return 1.0;
  const double n = static_cast<double>(ct.n);
  auto entropy = [&](const std::vector<std::size_t>& margin) {
    double h = 0.0;
    for (auto a : margin)
      if (a > 0) h -= (static_cast<double>(a) / n) * std::log(static_cast<double>(a) / n);
    return h;
  };
  const double hp = entropy(ct.rows), ht = entropy(ct.cols);
  if (hp <= 0.0 || ht <= 0.0) return ct.identical() ? 1.0 : 0.0;
  double mi = 0.0;
  for (std::size_t r = 0; r < ct.rows.size(); ++r)
    for (std::size_t c = 0; c < ct.cols.size(); ++c) {
      const double v = static_cast<double>(ct.counts[r][c]);
      if (v > 0) mi += (v / n) * std::log(n * v / (static_cast<double>(ct.rows[r]) * static_cast<double>(ct.cols[c])));
    }
  double denom = 0.0;
  switch (norm) {
    case NmiNorm::sqrt: denom = std::sqrt(hp * ht); break;
    case NmiNorm::max: denom = std::max(hp, ht); break;
    case NmiNorm::arithmetic: denom = 0.5 * (hp + ht); break;
  }
  return std::clamp(mi / denom, 0.0, 1.0);
}

/// Adjusted Rand index. Degenerate cases (expected index equal to its
/// maximum) give 1 for identical partitions and 0 otherwise.
inline double ari(std::span<const int> pred, std::span<const int> truth) {
  Contingency ct(pred, truth);
  if (ct.identical()) return 1.0;
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& row : ct.counts)
    for (auto v : row) index += detail::pairs_of(v);
  for (auto a : ct.rows) sum_a += detail::pairs_of(a);
  for (auto b : ct.cols) sum_b += detail::pairs_of(b);
  const double total = detail::pairs_of(ct.n);
  if (total == 0.0) return 0.0;
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 0.0;
  return (index - expected) / (max_index - expected);
}

struct MetricReport {
  PRF pairwise;
  PRF bcubed;
  double nmi = 0.0;
  double ari = 0.0;
  NmiNorm norm = NmiNorm::sqrt;
};

inline MetricReport evaluate(std::span<const int> pred, std::span<const int> truth, NmiNorm norm = NmiNorm::sqrt) {
  return {pairwise_prf(pred, truth), bcubed_prf(pred, truth), nmi(pred, truth, norm), ari(pred, truth), norm};
}

inline nlohmann::json to_json(const MetricReport& r) {
  auto prf = [](const PRF& p) {
    nlohmann::json j = {{"p", p.precision}, {"r", p.recall}, {"f", p.fscore}};
    if (p.degenerate) j["warning"] = "empty denominator";
    return j;
  };
  return {{"pairwise", prf(r.pairwise)}, {"bcubed", prf(r.bcubed)}, {"nmi", r.nmi}, {"ari", r.ari}};
}

}  // namespace slsmpc
