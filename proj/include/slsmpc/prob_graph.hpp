#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "slsmpc/csv.hpp"
#include "slsmpc/error.hpp"

namespace slsmpc {

enum class Provenance { fused, refined };

inline std::string to_string(Provenance p) { return p == Provenance::fused ? "fused" : "refined"; }

/// Sparse symmetric store of pairwise same-class probabilities. Edges are kept
/// once with i < j; per-sample incidence lists give O(log deg) lookup.
class ProbGraph {
 public:
  struct Edge {
    std::uint32_t i;
    std::uint32_t j;
    double p;
  };
  struct Incident {
    std::uint32_t neighbor;
    std::uint32_t edge;
  };

  ProbGraph() = default;

  ProbGraph(std::size_t n, std::vector<Edge> edges, Provenance provenance = Provenance::fused,
            std::string aggregation = "formula")
      : n_(n), edges_(std::move(edges)), provenance_(provenance), aggregation_(std::move(aggregation)) {
    for (auto& e : edges_) {
      if (e.i == e.j) throw DataError("self-edge on sample " + std::to_string(e.i));
      if (e.i > e.j) std::swap(e.i, e.j);
      if (e.j >= n_) throw DataError("edge endpoint " + std::to_string(e.j) + " out of range");
      if (!(e.p >= 0.0 && e.p <= 1.0)) throw DataError("edge probability outside [0, 1]");
    }
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (std::size_t e = 1; e < edges_.size(); ++e) {
      if (edges_[e].i == edges_[e - 1].i && edges_[e].j == edges_[e - 1].j) {
        throw DataError("duplicate edge (" + std::to_string(edges_[e].i) + ", " + std::to_string(edges_[e].j) + ")");
      }
    }
    build_incidence();
  }

  std::size_t n() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_[e]; }

  Provenance provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = p; }
  const std::string& aggregation() const { return aggregation_; }

  std::span<const Incident> incident(std::size_t i) const {
    return {incidence_.data() + offsets_[i], incidence_.data() + offsets_[i + 1]};
  }

  std::optional<std::size_t> find(std::size_t i, std::size_t j) const {
    auto inc = incident(i);
    auto it = std::lower_bound(inc.begin(), inc.end(), j,
                               [](const Incident& a, std::size_t v) { return a.neighbor < v; });
    if (it == inc.end() || it->neighbor != j) return std::nullopt;
    return it->edge;
  }

  /// P(i, j) = P(j, i), or nullopt when the pair is not stored.
  std::optional<double> get(std::size_t i, std::size_t j) const {
    if (auto e = find(i, j)) return edges_[*e].p;
    return std::nullopt;
  }

  void set(std::size_t edge, double p) { edges_[edge].p = p; }

  friend bool operator==(const ProbGraph& a, const ProbGraph& b) {
    if (a.n_ != b.n_ || a.edges_.size() != b.edges_.size()) return false;
    for (std::size_t e = 0; e < a.edges_.size(); ++e) {
      const auto &x = a.edges_[e], &y = b.edges_[e];
      if (x.i != y.i || x.j != y.j || x.p != y.p) return false;
    }
    return true;
  }

 private:
  void build_incidence() {
    offsets_.assign(n_ + 1, 0);
    for (const auto& e : edges_) {
      ++offsets_[e.i + 1];
      ++offsets_[e.j + 1];
    }
    for (std::size_t i = 0; i < n_; ++i) offsets_[i + 1] += offsets_[i];
    incidence_.resize(offsets_.back());
    auto fill = offsets_;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      incidence_[fill[edges_[e].i]++] = {edges_[e].j, static_cast<std::uint32_t>(e)};
      incidence_[fill[edges_[e].j]++] = {edges_[e].i, static_cast<std::uint32_t>(e)};
    }
    for (std::size_t i = 0; i < n_; ++i) {
      std::sort(incidence_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                incidence_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]),
                [](const Incident& a, const Incident& b) { return a.neighbor < b.neighbor; });
    }
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  Provenance provenance_ = Provenance::fused;
  std::string aggregation_ = "formula";
  std::vector<std::size_t> offsets_;
  std::vector<Incident> incidence_;
};

/// First line: "# probgraph n=<N> provenance=<fused|refined> aggregation=<name>",
/// then one "i,j,p" row per edge.
inline void write_prob_graph(const ProbGraph& g, const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << "# probgraph n=" << g.n() << " provenance=" << to_string(g.provenance()) << " aggregation=" << g.aggregation()
      << '\n';
  for (const auto& e : g.edges()) out << e.i << ',' << e.j << ',' << csv::format_double(e.p) << '\n';
}

inline ProbGraph read_prob_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string header;
  std::getline(in, header);
  if (header.rfind("# probgraph", 0) != 0) throw DataError(path.string() + ": missing probgraph header");
  std::size_t n = 0;
  bool have_n = false;
  Provenance prov = Provenance::fused;
  std::string agg = "formula";
  std::istringstream hs(header.substr(11));
  std::string tok;
  while (hs >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "n") {
      n = static_cast<std::size_t>(csv::parse_int(val, path.string()));
      have_n = true;
    } else if (key == "provenance") {
      prov = val == "refined" ? Provenance::refined : Provenance::fused;
    } else if (key == "aggregation") {
      agg = val;
    }
  }
  if (!have_n) throw DataError(path.string() + ": header lacks n=");
  std::vector<ProbGraph::Edge> edges;
  std::string line;
  while (std::getline(in, line)) {
    auto t = csv::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto row = csv::split(t);
    if (row.size() != 3) throw DataError(path.string() + ": edge rows need 3 fields");
    auto i = csv::parse_int(row[0], path.string());
    auto j = csv::parse_int(row[1], path.string());
    if (i < 0 || j < 0) throw DataError(path.string() + ": negative sample index");
    edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), csv::parse_double(row[2], path.string())});
  }
  return ProbGraph(n, std::move(edges), prov, agg);
}

}  // namespace slsmpc
