#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <slsmpc.hpp>

namespace testing_support {

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::path(SLSMPC_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Graph over n samples with every listed pair; p given per pair.
inline slsmpc::ProbGraph graph(std::size_t n, const std::vector<slsmpc::ProbGraph::Edge>& edges) {
  return slsmpc::ProbGraph(n, edges);
}

// Complete graph with P(i,j) = prob(i, j).
template <typename Fn>
slsmpc::ProbGraph complete_graph(std::size_t n, Fn prob) {
  std::vector<slsmpc::ProbGraph::Edge> edges;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) edges.push_back({i, j, prob(i, j)});
  return slsmpc::ProbGraph(n, std::move(edges));
}

// Pair table straight from per-view similarity columns; NaN marks unobserved.
inline slsmpc::PairTable table_from_columns(const std::vector<std::vector<double>>& cols, std::size_t segments) {
  const auto t_count = cols.front().size();
  std::vector<slsmpc::SamplePair> pairs;
  for (std::uint32_t t = 0; t < t_count; ++t) pairs.emplace_back(t, t + 1 + static_cast<std::uint32_t>(t_count));
  Eigen::MatrixXd w(static_cast<Eigen::Index>(t_count), static_cast<Eigen::Index>(cols.size()));
  std::vector<std::uint8_t> obs(t_count * cols.size(), 0);
  for (std::size_t t = 0; t < t_count; ++t)
    for (std::size_t m = 0; m < cols.size(); ++m) {
      w(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m)) = cols[m][t];
      obs[t * cols.size() + m] = !std::isnan(cols[m][t]);
    }
  return slsmpc::PairTable(std::move(pairs), std::move(w), std::move(obs), segments);
}

// Pair table of the small Gaussian fixture.
inline slsmpc::PairTable synth_table(std::size_t segments, std::size_t k, std::uint64_t seed = 0,
                                     std::size_t per_cluster = 50) {
  slsmpc::SynthSpec spec;
  spec.per_cluster = per_cluster;
  spec.seed = seed;
  auto ds = slsmpc::synth_gaussian(spec);
  std::vector<slsmpc::SimilarityMatrix> sims;
  std::vector<slsmpc::KnnLists> knn;
  for (std::size_t m = 0; m < ds.n_views(); ++m) {
    sims.push_back(slsmpc::compute_similarity(ds, m, slsmpc::Metric::cosine()));
    knn.push_back(slsmpc::build_knn(sims.back(), k));
  }
  return slsmpc::build_pair_table(knn, sims, segments);
}

}  // namespace testing_support
