// Clusters a small synthetic two-view dataset with half the views missing.

#include <iostream>

#include <slsmpc.hpp>

int main() {
  using namespace slsmpc;
  auto cfg = profile_config("synth");
  cfg.seed = 7;
  cfg.missing = MissingProtocol::two_view;
  cfg.missing_rate = 0.5;

  const auto result = run_pipeline(cfg);
  std::cout << "clusters found: " << result.partition.cluster_count() << "\n";
  std::cout << "metrics: " << to_json(*result.metrics).dump() << "\n";

  // The stages can also be driven one by one.
  const auto& g = result.refined;
  ClusterOptions opts;
  opts.k = cfg.knn_k;
  const auto strict = cluster(g, {opts.k, opts.maxiter, 1, false});
  std::cout << "without singleton escape: " << strict.cluster_count() << " clusters, objective "
            << objective(g, strict) << "\n";
}
