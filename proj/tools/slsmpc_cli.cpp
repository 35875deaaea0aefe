// Command-line front end: the full pipeline plus each stage on saved artifacts.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <slsmpc.hpp>

namespace fs = std::filesystem;
using namespace slsmpc;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDivergence = 3 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> aggregation;
  std::optional<std::string> metric;
  std::optional<std::string> completion;
  std::optional<std::size_t> refine_passes;
  std::optional<std::size_t> knn_k;
  std::optional<double> missing_rate;
};

void add_overrides(CLI::App* app, Overrides& o) {
  app->add_option("--seed", o.seed, "root random seed");
  app->add_option("--aggregation", o.aggregation, "formula|mean|max|min|multiply")
      ->check(CLI::IsMember({"formula", "mean", "max", "min", "multiply"}));
  app->add_option("--metric", o.metric, "cosine|l1|l2|l3")->check(CLI::IsMember({"cosine", "l1", "l2", "l3"}));
  app->add_option("--completion", o.completion, "on|off")->check(CLI::IsMember({"on", "off"}));
  app->add_option("--refine-passes", o.refine_passes, "rounds of path + co-neighbor propagation");
  app->add_option("--knn-k", o.knn_k, "neighbors per sample per view");
  app->add_option("--missing-rate", o.missing_rate, "two-view missing rate (1 - paired fraction)");
}

void apply(const Overrides& o, PipelineConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.aggregation) c.aggregation = parse_aggregation(*o.aggregation);
  if (o.metric) c.metric = Metric::parse(*o.metric);
  if (o.completion) c.completion = *o.completion == "on";
  if (o.refine_passes) c.refine.passes = *o.refine_passes;
  if (o.knn_k) c.knn_k = *o.knn_k;
  if (o.missing_rate) {
    c.missing_rate = *o.missing_rate;
    if (c.missing == MissingProtocol::none && *o.missing_rate > 0.0) c.missing = MissingProtocol::two_view;
  }
}

PipelineConfig config_or_profile(const std::string& config_path, const std::string& profile) {
  if (!config_path.empty()) return load_config(config_path);
  return profile_config(profile);
}

MultiViewDataset read_data(const fs::path& p) {
  if (fs::is_directory(p)) {
    if (fs::exists(p / "manifest.json")) return load_manifest(p / "manifest.json");
    return load_dataset(p, DatasetFormat::csv_per_view);
  }
  return load_manifest(p);
}

int cmd_pipeline(const std::string& config_path, const std::string& profile, const Overrides& o, const fs::path& out) {
  auto c = config_or_profile(config_path, profile);
  apply(o, c);
  auto r = run_pipeline(c, out);
  std::cout << "clusters " << r.partition.cluster_count() << "\n";
  std::cout << "objective " << r.objective << "\n";
  if (r.metrics) std::cout << to_json(*r.metrics).dump() << "\n";
  std::cout << "artifacts in " << out.string() << "\n";
  return kOk;
}

int cmd_synth(const SynthSpec& spec_in, std::uint64_t seed, double missing_rate, const fs::path& out) {
  auto spec = spec_in;
  spec.seed = stage_seed(seed, "synth");
  auto ds = synth_gaussian(spec);
  if (missing_rate > 0.0) ds = apply_missing_protocol(ds, 1.0 - missing_rate, stage_seed(seed, "missing"));
  const auto manifest = save_dataset(ds, out);
  std::cout << "wrote " << ds.n_samples() << " samples x " << ds.n_views() << " views to " << manifest.string() << "\n";
  return kOk;
}

int cmd_train(const fs::path& data, const std::string& config_path, const std::string& profile, const Overrides& o,
              const fs::path& out) {
  auto c = config_or_profile(config_path, profile);
  apply(o, c);
  const auto ds = read_data(data);
  std::vector<SimilarityMatrix> sims;
  std::vector<KnnLists> knn;
  for (std::size_t m = 0; m < ds.n_views(); ++m) {
    sims.push_back(compute_similarity(ds, m, c.metric));
    knn.push_back(build_knn(sims.back(), c.knn_k));
  }
  const auto table = build_pair_table(knn, sims, c.train.segments);
  auto cfg = c.train;
  cfg.seed = stage_seed(c.seed, "train");
  const auto result = train(table, cfg);
  write_pair_table(table, out / "pair_table.csv");
  write_neighbor_sets(knn_union(knn, ds.n_samples()), out / "neighbors.csv");
  save_functions(out / "probfn.json", result.functions, cfg);
  write_loss_log(out / "loss_log.csv", result.log);
  std::cout << "pairs " << table.size() << "\nepochs " << result.epochs_run << "\nloss " << result.final_loss.total
            << "\n";
  return kOk;
}

int cmd_fuse(const fs::path& pairs, const fs::path& probfn, std::size_t samples, const Overrides& o,
             const fs::path& out) {
  const auto fns = load_functions(probfn);
  const auto table = read_pair_table(pairs, fns.config.segments);
  std::size_t n = samples;
  for (const auto& [p, q] : table.pairs()) n = std::max<std::size_t>(n, q + 1);
  FusionOptions fo;
  if (o.aggregation) fo.aggregation = parse_aggregation(*o.aggregation);
  fo.completion = o.completion && *o.completion == "on";
  std::vector<std::vector<std::vector<double>>> cross;
  if (fo.completion) {
    cross = cross_functionals(table, fns.functions);
    fo.cross = &cross;
  }
  const auto g = fuse(table, fns.functions, n, fo);
  write_prob_graph(g, out);
  std::cout << "edges " << g.edge_count() << "\n";
  return kOk;
}

int cmd_refine(const fs::path& graph, const fs::path& neighbors, std::size_t passes, std::size_t k,
               const fs::path& out) {
  const auto g = read_prob_graph(graph);
  const auto sets = neighbors.empty() ? adjacency_sets(g) : read_neighbor_sets(neighbors);
  RefineOptions opts;
  opts.passes = passes;
  opts.coneighbor_k = k;
  const auto r = refine(g, sets, opts);
  write_prob_graph(r, out);
  std::cout << "edges " << r.edge_count() << "\n";
  return kOk;
}

int cmd_cluster(const fs::path& graph, const ClusterOptions& opts, const fs::path& out) {
  const auto g = read_prob_graph(graph);
  const auto part = cluster(g, opts);
  write_partition(part, out);
  std::cout << "clusters " << part.cluster_count() << "\nobjective " << objective(g, part) << "\n";
  return kOk;
}

int cmd_eval(const fs::path& pred, const fs::path& truth, const std::string& norm, const fs::path& out) {
  const auto p = read_labels(pred);
  const auto t = read_labels(truth);
  const auto report = to_json(evaluate(p, t, parse_nmi_norm(norm)));
  if (!out.empty()) csv::open_out(out) << report.dump(1) << '\n';
  std::cout << report.dump() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-learning symmetric multi-view probabilistic clustering"};
  app.require_subcommand(1);

  std::string config_path, profile = "synth";
  Overrides overrides;
  fs::path out;

  auto* pipeline = app.add_subcommand("pipeline", "run every stage and write all artifacts");
  pipeline->add_option("--config", config_path, "JSON config file");
  pipeline->add_option("--profile", profile, "named parameter profile when no config is given");
  pipeline->add_option("--out", out, "artifact directory")->required();
  add_overrides(pipeline, overrides);

  SynthSpec spec;
  std::uint64_t synth_seed = 0;
  double synth_missing = 0.0;
  auto* synth = app.add_subcommand("synth", "generate a Gaussian multi-view dataset");
  synth->add_option("--clusters", spec.n_clusters);
  synth->add_option("--per-cluster", spec.per_cluster);
  synth->add_option("--dims", spec.dims, "feature dimension per view");
  synth->add_option("--separation", spec.separation);
  synth->add_option("--noise", spec.noise);
  synth->add_option("--seed", synth_seed);
  synth->add_option("--missing-rate", synth_missing, "apply the two-view missing protocol");
  synth->add_option("--out", out, "dataset directory")->required();

  fs::path data;
  auto* train_cmd = app.add_subcommand("train-probfn", "learn per-view probability functions");
  train_cmd->add_option("--data", data, "dataset directory or manifest")->required();
  train_cmd->add_option("--config", config_path);
  train_cmd->add_option("--profile", profile);
  train_cmd->add_option("--out", out, "output directory")->required();
  add_overrides(train_cmd, overrides);

  fs::path pairs, probfn, graph, neighbors, pred, truth;
  std::size_t samples = 0;
  auto* fuse_cmd = app.add_subcommand("fuse", "fuse per-view probabilities into a probability graph");
  fuse_cmd->add_option("--pairs", pairs, "pair-table CSV")->required();
  fuse_cmd->add_option("--probfn", probfn, "probfn.json")->required();
  fuse_cmd->add_option("--samples", samples, "sample count (default: largest index + 1)");
  fuse_cmd->add_option("--out", out, "graph CSV")->required();
  add_overrides(fuse_cmd, overrides);

  std::size_t passes = 1, refine_k = 20;
  auto* refine_cmd = app.add_subcommand("refine", "path and co-neighbor propagation");
  refine_cmd->add_option("--graph", graph)->required();
  refine_cmd->add_option("--neighbors", neighbors, "neighbor-set CSV (default: graph adjacency)");
  refine_cmd->add_option("--passes,--refine-passes", passes);
  refine_cmd->add_option("--knn-k", refine_k, "co-neighbor k");
  refine_cmd->add_option("--out", out, "graph CSV")->required();

  ClusterOptions copts;
  bool strict_candidates = false;
  auto* cluster_cmd = app.add_subcommand("cluster", "probabilistic clustering of a graph");
  cluster_cmd->add_option("--graph", graph)->required();
  cluster_cmd->add_option("--knn-k", copts.k);
  cluster_cmd->add_option("--maxiter", copts.maxiter);
  cluster_cmd->add_option("--seed", copts.seed);
  cluster_cmd->add_flag("--no-singleton-escape", strict_candidates, "only neighbor clusters as move targets");
  cluster_cmd->add_option("--out", out, "partition CSV")->required();

  std::string norm = "sqrt";
  auto* eval_cmd = app.add_subcommand("eval", "score a partition against ground truth");
  eval_cmd->add_option("--pred", pred)->required();
  eval_cmd->add_option("--truth", truth)->required();
  eval_cmd->add_option("--nmi-norm", norm)->check(CLI::IsMember({"sqrt", "max", "arithmetic"}));
  eval_cmd->add_option("--out", out, "metrics JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*pipeline) return cmd_pipeline(config_path, profile, overrides, out);
    if (*synth) return cmd_synth(spec, synth_seed, synth_missing, out);
    if (*train_cmd) return cmd_train(data, config_path, profile, overrides, out);
    if (*fuse_cmd) return cmd_fuse(pairs, probfn, samples, overrides, out);
    if (*refine_cmd) return cmd_refine(graph, neighbors, passes, refine_k, out);
    if (*cluster_cmd) {
      copts.singleton_escape = !strict_candidates;
      return cmd_cluster(graph, copts, out);
    }
    if (*eval_cmd) return cmd_eval(pred, truth, norm, out);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
