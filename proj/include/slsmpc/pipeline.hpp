#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "slsmpc/cluster.hpp"
#include "slsmpc/dataset.hpp"
#include "slsmpc/error.hpp"
#include "slsmpc/fusion.hpp"
#include "slsmpc/metrics.hpp"
#include "slsmpc/pair_table.hpp"
#include "slsmpc/prob_graph.hpp"
#include "slsmpc/probfn.hpp"
#include "slsmpc/refine.hpp"
#include "slsmpc/similarity.hpp"

namespace slsmpc {

inline constexpr const char* kVersion = "0.1.0";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Independent per-stage seed derived from the root seed.
inline std::uint64_t stage_seed(std::uint64_t root, std::string_view stage) { return splitmix64(root ^ fnv1a(stage)); }

enum class MissingProtocol { none, two_view, four_view };

inline std::string to_string(MissingProtocol p) {
  switch (p) {
    case MissingProtocol::none: return "none";
    case MissingProtocol::two_view: return "two-view";
    case MissingProtocol::four_view: return "four-view";
  }
  return "none";
}

inline MissingProtocol parse_missing_protocol(const std::string& s) {
  for (auto p : {MissingProtocol::none, MissingProtocol::two_view, MissingProtocol::four_view})
    if (to_string(p) == s) return p;
  throw ArgumentError("unknown missing protocol '" + s + "'");
}

struct PipelineConfig {
  std::string profile = "synth";
  std::uint64_t seed = 0;

  // data: "synth", or a dataset path in one of the dataset formats
  std::string source = "synth";
  std::filesystem::path data_path;
  SynthSpec synth;

  MissingProtocol missing = MissingProtocol::none;
  double missing_rate = 0.0;  // two-view protocol: paired fraction = 1 - rate

  Metric metric = Metric::cosine();
  std::size_t knn_k = 20;

  TrainConfig train;

  Aggregation aggregation = Aggregation::formula;
  bool completion = false;

  RefineOptions refine{1, 0, true, true};  // coneighbor_k 0 means knn_k

  std::size_t cluster_k = 0;  // 0 means knn_k
  std::size_t maxiter = 20;
  bool singleton_escape = true;

  NmiNorm nmi_norm = NmiNorm::sqrt;

  std::size_t coneighbor_k() const { return refine.coneighbor_k ? refine.coneighbor_k : knn_k; }
  std::size_t effective_cluster_k() const { return cluster_k ? cluster_k : knn_k; }
};

inline std::vector<std::string> profile_names() {
  return {"synth", "handwritten-v2", "handwritten-v4", "100leaves", "humbi240", "buaa", "bbcsport"};
}

/// Named hyper-parameter sets. The dataset profiles carry reference values for
/// segment count, indi, indj+1 and lambda; "synth" is tuned for the small
/// Gaussian fixture.
inline PipelineConfig profile_config(const std::string& name) {
  PipelineConfig c;
  c.profile = name;
  auto set = [&](std::size_t segs, std::size_t indi, std::size_t indj1, double lambda) {
    c.train.segments = segs;
    c.train.indi = indi;
    c.train.indj_plus_1 = indj1;
    c.train.lambda = lambda;
  };
  if (name == "synth") {
    set(100, 10, 4, 20.0);
    c.train.lr = 0.05;
    c.knn_k = 60;
  } else if (name == "handwritten-v4") {
    set(1000, 10, 4, 80.0);
  } else if (name == "handwritten-v2" || name == "humbi240") {
    set(1000, 10, 4, 20.0);
  } else if (name == "100leaves") {
    set(200, 10, 2, 2.0);
  } else if (name == "buaa" || name == "bbcsport") {
    set(200, 10, 4, 20.0);
  } else {
    throw ArgumentError("unknown profile '" + name + "'");
  }
  return c;
}

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["profile"] = c.profile;
  j["seed"] = c.seed;
  j["data"] = {{"source", c.source}, {"path", c.data_path.string()}};
  j["data"]["synth"] = {{"n_clusters", c.synth.n_clusters},
                        {"per_cluster", c.synth.per_cluster},
                        {"dims", c.synth.dims},
                        {"separation", c.synth.separation},
                        {"noise", c.synth.noise}};
  j["missing"] = {{"protocol", to_string(c.missing)}, {"missing_rate", c.missing_rate}};
  j["similarity"] = {{"metric", c.metric.name()}, {"knn_k", c.knn_k}};
  j["probfn"] = c.train;
  j["fusion"] = {{"aggregation", to_string(c.aggregation)}, {"completion", c.completion}};
  j["refine"] = {{"passes", c.refine.passes},
                 {"coneighbor_k", c.refine.coneighbor_k},
                 {"path", c.refine.path},
                 {"coneighbor", c.refine.coneighbor}};
  j["cluster"] = {{"k", c.cluster_k}, {"maxiter", c.maxiter}, {"singleton_escape", c.singleton_escape}};
  j["metrics"] = {{"nmi_norm", c.nmi_norm == NmiNorm::sqrt ? "sqrt" : c.nmi_norm == NmiNorm::max ? "max" : "arithmetic"}};
  return j;
}

/// Starts from the named profile (key "profile", default "synth") and
/// overrides whatever keys are present. Relative data paths resolve against
/// `base_dir`.
inline PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  try {
    auto c = profile_config(j.value("profile", std::string("synth")));
    auto get = [](const nlohmann::json& obj, const char* key, auto& field) {
      if (obj.contains(key)) obj.at(key).get_to(field);
    };
    get(j, "seed", c.seed);
    if (j.contains("data")) {
      const auto& d = j.at("data");
      get(d, "source", c.source);
      if (d.contains("path")) {
        std::filesystem::path p = d.at("path").get<std::string>();
        c.data_path = p.is_relative() && !p.empty() ? base_dir / p : p;
      }
      if (d.contains("synth")) {
        const auto& s = d.at("synth");
        get(s, "n_clusters", c.synth.n_clusters);
        get(s, "per_cluster", c.synth.per_cluster);
        get(s, "dims", c.synth.dims);
        get(s, "separation", c.synth.separation);
        get(s, "noise", c.synth.noise);
      }
    }
    if (j.contains("missing")) {
      const auto& m = j.at("missing");
      if (m.contains("protocol")) c.missing = parse_missing_protocol(m.at("protocol").get<std::string>());
      get(m, "missing_rate", c.missing_rate);
    }
    if (j.contains("similarity")) {
      const auto& s = j.at("similarity");
      if (s.contains("metric")) c.metric = Metric::parse(s.at("metric").get<std::string>());
      get(s, "knn_k", c.knn_k);
    }
    if (j.contains("probfn")) j.at("probfn").get_to(c.train);
    if (j.contains("fusion")) {
      const auto& f = j.at("fusion");
      if (f.contains("aggregation")) c.aggregation = parse_aggregation(f.at("aggregation").get<std::string>());
      get(f, "completion", c.completion);
    }
    if (j.contains("refine")) {
      const auto& r = j.at("refine");
      get(r, "passes", c.refine.passes);
      get(r, "coneighbor_k", c.refine.coneighbor_k);
      get(r, "path", c.refine.path);
      get(r, "coneighbor", c.refine.coneighbor);
    }
    if (j.contains("cluster")) {
      const auto& k = j.at("cluster");
      get(k, "k", c.cluster_k);
      get(k, "maxiter", c.maxiter);
      get(k, "singleton_escape", c.singleton_escape);
    }
    if (j.contains("metrics") && j.at("metrics").contains("nmi_norm")) {
      c.nmi_norm = parse_nmi_norm(j.at("metrics").at("nmi_norm").get<std::string>());
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("bad config: ") + e.what());
  }
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

inline std::string config_hash(const PipelineConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(c).dump())));
  return buf;
}

/// Per-view observed counts plus the number of samples observed in every view.
inline nlohmann::json mask_stats(const MultiViewDataset& ds) {
  nlohmann::json j;
  j["n_samples"] = ds.n_samples();
  std::vector<std::size_t> observed, missing;
  for (std::size_t m = 0; m < ds.n_views(); ++m) {
    observed.push_back(ds.observed_count(m));
    missing.push_back(ds.n_samples() - ds.observed_count(m));
  }
  std::size_t complete = 0;
  for (std::size_t i = 0; i < ds.n_samples(); ++i) {
    bool all = true;
    for (std::size_t m = 0; m < ds.n_views(); ++m) all = all && ds.observed(m, i);
    complete += all;
  }
  j["observed_per_view"] = observed;
  j["missing_per_view"] = missing;
  j["complete_samples"] = complete;
  return j;
}

/// The views' cross functionals [anchor][target][segment] for given functions.
inline std::vector<std::vector<std::vector<double>>> cross_functionals(const PairTable& table,
                                                                       const std::vector<PiecewiseProbFn>& fns) {
  return ConsistencyObjective(table, detail::config_for(table)).functionals(detail::values_of(fns)).cross;
}

struct PipelineResult {
  MultiViewDataset dataset;
  std::vector<KnnLists> knn;
  PairTable table;
  TrainResult training;
  ProbGraph fused;
  ProbGraph refined;
  Partition partition;
  double objective = 0.0;
  std::optional<MetricReport> metrics;
  nlohmann::json manifest;
};

namespace detail {

template <typename Fn>
auto run_stage(const char* name, nlohmann::json& timings, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&] {
    timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto r = fn();
      finish();
      return r;
    }
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(name) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw ArgumentError(std::string(name) + ": " + e.what());
  }
}

}  // namespace detail

inline MultiViewDataset load_source(const PipelineConfig& c) {
  if (c.source == "synth") {
    auto spec = c.synth;
    spec.seed = stage_seed(c.seed, "synth");
    return synth_gaussian(spec);
  }
  if (c.source == "manifest") return load_manifest(c.data_path);
  if (c.source == "csv") return load_dataset(c.data_path, DatasetFormat::csv_per_view);
  throw ArgumentError("unknown data source '" + c.source + "'");
}

inline MultiViewDataset apply_protocol(const MultiViewDataset& ds, const PipelineConfig& c) {
  switch (c.missing) {
    case MissingProtocol::none: return ds;
    case MissingProtocol::two_view:
      return apply_missing_protocol(ds, 1.0 - c.missing_rate, stage_seed(c.seed, "missing"));
    case MissingProtocol::four_view: return apply_four_view_protocol(ds, stage_seed(c.seed, "missing"));
  }
  return ds;
}

/// dataset -> similarity/KNN -> pair table -> trained functions -> fused
/// graph -> refined graph -> partition -> metrics (when labels exist).
/// Writes every artifact plus manifest.json into `out_dir` when given.
inline PipelineResult run_pipeline(const PipelineConfig& c, const std::optional<std::filesystem::path>& out_dir = {}) {
  PipelineResult r;
  nlohmann::json timings = nlohmann::json::object();

  r.dataset = detail::run_stage("dataset", timings, [&] { return apply_protocol(load_source(c), c); });

  std::vector<SimilarityMatrix> sims;
  detail::run_stage("similarity", timings, [&] {
    for (std::size_t m = 0; m < r.dataset.n_views(); ++m) {
      sims.push_back(compute_similarity(r.dataset, m, c.metric));
      r.knn.push_back(build_knn(sims.back(), c.knn_k));
    }
  });
  r.table = detail::run_stage("pair_table", timings, [&] { return build_pair_table(r.knn, sims, c.train.segments); });
  sims.clear();

  auto train_cfg = c.train;
  train_cfg.seed = stage_seed(c.seed, "train");
  r.training = detail::run_stage("train", timings, [&] { return train(r.table, train_cfg); });

  r.fused = detail::run_stage("fuse", timings, [&] {
    FusionOptions fo;
    fo.aggregation = c.aggregation;
    fo.completion = c.completion;
    fo.cross = &r.training.functionals.cross;
    return fuse(r.table, r.training.functions, r.dataset.n_samples(), fo);
  });

  r.refined = detail::run_stage("refine", timings, [&] {
    auto opts = c.refine;
    opts.coneighbor_k = c.coneighbor_k();
    return refine(r.fused, knn_union(r.knn, r.dataset.n_samples()), opts);
  });

  ClusterStats stats;
  r.partition = detail::run_stage("cluster", timings, [&] {
    ClusterOptions co;
    co.k = c.effective_cluster_k();
    co.maxiter = c.maxiter;
    co.seed = stage_seed(c.seed, "cluster");
    co.singleton_escape = c.singleton_escape;
    return cluster(r.refined, co, &stats);
  });
  r.objective = objective(r.refined, r.partition);

  if (r.dataset.labels()) {
    r.metrics = detail::run_stage("metrics", timings, [&] { return evaluate(r.partition.labels, *r.dataset.labels(), c.nmi_norm); });
  }

  auto& m = r.manifest;
  m["version"] = kVersion;
  m["config_hash"] = config_hash(c);
  m["seed"] = c.seed;
  m["config"] = to_json(c);
  m["stage_seconds"] = timings;
  m["mask"] = mask_stats(r.dataset);
  m["missing_rate"] = c.missing == MissingProtocol::none ? 0.0 : c.missing_rate;
  m["pairs"] = r.table.size();
  m["train"] = {{"epochs_run", r.training.epochs_run},
                {"final_loss", {{"total", r.training.final_loss.total},
                                {"consistency", r.training.final_loss.consistency},
                                {"constraint", r.training.final_loss.constraint}}}};
  m["cluster"] = {{"clusters", r.partition.cluster_count()},
                  {"objective", r.objective},
                  {"sweeps", stats.sweeps},
                  {"moves", stats.moves}};
  if (r.metrics) m["metrics"] = to_json(*r.metrics);

  if (out_dir) {
    const auto& d = *out_dir;
    save_dataset(r.dataset, d / "dataset");
    write_pair_table(r.table, d / "pair_table.csv");
    write_neighbor_sets(knn_union(r.knn, r.dataset.n_samples()), d / "neighbors.csv");
    save_functions(d / "probfn.json", r.training.functions, train_cfg);
    write_loss_log(d / "loss_log.csv", r.training.log);
    write_prob_graph(r.fused, d / "fused.csv");
    write_prob_graph(r.refined, d / "refined.csv");
    write_partition(r.partition, d / "partition.csv");
    if (r.metrics) csv::open_out(d / "metrics.json") << to_json(*r.metrics).dump(1) << '\n';
    csv::open_out(d / "manifest.json") << m.dump(1) << '\n';
  }
  return r;
}

}  // namespace slsmpc
