#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"

using namespace slsmpc;

namespace {

PipelineConfig small_config() {
  auto c = profile_config("synth");
  c.synth.n_clusters = 3;
  c.synth.per_cluster = 30;
  c.knn_k = 40;
  c.train.epochs = 300;
  return c;
}

}  // namespace

TEST(Seeds, SplitPerStage) {
  EXPECT_NE(stage_seed(1, "train"), stage_seed(1, "cluster"));
  EXPECT_NE(stage_seed(1, "train"), stage_seed(2, "train"));
  EXPECT_EQ(stage_seed(9, "synth"), stage_seed(9, "synth"));
  // FNV-1a reference values
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, ProfilesCarryTableValues) {
  for (const auto& name : profile_names()) EXPECT_NO_THROW(profile_config(name)) << name;
  const auto hw = profile_config("handwritten-v4");
  EXPECT_EQ(hw.train.segments, 1000u);
  EXPECT_EQ(hw.train.indi, 10u);
  EXPECT_EQ(hw.train.indj_plus_1, 4u);
  EXPECT_EQ(hw.train.lambda, 80.0);
  const auto leaves = profile_config("100leaves");
  EXPECT_EQ(leaves.train.segments, 200u);
  EXPECT_EQ(leaves.train.indj_plus_1, 2u);
  EXPECT_THROW(profile_config("mnist"), ArgumentError);
}

TEST(Config, JsonRoundTripKeepsHash) {
  auto c = small_config();
  c.aggregation = Aggregation::max;
  c.metric = Metric::lp(3.0);
  c.missing = MissingProtocol::two_view;
  c.missing_rate = 0.3;
  c.refine.passes = 2;
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  auto other = c;
  other.seed = 99;
  EXPECT_NE(config_hash(other), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
}

TEST(Config, FileLoadingAndErrors) {
  const auto dir = testing_support::scratch_dir("config");
  std::ofstream(dir / "ok.json") << R"({"profile": "synth", "seed": 5, "fusion": {"aggregation": "mean"}})";
  const auto c = load_config(dir / "ok.json");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.aggregation, Aggregation::mean);
  EXPECT_EQ(c.knn_k, profile_config("synth").knn_k);
  std::ofstream(dir / "bad.json") << R"({"fusion": {"aggregation": "median"}})";
  EXPECT_THROW(load_config(dir / "bad.json"), ArgumentError);
  std::ofstream(dir / "broken.json") << "{";
  EXPECT_THROW(load_config(dir / "broken.json"), ArgumentError);
}

TEST(Pipeline, DeterministicMetrics) {
  const auto c = small_config();
  const auto a = run_pipeline(c);
  const auto b = run_pipeline(c);
  ASSERT_TRUE(a.metrics && b.metrics);
  EXPECT_EQ(to_json(*a.metrics), to_json(*b.metrics));
  EXPECT_EQ(a.partition, b.partition);
  EXPECT_GT(a.metrics->ari, 0.9);
}

TEST(Pipeline, MissingRateRecordedInManifest) {
  auto c = small_config();
  c.synth.per_cluster = 40;  // 120 samples
  c.missing = MissingProtocol::two_view;
  c.missing_rate = 0.5;
  const auto r = run_pipeline(c);
  const auto& mask = r.manifest.at("mask");
  EXPECT_EQ(mask.at("n_samples"), 120);
  EXPECT_EQ(mask.at("complete_samples"), 60);
  EXPECT_EQ(mask.at("missing_per_view"), (std::vector<int>{30, 30}));
  EXPECT_EQ(r.manifest.at("missing_rate"), 0.5);
}

TEST(Pipeline, WritesEveryArtifact) {
  const auto dir = testing_support::scratch_dir("pipeline");
  const auto r = run_pipeline(small_config(), dir);
  for (const char* f : {"dataset/manifest.json", "pair_table.csv", "neighbors.csv", "probfn.json", "loss_log.csv",
                        "fused.csv", "refined.csv", "partition.csv", "metrics.json", "manifest.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  nlohmann::json m;
  std::ifstream(dir / "manifest.json") >> m;
  for (const char* key : {"version", "config_hash", "seed", "stage_seconds", "mask", "metrics"})
    EXPECT_TRUE(m.contains(key)) << key;
  for (const char* stage : {"dataset", "similarity", "pair_table", "train", "fuse", "refine", "cluster", "metrics"})
    EXPECT_TRUE(m.at("stage_seconds").contains(stage)) << stage;
  // the saved artifacts reproduce the in-memory stages
  EXPECT_EQ(read_prob_graph(dir / "refined.csv"), r.refined);
  EXPECT_EQ(read_partition(dir / "partition.csv"), r.partition);
}

TEST(Pipeline, StageNameOnError) {
  auto c = small_config();
  c.train.indi = 60;  // larger than a quarter of the segments
  try {
    run_pipeline(c);
    FAIL() << "expected an error";
  } catch (const ArgumentError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("train: ", 0), 0u) << e.what();
  }
  c = small_config();
  c.source = "manifest";
  c.data_path = "/nonexistent/manifest.json";
  try {
    run_pipeline(c);
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("dataset: ", 0), 0u) << e.what();
  }
}
