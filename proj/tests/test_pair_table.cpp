#include <gtest/gtest.h>

#include "support.hpp"

using namespace slsmpc;
using testing_support::table_from_columns;

namespace {
const double kNan = std::numeric_limits<double>::quiet_NaN();
}

TEST(PairTable, EqualSplit) {
  std::vector<double> w(10);
  for (std::size_t t = 0; t < 10; ++t) w[t] = 0.1 * static_cast<double>((t * 7) % 10);
  const auto table = table_from_columns({w, w}, 5);
  for (std::size_t s = 0; s < 5; ++s) EXPECT_EQ(table.members(0, s).size(), 2u);
}

TEST(PairTable, SegmentsAndMeans) {
  const auto table = table_from_columns({{0.1, 0.2, 0.8, 0.9}, {0.9, 0.8, 0.2, 0.1}}, 2);
  EXPECT_EQ(table.seg(0, 0), 0);
  EXPECT_EQ(table.seg(1, 0), 0);
  EXPECT_EQ(table.seg(2, 0), 1);
  EXPECT_EQ(table.seg(3, 0), 1);
  EXPECT_DOUBLE_EQ(table.seg_means(0)[0], 0.15);
  EXPECT_DOUBLE_EQ(table.seg_means(0)[1], 0.85);
  EXPECT_EQ(table.seg(0, 1), 1);
  EXPECT_DOUBLE_EQ(table.seg_bounds(0)[0], 0.1);
  EXPECT_DOUBLE_EQ(table.seg_bounds(0)[1], 0.5);
  EXPECT_DOUBLE_EQ(table.seg_bounds(0)[2], 0.9);
}

TEST(PairTable, UnobservedPairsExcluded) {
  const auto table = table_from_columns({{0.1, 0.2, 0.8, 0.9}, {kNan, 0.3, 0.4, 0.5}}, 3);
  EXPECT_EQ(table.seg(0, 1), -1);
  std::size_t members = 0;
  for (std::size_t s = 0; s < 3; ++s) members += table.members(1, s).size();
  EXPECT_EQ(members, 3u);
}

TEST(PairTable, TooFewPairs) {
  EXPECT_THROW(table_from_columns({{0.1, 0.2}, {0.1, 0.2}}, 3), DataError);
}

TEST(PairTable, PopulationsDifferByAtMostOne) {
  const auto table = testing_support::synth_table(97, 20);
  for (std::size_t m = 0; m < 2; ++m) {
    std::size_t lo = SIZE_MAX, hi = 0, total = 0;
    for (std::size_t s = 0; s < 97; ++s) {
      lo = std::min(lo, table.members(m, s).size());
      hi = std::max(hi, table.members(m, s).size());
      total += table.members(m, s).size();
      for (auto t : table.members(m, s)) EXPECT_EQ(table.seg(t, m), static_cast<int>(s));
    }
    EXPECT_LE(hi - lo, 1u);
    EXPECT_EQ(total, table.size());
    const auto& means = table.seg_means(m);
    EXPECT_TRUE(std::is_sorted(means.begin(), means.end()));
  }
}

TEST(PairTable, UnionOfKnnEdges) {
  KnnLists a{0, 1, {{1}, {0}, {1}}};
  KnnLists b{1, 1, {{2}, {2}, {0}}};
  const auto pairs = knn_edge_union({a, b});
  EXPECT_EQ(pairs, (std::vector<SamplePair>{{0, 1}, {0, 2}, {1, 2}}));
}

TEST(PairTable, CsvRoundTrip) {
  const auto table = table_from_columns({{0.1, 0.2, 0.8, 0.9}, {kNan, 0.3, 0.4, 0.5}}, 2);
  const auto dir = testing_support::scratch_dir("pairs");
  write_pair_table(table, dir / "t.csv");
  const auto back = read_pair_table(dir / "t.csv", 2);
  ASSERT_EQ(back.size(), table.size());
  for (std::size_t t = 0; t < table.size(); ++t) {
    EXPECT_EQ(back.pair(t), table.pair(t));
    for (std::size_t m = 0; m < 2; ++m) {
      EXPECT_EQ(back.observed(t, m), table.observed(t, m));
      if (table.observed(t, m)) EXPECT_EQ(back.sim(t, m), table.sim(t, m));
      EXPECT_EQ(back.seg(t, m), table.seg(t, m));
    }
  }
}
