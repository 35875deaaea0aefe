#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace slsmpc;

namespace {

MultiViewDataset one_view(const FeatureMatrix& x) { return MultiViewDataset::fully_observed({x}); }

}  // namespace

TEST(Similarity, CosineBasics) {
  FeatureMatrix x(2, 3);
  x << 1, 2, 0,
       0, 0, 3;
  const auto s = compute_similarity(one_view(x), 0, Metric::cosine());
  EXPECT_DOUBLE_EQ(s(0, 1), 1.0);  // parallel columns
  EXPECT_DOUBLE_EQ(s(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(s(2, 2), 1.0);
  EXPECT_EQ(s(1, 2), s(2, 1));
}

TEST(Similarity, CosineZeroNormRejected) {
  FeatureMatrix x = FeatureMatrix::Zero(2, 2);
  x(0, 0) = 1.0;
  EXPECT_THROW(compute_similarity(one_view(x), 0, Metric::cosine()), DataError);
}

TEST(Similarity, L1RescaleHitsZero) {
  FeatureMatrix x(2, 2);
  x << 1, 0,
       0, 1;
  const auto s = compute_similarity(one_view(x), 0, Metric::lp(1.0));
  EXPECT_DOUBLE_EQ(s(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(s(0, 0), 1.0);
}

TEST(Similarity, LpMatchesDirectDistance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  FeatureMatrix x(3, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  for (double p : {1.0, 2.0, 3.0}) {
    const auto s = compute_similarity(one_view(x), 0, Metric::lp(p));
    auto dist = [&](int a, int b) {
      double acc = 0.0;
      for (int r = 0; r < 3; ++r) acc += std::pow(std::abs(x(r, a) - x(r, b)), p);
      return std::pow(acc, 1.0 / p);
    };
    double dmax = 0.0;
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) dmax = std::max(dmax, dist(a, b));
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) EXPECT_NEAR(s(a, b), 1.0 - dist(a, b) / dmax, 1e-12);
  }
}

TEST(Similarity, MetricNames) {
  EXPECT_EQ(Metric::parse("cosine"), Metric::cosine());
  EXPECT_EQ(Metric::parse("l3"), Metric::lp(3.0));
  EXPECT_EQ(Metric::parse("l2").name(), "l2");
  EXPECT_THROW(Metric::parse("manhattan"), ArgumentError);
}

TEST(Similarity, UnobservedEntriesInvalid) {
  FeatureMatrix x = FeatureMatrix::Ones(2, 3);
  MultiViewDataset ds({x, x}, ViewMask{{1, 0, 1}, {1, 1, 1}});
  const auto s = compute_similarity(ds, 0, Metric::cosine());
  EXPECT_FALSE(s.valid(0, 1));
  EXPECT_TRUE(std::isnan(s.entries(0, 1)));
  EXPECT_TRUE(s.valid(0, 2));
}

TEST(Similarity, CommutesWithPermutation) {
  const auto ds = synth_gaussian({});
  std::vector<Eigen::Index> perm(ds.n_samples());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  FeatureMatrix px(ds.features(0).rows(), ds.features(0).cols());
  for (std::size_t i = 0; i < perm.size(); ++i) px.col(static_cast<Eigen::Index>(i)) = ds.features(0).col(perm[i]);
  for (auto metric : {Metric::cosine(), Metric::lp(2.0)}) {
    const auto a = compute_similarity(ds, 0, metric);
    const auto b = compute_similarity(one_view(px), 0, metric);
    for (std::size_t i = 0; i < perm.size(); i += 7)
      for (std::size_t j = 0; j < perm.size(); j += 5)
        EXPECT_NEAR(b(i, j), a(static_cast<std::size_t>(perm[i]), static_cast<std::size_t>(perm[j])), 1e-12);
  }
}

namespace {

SimilarityMatrix handmade(const Eigen::MatrixXd& w) {
  SimilarityMatrix s;
  s.entries = w;
  s.observed.assign(static_cast<std::size_t>(w.rows()), 1);
  return s;
}

}  // namespace

TEST(Knn, ChainTopOne) {
  Eigen::MatrixXd w(3, 3);
  w << 1.0, 0.9, 0.1,
       0.9, 1.0, 0.9,
       0.1, 0.9, 1.0;
  const auto knn = build_knn(handmade(w), 1);
  EXPECT_EQ(knn.neighbors[0], (std::vector<std::uint32_t>{1}));
  EXPECT_EQ(knn.neighbors[1], (std::vector<std::uint32_t>{0}));  // tie 0.9/0.9 -> lower index
  EXPECT_EQ(knn.neighbors[2], (std::vector<std::uint32_t>{1}));
}

TEST(Knn, SaturatesAndSortsDescending) {
  Eigen::MatrixXd w(4, 4);
  w << 1.0, 0.2, 0.7, 0.5,
       0.2, 1.0, 0.3, 0.4,
       0.7, 0.3, 1.0, 0.6,
       0.5, 0.4, 0.6, 1.0;
  const auto knn = build_knn(handmade(w), 10);
  EXPECT_EQ(knn.neighbors[0], (std::vector<std::uint32_t>{2, 3, 1}));
  EXPECT_EQ(knn.neighbors[1], (std::vector<std::uint32_t>{3, 2, 0}));
}

TEST(Knn, EqualSimilaritiesPickLowestIndex) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(4, 4, 0.5);
  const auto knn = build_knn(handmade(w), 1);
  EXPECT_EQ(knn.neighbors[0], (std::vector<std::uint32_t>{1}));
  for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(knn.neighbors[i], (std::vector<std::uint32_t>{0}));
}

TEST(Knn, ZeroKRejected) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(build_knn(handmade(w), 0), ArgumentError);
}

TEST(Knn, MaskedSamplesDoNotChangeLists) {
  const auto base = synth_gaussian({});
  const auto n = base.n_samples();
  // append 10 unobserved samples holding junk features
  std::vector<FeatureMatrix> views;
  ViewMask mask(2);
  for (std::size_t m = 0; m < 2; ++m) {
    FeatureMatrix x(base.features(m).rows(), static_cast<Eigen::Index>(n + 10));
    x.leftCols(static_cast<Eigen::Index>(n)) = base.features(m);
    x.rightCols(10).setConstant(m == 0 ? 3.0 : 0.0);
    views.push_back(x);
    mask[m].assign(n + 10, 1);
  }
  for (std::size_t i = n; i < n + 10; ++i) mask[1][i] = 0;
  const MultiViewDataset ext(views, mask);
  const auto a = build_knn(compute_similarity(base, 1, Metric::cosine()), 15);
  const auto b = build_knn(compute_similarity(ext, 1, Metric::cosine()), 15);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(a.neighbors[i], b.neighbors[i]);
  for (std::size_t i = n; i < n + 10; ++i) EXPECT_TRUE(b.neighbors[i].empty());
}

TEST(Knn, UnionIsSortedAndDeduplicated) {
  KnnLists a{0, 2, {{2, 1}, {0}, {0}}};
  KnnLists b{1, 2, {{1, 0}, {2}, {1}}};
  const auto u = knn_union({a, b}, 3);
  EXPECT_EQ(u[0], (std::vector<std::uint32_t>{0, 1, 2}));
  EXPECT_EQ(u[1], (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(u[2], (std::vector<std::uint32_t>{0, 1}));
}
