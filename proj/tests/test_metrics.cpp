#include <gtest/gtest.h>

#include <map>
#include <random>

#include "support.hpp"

using namespace slsmpc;

namespace {

using Labels = std::vector<int>;

// Pair counts by looping over all unordered pairs.
struct PairCounts {
  double tp = 0, fp = 0, fn = 0, tn = 0;
};

PairCounts count_pairs(const Labels& pred, const Labels& truth) {
  PairCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = i + 1; j < pred.size(); ++j) {
      const bool sp = pred[i] == pred[j], st = truth[i] == truth[j];
      c.tp += sp && st;
      c.fp += sp && !st;
      c.fn += !sp && st;
      c.tn += !sp && !st;
    }
  return c;
}

// ARI in the pair-count form of Hubert and Arabie.
double pair_ari(const Labels& pred, const Labels& truth) {
  const auto c = count_pairs(pred, truth);
  const double n = c.tp + c.fp + c.fn + c.tn;
  const double expected = (c.tp + c.fp) * (c.tp + c.fn) / n;
  const double max_index = 0.5 * ((c.tp + c.fp) + (c.tp + c.fn));
  return (c.tp - expected) / (max_index - expected);
}

// NMI from per-label probabilities.
double entropy_nmi(const Labels& pred, const Labels& truth) {
  const double n = static_cast<double>(pred.size());
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pa[pred[i]] += 1 / n;
    pb[truth[i]] += 1 / n;
    pab[{pred[i], truth[i]}] += 1 / n;
  }
  double ha = 0, hb = 0, mi = 0;
  for (auto [k, p] : pa) ha -= p * std::log(p);
  for (auto [k, p] : pb) hb -= p * std::log(p);
  for (auto [k, p] : pab) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
  return mi / std::sqrt(ha * hb);
}

Labels random_labels(std::size_t n, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, k - 1);
  Labels l(n);
  for (auto& v : l) v = u(rng);
  return l;
}

}  // namespace

TEST(Metrics, PerfectPredictionScoresOne) {
  const Labels truth{0, 0, 1, 1, 2, 2, 2};
  const Labels pred{4, 4, 7, 7, 1, 1, 1};
  const auto r = evaluate(pred, truth);
  EXPECT_EQ(r.pairwise.fscore, 1.0);
  EXPECT_EQ(r.bcubed.fscore, 1.0);
  EXPECT_EQ(r.nmi, 1.0);
  EXPECT_EQ(r.ari, 1.0);
}

TEST(Metrics, SixSampleFixture) {
  const Labels pred{0, 0, 0, 1, 1, 1};
  const Labels truth{0, 0, 1, 1, 2, 2};
  // pairs: same-pred 6, same-truth 3, both 2
  const auto pw = pairwise_prf(pred, truth);
  EXPECT_NEAR(pw.precision, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(pw.recall, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(pw.fscore, 4.0 / 9.0, 1e-12);
  // index 2, expected 6 * 3 / 15 = 6/5, max 9/2
  EXPECT_NEAR(ari(pred, truth), (2.0 - 1.2) / (4.5 - 1.2), 1e-12);
  EXPECT_NEAR(ari(pred, truth), 8.0 / 33.0, 1e-12);
}

TEST(Metrics, OneClusterAgainstTwoPairs) {
  const Labels pred{0, 0, 0, 0};
  const Labels truth{0, 0, 1, 1};
  const auto pw = pairwise_prf(pred, truth);
  EXPECT_NEAR(pw.precision, 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(pw.recall, 1.0, 1e-12);
  EXPECT_NEAR(pw.fscore, 0.5, 1e-12);
  EXPECT_NEAR(ari(pred, truth), 0.0, 1e-12);
  EXPECT_EQ(nmi(pred, truth), 0.0);
}

TEST(Metrics, SingletonsHaveZeroPairRecall) {
  const Labels pred{0, 1, 2, 3, 4};
  const Labels truth{0, 0, 0, 1, 1};
  EXPECT_EQ(pairwise_prf(pred, truth).recall, 0.0);
  const auto bc = bcubed_prf(pred, truth);
  EXPECT_DOUBLE_EQ(bc.precision, 1.0);
  EXPECT_NEAR(bc.recall, (3 * (1.0 / 3) + 2 * 0.5) / 5, 1e-12);
}

TEST(Metrics, DegeneratePairsFlagged) {
  const Labels all_single{0, 1, 2};
  const auto pw = pairwise_prf(all_single, all_single);
  EXPECT_TRUE(pw.degenerate);
  EXPECT_EQ(pw.precision, 0.0);
  EXPECT_TRUE(to_json(evaluate(all_single, all_single)).at("pairwise").contains("warning"));
}

TEST(Metrics, BCubedThreeItems) {
  const Labels pred{0, 0, 0};
  const Labels truth{0, 0, 1};
  const auto bc = bcubed_prf(pred, truth);
  EXPECT_NEAR(bc.precision, 5.0 / 9.0, 1e-12);
  EXPECT_NEAR(bc.recall, 1.0, 1e-12);
  EXPECT_NEAR(bc.fscore, 2 * (5.0 / 9.0) / (5.0 / 9.0 + 1.0), 1e-12);
}

TEST(Metrics, AgreeWithPairAndEntropyForms) {
  std::mt19937_64 rng(2);
  for (int r = 0; r < 50; ++r) {
    const auto pred = random_labels(40, 2 + r % 5, rng);
    const auto truth = random_labels(40, 2 + r % 3, rng);
    const auto c = count_pairs(pred, truth);
    const auto pw = pairwise_prf(pred, truth);
    EXPECT_NEAR(pw.precision, c.tp / (c.tp + c.fp), 1e-12);
    EXPECT_NEAR(pw.recall, c.tp / (c.tp + c.fn), 1e-12);
    EXPECT_NEAR(ari(pred, truth), pair_ari(pred, truth), 1e-12);
    EXPECT_NEAR(nmi(pred, truth), entropy_nmi(pred, truth), 1e-12);
  }
}

TEST(Metrics, NmiNormalizations) {
  const Labels pred{0, 0, 1, 1, 1, 2};
  const Labels truth{0, 0, 0, 1, 1, 1};
  const double s = nmi(pred, truth, NmiNorm::sqrt);
  const double m = nmi(pred, truth, NmiNorm::max);
  const double a = nmi(pred, truth, NmiNorm::arithmetic);
  // the max denominator is the largest, the geometric one the smallest
  EXPECT_LE(m, s);
  EXPECT_LE(m, a);
  EXPECT_LE(a, s + 1e-15);
  EXPECT_EQ(parse_nmi_norm("max"), NmiNorm::max);
  EXPECT_THROW(parse_nmi_norm("geometric"), ArgumentError);
}

TEST(Metrics, IndependentLabelsNearZero) {
  std::mt19937_64 rng(8);
  const auto a = random_labels(20000, 4, rng);
  const auto b = random_labels(20000, 4, rng);
  EXPECT_LT(nmi(a, b), 0.002);
  EXPECT_LT(std::abs(ari(a, b)), 0.002);
}

TEST(Metrics, InvariantToRelabeling) {
  std::mt19937_64 rng(5);
  const auto pred = random_labels(30, 4, rng);
  const auto truth = random_labels(30, 3, rng);
  Labels shifted = pred;
  for (auto& v : shifted) v = (v * 7 + 3) % 11 + 20;
  const auto a = evaluate(pred, truth), b = evaluate(shifted, truth);
  EXPECT_DOUBLE_EQ(a.pairwise.fscore, b.pairwise.fscore);
  EXPECT_DOUBLE_EQ(a.bcubed.fscore, b.bcubed.fscore);
  EXPECT_NEAR(a.nmi, b.nmi, 1e-15);
  EXPECT_NEAR(a.ari, b.ari, 1e-15);
}

TEST(Metrics, Ranges) {
  std::mt19937_64 rng(7);
  for (int r = 0; r < 30; ++r) {
    const auto pred = random_labels(25, 1 + r % 6, rng);
    const auto truth = random_labels(25, 1 + r % 4, rng);
    const auto m = evaluate(pred, truth);
    for (double v : {m.pairwise.fscore, m.bcubed.fscore, m.nmi}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(m.ari, -1.0);
    EXPECT_LE(m.ari, 1.0);
  }
}

TEST(Metrics, LengthMismatch) {
  EXPECT_THROW(evaluate(Labels{0, 1}, Labels{0}), ArgumentError);
}

TEST(Metrics, JsonShape) {
  const auto j = to_json(evaluate(Labels{0, 0, 1}, Labels{0, 1, 1}));
  for (const char* key : {"pairwise", "bcubed", "nmi", "ari"}) EXPECT_TRUE(j.contains(key)) << key;
  for (const char* key : {"p", "r", "f"}) EXPECT_TRUE(j.at("bcubed").contains(key)) << key;
}
