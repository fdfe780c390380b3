#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qdistill/error.hpp"
#include "qdistill/signals.hpp"

using namespace qdistill;

namespace {

// Written independently of the library: plain softmax and expectation.
QualityVector reference_softmax(const QualityVector& l) {
  double m = *std::max_element(l.begin(), l.end());
  double z = 0;
  QualityVector p{};
  for (int k = 0; k < 5; ++k) z += std::exp(l[k] - m);
  for (int k = 0; k < 5; ++k) p[k] = std::exp(l[k] - m) / z;
  return p;
}

double reference_confidence(double p) {
  auto h = [](double x) { return x <= 0 ? 0.0 : -x * std::log(x); };
  return 1.0 - (h(p) + h(1 - p)) / std::log(2.0);
}

SupervisionPair with_omega(double omega) {
  SupervisionPair p;
  p.a = "a";
  p.b = "b";
  p.omega = omega;
  return p;
}

}  // namespace

TEST(PointProbs, UniformLogits) {
  const auto p = point_probs({0, 0, 0, 0, 0});
  for (double v : p) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(PointProbs, DescendingLogits) {
  const auto p = point_probs({2, 1, 0, -1, -2});
  const QualityVector want = {0.636408, 0.234122, 0.086129, 0.031684, 0.011657};
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(p[k], want[k], 1e-6);
}

TEST(PointProbs, Saturates) {
  const auto p = point_probs({100, 0, 0, 0, 0});
  EXPECT_EQ(p[0], 1.0);  // 1 - 4e^-100 rounds to 1
  for (int k = 1; k < 5; ++k) EXPECT_NEAR(p[k] / std::exp(-100.0), 1.0, 1e-12);
}

TEST(PointProbs, LargeMagnitudesStayFinite) {
  const auto p = point_probs({1e4, -1e4, 0, 1e4, -1e4});
  for (double v : p) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(p[0], 0.5, 1e-12);
}

TEST(PointProbs, NonFiniteNamesImage) {
  try {
    point_probs({0, std::nan(""), 0, 0, 0}, "img_7");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidSignal);
    EXPECT_NE(std::string(e.what()).find("img_7"), std::string::npos);
  }
  EXPECT_THROW(point_probs({std::numeric_limits<double>::infinity(), 0, 0, 0, 0}), Error);
}

TEST(PointScore, Examples) {
  EXPECT_NEAR(point_score({0.2, 0.2, 0.2, 0.2, 0.2}), 3.0, 1e-12);
  EXPECT_NEAR(point_score(point_probs({2, 1, 0, -1, -2})), 4.451940, 1e-5);
  EXPECT_DOUBLE_EQ(point_score({0, 0, 0, 0, 1}), 1.0);
}

TEST(PointScore, RejectsInvalidProbs) {
  EXPECT_THROW(point_score({0.5, 0.5, 0.5, 0, 0}), Error);
  EXPECT_THROW(point_score({1.2, -0.2, 0, 0, 0}), Error);
}

TEST(QualityTokens, FixedBijection) {
  EXPECT_EQ(kQualityWords[0], "Excellent");
  EXPECT_EQ(kQualityWords[4], "Bad");
  EXPECT_EQ(quality_value(QualityLevel::kExcellent), 5.0);
  EXPECT_EQ(quality_value(QualityLevel::kGood), 4.0);
  EXPECT_EQ(quality_value(QualityLevel::kFair), 3.0);
  EXPECT_EQ(quality_value(QualityLevel::kPoor), 2.0);
  EXPECT_EQ(quality_value(QualityLevel::kBad), 1.0);
}

TEST(PairProbs, Examples) {
  auto p = pair_probs(0, 0);
  EXPECT_DOUBLE_EQ(p.p_a, 0.5);
  EXPECT_DOUBLE_EQ(p.p_b, 0.5);
  p = pair_probs(1, 0);
  EXPECT_NEAR(p.p_a, 0.731059, 1e-6);
  EXPECT_NEAR(p.p_b, 0.268941, 1e-6);
  p = pair_probs(-0.3, -1.5);
  EXPECT_NEAR(p.p_a, 0.768525, 1e-6);
  EXPECT_NEAR(p.p_b, 0.231475, 1e-6);
  EXPECT_THROW(pair_probs(std::nan(""), 0), Error);
}

TEST(PairLabel, TieGoesToA) {
  EXPECT_EQ(pair_label(0.5), 1);
  EXPECT_EQ(pair_label(0.731059), 1);
  EXPECT_EQ(pair_label(0.1), 0);
  EXPECT_THROW(pair_label(1.5), Error);
  EXPECT_THROW(pair_label(-0.1), Error);
}

TEST(PairConfidence, Examples) {
  EXPECT_DOUBLE_EQ(pair_confidence(0.5), 0.0);
  EXPECT_DOUBLE_EQ(pair_confidence(1.0), 1.0);
  EXPECT_DOUBLE_EQ(pair_confidence(0.0), 1.0);
  EXPECT_NEAR(pair_confidence(0.9), 0.531004, 1e-5);
  EXPECT_NEAR(pair_confidence(0.9), reference_confidence(0.9), 1e-12);
}

TEST(SupervisionPairBuild, Invariants) {
  const auto p = make_supervision_pair("x", "y", -0.3, -1.5);
  EXPECT_NEAR(p.p_a + p.p_b(), 1.0, 1e-12);
  EXPECT_EQ(p.t, 1);
  EXPECT_NEAR(p.omega, reference_confidence(0.768525), 1e-5);
  const auto tie = make_supervision_pair("x", "y", -0.69, -0.69);
  EXPECT_EQ(tie.t, 1);
  EXPECT_EQ(tie.omega, 0.0);
  EXPECT_THROW(make_supervision_pair("x", "x", 0, 1), Error);
}

TEST(SamplePairs, DatasetSizedDraw) {
  std::vector<std::string> ids;
  for (int i = 0; i < 2000; ++i) ids.push_back("img" + std::to_string(i));
  const auto pairs = sample_pairs(ids, 2000, 17);
  ASSERT_EQ(pairs.size(), 2000u);
  for (const auto& [a, b] : pairs) EXPECT_NE(a, b);
  EXPECT_EQ(pairs, sample_pairs(ids, 2000, 17));
  EXPECT_NE(pairs, sample_pairs(ids, 2000, 18));
  EXPECT_TRUE(sample_pairs(ids, 0, 17).empty());
}

TEST(SamplePairs, TooFewIds) {
  std::vector<std::string> one = {"only"};
  try {
    sample_pairs(one, 3, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInsufficientData);
  }
}

TEST(SamplePairs, DedupOption) {
  const auto pairs = sample_pair_indices(5, 20, 3, true);
  ASSERT_EQ(pairs.size(), 20u);  // 5*4 ordered pairs exist
  auto sorted = pairs;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
  EXPECT_THROW(sample_pair_indices(5, 21, 3, true), Error);
}

TEST(FilterPairs, Examples) {
  std::vector<SupervisionPair> pairs = {with_omega(0.0), with_omega(0.16), with_omega(0.531)};
  EXPECT_EQ(filter_pairs(pairs, 0.0).size(), 3u);
  const auto kept = filter_pairs(pairs, 0.2);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_DOUBLE_EQ(kept[0].omega, 0.531);
  pairs.push_back(with_omega(1.0));
  const auto certain = filter_pairs(pairs, 1.0);
  ASSERT_EQ(certain.size(), 1u);
  EXPECT_EQ(certain[0].omega, 1.0);
}

// Properties

TEST(SignalProperties, SoftmaxFuzz) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> logit(-50, 50);
  for (int trial = 0; trial < 2000; ++trial) {
    QualityVector l;
    for (double& v : l) v = logit(gen);
    const auto p = point_probs(l);
    double sum = 0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    const auto ref = reference_softmax(l);
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(p[k], ref[k], 1e-12);
    const double s = point_score(p);
    EXPECT_GE(s, 1.0);
    EXPECT_LE(s, 5.0);

    const double c = logit(gen);
    QualityVector shifted = l;
    for (double& v : shifted) v += c;
    EXPECT_NEAR(point_score(point_probs(shifted)), s, 1e-9);
  }
}

TEST(SignalProperties, PairAntisymmetryAndLabel) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> logit(-20, 20);
  for (int trial = 0; trial < 2000; ++trial) {
    const double la = logit(gen), lb = logit(gen);
    const auto ab = pair_probs(la, lb);
    EXPECT_NEAR(ab.p_a + pair_probs(lb, la).p_a, 1.0, 1e-12);
    EXPECT_NEAR(ab.p_a + ab.p_b, 1.0, 1e-12);
    if (la > lb) EXPECT_EQ(pair_label(ab.p_a), 1);
  }
}

TEST(SignalProperties, ConfidenceSymmetricAndMonotone) {
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double p = 0.5 + 0.5 * i / 1000.0;
    const double w = pair_confidence(p);
    EXPECT_NEAR(w, pair_confidence(1.0 - p), 1e-12);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
    EXPECT_GT(w, prev) << "at p = " << p;
    prev = w;
  }
}

TEST(SignalProperties, FilterLengthMonotoneInTau) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> logit(-3, 3);
  std::vector<SupervisionPair> pairs;
  for (int i = 0; i < 500; ++i) pairs.push_back(make_supervision_pair("a", "b", logit(gen), logit(gen)));
  std::size_t prev = pairs.size() + 1;
  for (int i = 0; i <= 100; ++i) {
    const auto kept = filter_pairs(pairs, i / 100.0);
    EXPECT_LE(kept.size(), prev);
    for (const auto& p : kept) EXPECT_GE(p.omega, i / 100.0);
    prev = kept.size();
  }
}
