#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "qdistill/error.hpp"
#include "qdistill/log.hpp"
#include "qdistill/metrics.hpp"
#include "qdistill/pipeline.hpp"
#include "qdistill/synth.hpp"

using namespace qdistill;

namespace {

const SynthBenchmark& default_bench() {
  static const SynthBenchmark bench = make_benchmark(SynthConfig{});
  return bench;
}

SynthBenchmark small_bench(std::uint64_t seed = 0) {
  SynthConfig c;
  c.n = 300;
  c.seed = seed;
  return make_benchmark(c);
}

TrainConfig quick_config() {
  TrainConfig t;
  t.stage1.epochs = 5;
  t.stage2.epochs = 10;
  return t;
}

FeatureDataset all_train(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(n), 3);
  FeatureDataset ds(ids, x, std::vector<Split>(n, Split::kTrain));
  std::vector<std::optional<double>> mos;
  for (std::size_t i = 0; i < n; ++i) mos.push_back(1.0 + (i % 5));
  ds.set_mos(mos);
  return ds;
}

std::vector<double> latent_of(const FeatureDataset& ds, std::span<const std::size_t> rows) {
  std::vector<double> q;
  for (auto r : rows) q.push_back(ds.latent()[r]);
  return q;
}

class QuietWarnings : public ::testing::Test {
 protected:
  void SetUp() override { set_warnings_enabled(false); }
  void TearDown() override { set_warnings_enabled(true); }
};

}  // namespace

TEST(MosBudget, Examples) {
  const auto ds = all_train(2000);
  EXPECT_TRUE(split_mos_budget(ds, 0.0, 1).labeled.empty());
  EXPECT_EQ(split_mos_budget(ds, 1.0, 1).labeled.size(), 2000u);
  const auto b = split_mos_budget(ds, 0.1, 1);
  ASSERT_EQ(b.labeled.size(), 200u);
  EXPECT_EQ(b.unlabeled.size(), 1800u);
  std::set<std::string> lab(b.labeled.begin(), b.labeled.end());
  EXPECT_EQ(lab.size(), 200u);
  for (const auto& id : b.unlabeled) EXPECT_FALSE(lab.count(id));
  EXPECT_EQ(b.labeled, split_mos_budget(ds, 0.1, 1).labeled);
  EXPECT_NE(b.labeled, split_mos_budget(ds, 0.1, 2).labeled);
}

TEST(MosBudget, LeavesOtherSplitsAlone) {
  const auto& ds = default_bench().bundle.dataset;
  const auto b = split_mos_budget(ds, 0.3, 4);
  EXPECT_EQ(b.labeled.size(), 420u);
  for (const auto& id : b.labeled) EXPECT_EQ(ds.split(ds.row_of(id)), Split::kTrain);
  EXPECT_EQ(b.labeled.size() + b.unlabeled.size(), ds.rows_in(Split::kTrain).size());
}

TEST(MosBudget, TooSmall) {
  const auto ds = all_train(50);
  try {
    split_mos_budget(ds, 0.01, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBudgetTooSmall);
  }
}

TEST(SelectCheckpoint, Rules) {
  std::vector<EpochRecord> h(1);
  EXPECT_EQ(select_checkpoint(h, CheckpointMode::kMosFree), 0u);
  EXPECT_EQ(select_checkpoint(h, CheckpointMode::kFewShot), 0u);
  h.resize(4);
  for (int i = 0; i < 4; ++i) h[i].val_loss = 1.0 - 0.1 * i;
  EXPECT_EQ(select_checkpoint(h, CheckpointMode::kMosFree), 3u);
  std::vector<EpochRecord> tie(2);
  tie[0].val_loss = tie[1].val_loss = 0.5;
  tie[0].val_plcc = tie[1].val_plcc = 0.8;
  EXPECT_EQ(select_checkpoint(tie, CheckpointMode::kMosFree), 0u);
  EXPECT_EQ(select_checkpoint(tie, CheckpointMode::kFewShot), 0u);
  tie[1].val_plcc = 0.9;
  EXPECT_EQ(select_checkpoint(tie, CheckpointMode::kFewShot), 1u);
}

TEST(AffineCalibrate, Examples) {
  const std::vector<double> s = {1.2, 2.5, 3.1, 4.9};
  const auto id = affine_calibrate(s, s);
  EXPECT_NEAR(id.a, 1.0, 1e-9);
  EXPECT_NEAR(id.b, 0.0, 1e-9);
  const auto two = affine_calibrate(std::vector<double>{1, 2}, std::vector<double>{3, 5});
  EXPECT_DOUBLE_EQ(two.a, 2.0);
  EXPECT_DOUBLE_EQ(two.b, 1.0);
  try {
    affine_calibrate(std::vector<double>{2, 2}, std::vector<double>{1, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateFit);
  }
}

TEST(AffineCalibrate, FixesMiscalibratedTeacher) {
  const auto& bundle = default_bench().bundle;
  const auto& ds = bundle.dataset;
  const auto budget = split_mos_budget(ds, 0.1, 0);
  std::vector<double> fit_s, fit_y;
  for (const auto& id : budget.labeled) {
    const auto r = ds.row_of(id);
    fit_s.push_back(bundle.points[r].soft_score);
    fit_y.push_back(ds.mos(r));
  }
  const AffineFit fit = affine_calibrate(fit_s, fit_y);
  std::vector<double> raw, cal, y;
  for (auto r : ds.rows_in(Split::kTest)) {
    raw.push_back(bundle.points[r].soft_score);
    cal.push_back(fit(bundle.points[r].soft_score));
    y.push_back(ds.mos(r));
  }
  const double before = std::abs(residual_stats(raw, y).mean_residual);
  const double after = std::abs(residual_stats(cal, y).mean_residual);
  EXPECT_LE(after, 0.2 * before);
  EXPECT_NEAR(srcc(cal, y), srcc(raw, y), 1e-12);
}

TEST_F(QuietWarnings, Stage1ZeroEpochs) {
  const auto bench = small_bench();
  TrainConfig t = quick_config();
  t.stage1.epochs = 0;
  const auto r = run_stage1(t, bench.bundle.dataset, bench.bundle.points, bench.bundle.pairs);
  EXPECT_TRUE(r.log.epochs.empty());
  EXPECT_EQ(r.log.selected, -1);
  EXPECT_TRUE(r.student.params == fresh_student(t, bench.bundle.dataset).params);
}

TEST_F(QuietWarnings, Stage1NeverReadsMos) {
  const auto bench = small_bench();
  const auto& ds = bench.bundle.dataset;
  const auto before = ds.mos_access_count();
  run_stage1(quick_config(), ds, bench.bundle.points, bench.bundle.pairs);
  EXPECT_EQ(ds.mos_access_count(), before);
  ds.mos(0);
  EXPECT_EQ(ds.mos_access_count(), before + 1);
}

TEST_F(QuietWarnings, Stage1Deterministic) {
  const auto bench = small_bench();
  const auto a = run_stage1(quick_config(), bench.bundle.dataset, bench.bundle.points, bench.bundle.pairs);
  const auto b = run_stage1(quick_config(), bench.bundle.dataset, bench.bundle.points, bench.bundle.pairs);
  EXPECT_TRUE(a.log == b.log);
  EXPECT_TRUE(a.student.params == b.student.params);
  ASSERT_EQ(a.log.epochs.size(), 5u);
  EXPECT_GE(a.log.selected, 0);
}

TEST_F(QuietWarnings, Stage1TracksTeacherRanking) {
  const auto& bundle = default_bench().bundle;
  const auto& ds = bundle.dataset;
  TrainConfig t;
  t.seed = 0;
  const auto r = run_stage1(t, ds, bundle.points, bundle.pairs);
  const auto test = ds.rows_in(Split::kTest);
  const auto q = latent_of(ds, test);
  std::vector<double> teacher;
  for (auto row : test) teacher.push_back(bundle.points[row].soft_score);
  const double student = srcc(r.student.predict(ds, test), q);
  EXPECT_GE(student, srcc(teacher, q) - 0.05);
}

TEST_F(QuietWarnings, Stage1Errors) {
  auto bench = small_bench();
  auto pairs = bench.bundle.pairs;
  pairs[0].b = "nobody";
  try {
    run_stage1(quick_config(), bench.bundle.dataset, bench.bundle.points, pairs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDanglingPair);
  }
  auto points = bench.bundle.points;
  const auto train_row = bench.bundle.dataset.rows_in(Split::kTrain)[0];
  points.erase(points.begin() + static_cast<std::ptrdiff_t>(train_row));
  EXPECT_THROW(run_stage1(quick_config(), bench.bundle.dataset, points, bench.bundle.pairs), Error);
}

TEST_F(QuietWarnings, Stage2KeepsPerfectStart) {
  auto bench = small_bench();
  auto& ds = bench.bundle.dataset;
  TrainConfig t = quick_config();
  t.hidden = {};
  Student start = fresh_student(t, ds);
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto scores = start.predict(ds, all);
  ds.set_mos(std::vector<std::optional<double>>(scores.begin(), scores.end()));
  const auto budget = split_mos_budget(ds, 0.5, 1);
  const auto r = run_stage2(t, start, ds, budget.labeled);
  EXPECT_NEAR(r.log.epochs[0].train_loss, 0.0, 1e-12);
  EXPECT_EQ(r.log.selected, 0);
  EXPECT_TRUE(r.student.params == start.params);
}

TEST_F(QuietWarnings, Stage2NeedsLabels) {
  const auto bench = small_bench();
  const Student s = fresh_student(quick_config(), bench.bundle.dataset);
  try {
    run_stage2(quick_config(), s, bench.bundle.dataset, std::vector<std::string>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingLabels);
  }
}

TEST_F(QuietWarnings, Stage2ImprovesPlcc) {
  const auto& bundle = default_bench().bundle;
  const auto& ds = bundle.dataset;
  TrainConfig t;
  t.seed = 0;
  const auto s1 = run_stage1(t, ds, bundle.points, bundle.pairs);
  const auto budget = split_mos_budget(ds, 0.1, derive_seed(0, "mos_budget"));
  const auto s2 = run_stage2(t, s1.student, ds, budget.labeled);
  EXPECT_GT(evaluate_split(s2.student, ds, Split::kTest).plcc, evaluate_split(s1.student, ds, Split::kTest).plcc);
}

TEST_F(QuietWarnings, CalibrationOnlyIsWorse) {
  const auto& bundle = default_bench().bundle;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  TrainConfig t;
  const auto full = run_seeded_repeats(apply_ablation_mode(t, "all"), bundle, seeds);
  const auto cft = run_seeded_repeats(apply_ablation_mode(t, "cft_only"), bundle, seeds);
  EXPECT_LT(cft.aggregate.at("test").srcc_mean, full.aggregate.at("test").srcc_mean);
}

TEST_F(QuietWarnings, RepeatsShape) {
  const auto bench = small_bench();
  const TrainConfig t = quick_config();
  std::vector<std::uint64_t> one = {3};
  const auto single = run_seeded_repeats(t, bench.bundle, one);
  ASSERT_EQ(single.runs.size(), 1u);
  EXPECT_EQ(single.aggregate.at("test").srcc_std, 0.0);
  EXPECT_EQ(single.aggregate.at("test").srcc_mean, single.runs[0].reports.at("test").srcc);
  TrainConfig seeded = t;
  seeded.seed = 3;
  EXPECT_TRUE(run_pipeline(seeded, bench.bundle).reports.at("test") == single.runs[0].reports.at("test"));

  std::vector<std::uint64_t> five = {0, 1, 2, 3, 4}, shuffled = {3, 0, 4, 2, 1};
  const auto a = run_seeded_repeats(t, bench.bundle, five, {}, 1);
  const auto b = run_seeded_repeats(t, bench.bundle, shuffled, {}, 2);
  EXPECT_EQ(a.runs.size(), 5u);
  EXPECT_EQ(a.aggregate.size(), 2u);
  for (const auto& [split, m] : a.aggregate) {
    EXPECT_EQ(m.srcc_mean, b.aggregate.at(split).srcc_mean);
    EXPECT_EQ(m.plcc_std, b.aggregate.at(split).plcc_std);
  }
}

TEST_F(QuietWarnings, RepeatsNameFailingSeed) {
  const auto bench = small_bench();
  TrainConfig t = quick_config();
  t.mos_ratio = 0.001;
  std::vector<std::uint64_t> seeds = {7};
  try {
    run_seeded_repeats(t, bench.bundle, seeds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBudgetTooSmall);
    EXPECT_NE(std::string(e.what()).find("seed 7"), std::string::npos);
  }
}

TEST(AblationModes, Mapping) {
  const TrainConfig t;
  EXPECT_FALSE(apply_ablation_mode(t, "point").supervision.pair);
  EXPECT_FALSE(apply_ablation_mode(t, "pair").supervision.confidence);
  EXPECT_FALSE(apply_ablation_mode(t, "pair_conf").supervision.point);
  EXPECT_TRUE(apply_ablation_mode(t, "cft_only").skip_stage1);
  const auto all = apply_ablation_mode(t, "all");
  EXPECT_TRUE(all.supervision.point && all.supervision.pair && all.supervision.confidence);
  EXPECT_THROW(apply_ablation_mode(t, "bogus"), Error);
}
