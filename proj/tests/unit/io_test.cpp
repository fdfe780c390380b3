#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <fstream>
#include <limits>
#include <random>

#include "qdistill/error.hpp"
#include "qdistill/io.hpp"
#include "qdistill/log.hpp"
#include "temp_dir.hpp"

using namespace qdistill;
namespace fs = std::filesystem;

namespace {

SynthBenchmark small_bench() {
  SynthConfig c;
  c.n = 120;
  c.seed = 3;
  return make_benchmark(c);
}

void expect_same_bytes(const fs::path& a, const fs::path& b) {
  EXPECT_EQ(read_text(a), read_text(b)) << a << " vs " << b;
}

void expect_error(ErrorKind kind, const std::function<void()>& fn, const std::string& needle = {}) {
  try {
    fn();
    FAIL() << "no error thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
    if (!needle.empty()) EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(3.0), "3");
  EXPECT_EQ(format_double(-2.5e-300), "-2.5e-300");
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t b = bits(gen);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
}

TEST(Bundle, RoundTripIsExact) {
  TempDir dir;
  const auto bench = small_bench();
  const auto paths = DatasetPaths::in_directory(dir / "a");
  write_bundle(bench.bundle, paths);
  const DatasetBundle loaded = load_bundle(paths);

  const auto& src = bench.bundle.dataset;
  const auto& got = loaded.dataset;
  ASSERT_EQ(got.size(), src.size());
  EXPECT_EQ(got.ids(), src.ids());  // synthetic ids are already in id order
  EXPECT_EQ(got.features(), src.features());
  EXPECT_EQ(got.splits(), src.splits());
  EXPECT_EQ(got.latent(), src.latent());
  for (std::size_t r = 0; r < src.size(); ++r) EXPECT_EQ(got.mos(r), src.mos(r));
  ASSERT_EQ(loaded.points.size(), bench.bundle.points.size());
  for (std::size_t i = 0; i < loaded.points.size(); ++i) {
    EXPECT_EQ(loaded.points[i].image_id, bench.bundle.points[i].image_id);
    EXPECT_EQ(loaded.points[i].logits, bench.bundle.points[i].logits);
    EXPECT_EQ(loaded.points[i].soft_score, bench.bundle.points[i].soft_score);
  }
  ASSERT_EQ(loaded.pairs.size(), bench.bundle.pairs.size());
  for (std::size_t i = 0; i < loaded.pairs.size(); ++i) {
    EXPECT_EQ(loaded.pairs[i].a, bench.bundle.pairs[i].a);
    EXPECT_EQ(loaded.pairs[i].logit_a, bench.bundle.pairs[i].logit_a);
    EXPECT_EQ(loaded.pairs[i].logit_b, bench.bundle.pairs[i].logit_b);
    EXPECT_EQ(loaded.pairs[i].omega, bench.bundle.pairs[i].omega);
  }

  const auto again = DatasetPaths::in_directory(dir / "b");
  write_bundle(loaded, again);
  for (auto member : {&DatasetPaths::features, &DatasetPaths::mos, &DatasetPaths::points,
                      &DatasetPaths::pairs, &DatasetPaths::splits, &DatasetPaths::latent}) {
    expect_same_bytes(paths.*member, again.*member);
  }
}

TEST(Bundle, RowsNormalizedById) {
  TempDir dir;
  const auto paths = DatasetPaths::in_directory(dir.path());
  write_text(paths.features, "{\"id\":\"b\",\"feat\":[2,0]}\n{\"id\":\"a\",\"feat\":[1,0]}\n");
  write_text(paths.splits, "id,split\nb,test\na,train\n");
  write_text(paths.mos, "id,mos\na,1.5\nb,4\n");
  const auto bundle = load_bundle(paths);
  EXPECT_EQ(bundle.dataset.ids(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(bundle.dataset.features()(0, 0), 1.0);
  EXPECT_EQ(bundle.dataset.split(1), Split::kTest);
  EXPECT_EQ(bundle.dataset.mos(1), 4.0);
}

TEST(Bundle, DanglingPairNamesBothFiles) {
  TempDir dir;
  const auto bench = small_bench();
  const auto paths = DatasetPaths::in_directory(dir.path());
  write_bundle(bench.bundle, paths);
  std::ofstream(paths.pairs, std::ios::app) << R"({"a":"img00001","b":"ghost","logit_a":0,"logit_b":-1})" << "\n";
  try {
    load_bundle(paths);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kReference);
    const std::string what = e.what();
    EXPECT_NE(what.find("ghost"), std::string::npos);
    EXPECT_NE(what.find("pairs.jsonl"), std::string::npos);
    EXPECT_NE(what.find("features.jsonl"), std::string::npos);
  }
}

TEST(Bundle, FormatErrors) {
  TempDir dir;
  const auto paths = DatasetPaths::in_directory(dir.path());
  write_text(paths.splits, "id,split\na,train\nb,train\n");
  write_text(paths.features, "{\"id\":\"a\",\"feat\":[1,2]}\n{\"id\":\"b\",\"feat\":[1,2,3]}\n");
  expect_error(ErrorKind::kFormat, [&] { load_bundle(paths); }, "features.jsonl:2:");

  write_text(paths.features, "{\"id\":\"a\",\"feat\":[1,2]}\n{\"id\":\"b\",\"feat\":[1,2}\n");
  expect_error(ErrorKind::kFormat, [&] { load_bundle(paths); }, "features.jsonl:2:");

  write_text(paths.features, "{\"id\":\"a\",\"feat\":[1,2]}\n{\"id\":\"a\",\"feat\":[3,4]}\n");
  expect_error(ErrorKind::kFormat, [&] { load_bundle(paths); });

  write_text(paths.features, "{\"id\":\"a\",\"feat\":[1,2]}\n{\"id\":\"b\",\"feat\":[3,4]}\n");
  write_text(paths.splits, "id,split\na,train\nb,elsewhere\n");
  expect_error(ErrorKind::kFormat, [&] { load_bundle(paths); }, "splits.csv:3:");

  write_text(paths.splits, "id,split\na,train\n");
  expect_error(ErrorKind::kReference, [&] { load_bundle(paths); }, "'b'");
}

TEST(Bundle, MissingRequiredFile) {
  TempDir dir;
  expect_error(ErrorKind::kMissingArtifact, [&] { load_bundle(DatasetPaths::in_directory(dir.path())); });
}

TEST(SignalFiles, RoundTrip) {
  TempDir dir;
  const auto bench = small_bench();
  write_point_signals(bench.bundle.points, dir / "p1.jsonl");
  write_point_signals(read_point_signals(dir / "p1.jsonl"), dir / "p2.jsonl");
  expect_same_bytes(dir / "p1.jsonl", dir / "p2.jsonl");
  write_pair_signals(bench.bundle.pairs, dir / "q1.jsonl");
  write_pair_signals(read_pair_signals(dir / "q1.jsonl"), dir / "q2.jsonl");
  expect_same_bytes(dir / "q1.jsonl", dir / "q2.jsonl");
  EXPECT_EQ(point_signal_line(make_point_signal("x", {0, 0.5, 1, 2, -3})),
            "{\"id\":\"x\",\"logits\":[0.0,0.5,1.0,2.0,-3.0]}\n");
}

TEST(SynthConfigFile, RoundTrip) {
  TempDir dir;
  SynthConfig c;
  c.n = 777;
  c.teacher_bias = TeacherBias::kAffine;
  c.pair_noise = PairNoise::kHeteroscedastic;
  c.teacher_noise = 0.123456789;
  c.seed = 99;
  write_synth_config(c, dir / "s.json");
  const SynthConfig back = read_synth_config(dir / "s.json");
  EXPECT_EQ(back.n, 777);
  EXPECT_EQ(back.teacher_bias, TeacherBias::kAffine);
  EXPECT_EQ(back.pair_noise, PairNoise::kHeteroscedastic);
  EXPECT_EQ(back.teacher_noise, 0.123456789);
  EXPECT_EQ(back.seed, 99u);
  write_synth_config(back, dir / "t.json");
  expect_same_bytes(dir / "s.json", dir / "t.json");
}

TEST(CheckpointFile, RoundTripIsExact) {
  set_warnings_enabled(false);
  TempDir dir;
  const auto bench = small_bench();
  TrainConfig t;
  t.stage1.epochs = 2;
  const auto s1 = run_stage1(t, bench.bundle.dataset, bench.bundle.points, bench.bundle.pairs);
  set_warnings_enabled(true);
  write_checkpoint({"stage1", s1.student}, dir / "c.json");
  const Checkpoint back = read_checkpoint(dir / "c.json");
  EXPECT_EQ(back.stage, "stage1");
  EXPECT_TRUE(back.student.params == s1.student.params);
  EXPECT_EQ(back.student.scaler.mean, s1.student.scaler.mean);
  EXPECT_EQ(back.student.scaler.scale, s1.student.scaler.scale);
  EXPECT_EQ(back.student.seed_lineage, s1.student.seed_lineage);
  ASSERT_TRUE(back.student.optimizer.has_value());
  EXPECT_EQ(back.student.optimizer->step, s1.student.optimizer->step);
  EXPECT_TRUE(back.student.optimizer->second_moment == s1.student.optimizer->second_moment);
  write_checkpoint(back, dir / "d.json");
  expect_same_bytes(dir / "c.json", dir / "d.json");

  expect_error(ErrorKind::kMissingArtifact, [&] { read_checkpoint(dir / "none.json"); });
  write_text(dir / "bad.json", "{\"format\":\"something else\"}");
  expect_error(ErrorKind::kFormat, [&] { read_checkpoint(dir / "bad.json"); });
}

TEST(RunLogFile, RoundTrip) {
  TempDir dir;
  RunLog log;
  log.stage = "stage2";
  for (int i = 0; i < 3; ++i) {
    EpochRecord r;
    r.epoch = i;
    r.train_loss = 0.1 * i + 1e-17;
    r.val_plcc = 0.9 + 0.01 * i;
    log.epochs.push_back(r);
  }
  log.selected = 2;
  log.reports["test"] = {0.8, 0.85, 0.01, 0.3, 0.4, 400};
  write_run_log(log, dir / "l.jsonl");
  EXPECT_TRUE(read_run_log(dir / "l.jsonl") == log);
  write_run_log(read_run_log(dir / "l.jsonl"), dir / "m.jsonl");
  expect_same_bytes(dir / "l.jsonl", dir / "m.jsonl");
}

TEST(EvalReportJson, FieldsAndRoundTrip) {
  const EvalReport r{0.91, 0.93, -0.002, 0.31, 0.39, 400};
  const std::string text = eval_report_json(r);
  for (const char* key : {"\"srcc\"", "\"plcc\"", "\"mean_residual\"", "\"mae\"", "\"rmse\"", "\"n\""}) {
    EXPECT_NE(text.find(key), std::string::npos);
  }
  EXPECT_TRUE(parse_eval_report(text) == r);
  EXPECT_THROW(parse_eval_report("{"), Error);
}
