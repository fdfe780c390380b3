/**
 * pipeline.hpp: two-stage training and the evaluation protocol around it.
 *
 * Stage 1 distills the teacher's point scores and pair preferences into the
 * student without touching opinion scores. Stage 2 fine-tunes the student on
 * the small MOS-visible subset with MSE plus a batch Pearson term. The rest of
 * the file covers budget splitting, checkpoint selection, the affine
 * teacher-calibration baseline and multi-seed aggregation.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdistill/dataset.hpp"
#include "qdistill/losses.hpp"
#include "qdistill/metrics.hpp"
#include "qdistill/student.hpp"

namespace qdistill {

enum class CheckpointMode : std::uint8_t { kMosFree, kFewShot };

struct StageConfig {
  int epochs = 30;
  int batch_size = 64;
  AdamWConfig optim;
};

/// Which teacher signals Stage 1 uses.
struct Supervision {
  bool point = true;
  bool pair = true;
  bool confidence = true;  // omega weights and tau filtering; off means weight 1 for all pairs
};

struct TrainConfig {
  StageConfig stage1{30, 64, {1e-3, 0.9, 0.999, 1e-8, 1e-4}};
  StageConfig stage2{100, 32, {1e-4, 0.9, 0.999, 1e-8, 1e-4}};
  std::vector<int> hidden = {64, 32};
  double lambda_dis = 0.5;
  double lambda_cal = 1.0;
  double tau = 0.1;
  double smooth_l1_beta = kDefaultSmoothL1Beta;
  double mos_ratio = 0.1;
  double calib_holdout_frac = 0.2;
  double stage1_val_frac = 0.1;
  std::uint64_t seed = 0;
  CheckpointMode checkpoint_mode = CheckpointMode::kFewShot;
  Supervision supervision;
  bool skip_stage1 = false;      // calibration-only baseline
  bool freeze_to_head = false;   // Stage 2 updates only the last layer
  bool reuse_optimizer = false;  // Stage 2 continues Stage 1 moments

  void validate() const;
};

/// Per-feature standardization fitted on the training split.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureScaler fit(const FeatureDataset& dataset);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
};

/// A trained regressor: standardization plus network.
struct Student {
  FeatureScaler scaler;
  StudentParams params;
  std::optional<OptimizerState> optimizer;
  std::vector<std::uint64_t> seed_lineage;

  std::vector<double> predict(const FeatureDataset& dataset, std::span<const std::size_t> rows) const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based; Stage 2 logs its starting point as epoch 0
  double train_loss = 0.0;
  double train_point = 0.0;
  double train_rank = 0.0;
  double val_loss = 0.0;  // distillation loss on the Stage 1 hold-out
  double val_plcc = 0.0;  // Pearson on the Stage 2 hold-out
};

struct RunLog {
  std::string stage;
  std::vector<EpochRecord> epochs;
  int selected = -1;  // index into epochs; -1 when no epoch ran
  std::map<std::string, EvalReport> reports;

  bool operator==(const RunLog&) const = default;
};

bool operator==(const EpochRecord& a, const EpochRecord& b);

struct MosBudget {
  std::vector<std::string> labeled;
  std::vector<std::string> unlabeled;
};

/// floor(ratio * N_train) training ids become MOS-visible. Ids are taken as a
/// prefix of one seeded permutation, so budgets are nested across ratios.
MosBudget split_mos_budget(const FeatureDataset& dataset, double ratio, std::uint64_t seed);

/// mos_free: lowest val_loss. few_shot: highest val_plcc. Ties go to the earlier epoch.
std::size_t select_checkpoint(std::span<const EpochRecord> history, CheckpointMode mode);

struct Stage1Result {
  Student student;
  RunLog log;
};

/// Teacher-guided distillation. Never reads opinion scores.
Stage1Result run_stage1(const TrainConfig& config, const FeatureDataset& dataset,
                        std::span<const TeacherPointSignal> points,
                        std::span<const SupervisionPair> pairs);

/// Untrained student with the same architecture and scaler Stage 1 would use.
Student fresh_student(const TrainConfig& config, const FeatureDataset& dataset);

struct Stage2Result {
  Student student;
  RunLog log;
};

/// Calibration fine-tuning on `labeled_ids`.
Stage2Result run_stage2(const TrainConfig& config, const Student& start,
                        const FeatureDataset& dataset, std::span<const std::string> labeled_ids);

struct AffineFit {
  double a = 1.0;
  double b = 0.0;

  double operator()(double x) const { return a * x + b; }
};

/// Least-squares fit label ~ a * score + b.
AffineFit affine_calibrate(std::span<const double> scores, std::span<const double> labels);

/// Metrics of `student` against MOS on every row of `split` that has MOS.
EvalReport evaluate_split(const Student& student, const FeatureDataset& dataset, Split split);

struct PipelineResult {
  Student student;
  RunLog stage1;
  RunLog stage2;
  std::vector<std::string> labeled_ids;
  std::map<std::string, EvalReport> reports;  // "val", "test"
};

/// Supplies the pair set for a given run seed; empty function = bundle pairs.
using PairSource = std::function<std::vector<SupervisionPair>(std::uint64_t seed)>;

PipelineResult run_pipeline(const TrainConfig& config, const DatasetBundle& bundle,
                            const PairSource& pair_source = {});

struct SeedResult {
  std::uint64_t seed = 0;
  std::map<std::string, EvalReport> reports;
};

struct MetricSummary {
  double srcc_mean = 0.0;
  double srcc_std = 0.0;
  double plcc_mean = 0.0;
  double plcc_std = 0.0;
};

struct RepeatReport {
  std::vector<SeedResult> runs;  // in the order the seeds were given
  std::map<std::string, MetricSummary> aggregate;
};

/// Full pipeline once per seed (run concurrently) with mean and sample std.
RepeatReport run_seeded_repeats(const TrainConfig& config, const DatasetBundle& bundle,
                                std::span<const std::uint64_t> seeds,
                                const PairSource& pair_source = {}, unsigned max_threads = 0);

/// Ablation modes: point, pair, pair_conf, all, cft_only.
TrainConfig apply_ablation_mode(TrainConfig config, const std::string& mode);

}  // namespace qdistill
