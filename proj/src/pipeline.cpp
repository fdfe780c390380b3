#include "qdistill/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "qdistill/error.hpp"
#include "qdistill/rng.hpp"

namespace qdistill {
namespace {

constexpr double kUndefinedPlcc = -2.0;  // below any attainable correlation

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::size_t floor_count(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

/// Rank-term pieces: unique endpoint rows and pairs re-indexed into them.
struct PairBatch {
  std::vector<std::size_t> rows;
  std::vector<IndexedPair> pairs;
};

PairBatch localize(std::span<const IndexedPair> pairs) {
  PairBatch out;
  std::map<std::size_t, std::size_t> local;
  auto slot = [&](std::size_t row) {
    auto [it, inserted] = local.emplace(row, out.rows.size());
    if (inserted) out.rows.push_back(row);
    return it->second;
  };
  for (const IndexedPair& p : pairs) out.pairs.push_back({slot(p.a), slot(p.b), p.t, p.omega});
  return out;
}

struct DistillTerms {
  double point = 0.0;
  double rank = 0.0;
};

/// Distillation loss (and optionally its parameter gradient) on a set of rows and pairs.
DistillTerms distill_terms(const TrainConfig& config, const StudentParams& params,
                           const Eigen::MatrixXd& x, std::span<const double> teacher,
                           std::span<const std::size_t> rows, std::span<const IndexedPair> pairs,
                           ParamGrads* grads) {
  DistillTerms terms;
  if (config.supervision.point && !rows.empty()) {
    const Eigen::MatrixXd xb = gather_rows(x, rows);
    const auto scores = to_vector(forward_batch(params, xb));
    std::vector<double> targets(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) targets[i] = teacher[rows[i]];
    const LossValue reg = reg_loss(scores, targets, config.smooth_l1_beta);
    terms.point = reg.value;
    if (grads) grads->add_scaled(backward(params, xb, reg.score_grads), 1.0);
  }
  if (config.supervision.pair && !pairs.empty()) {
    const PairBatch batch = localize(pairs);
    const Eigen::MatrixXd xb = gather_rows(x, batch.rows);
    const auto scores = to_vector(forward_batch(params, xb));
    const LossValue rank = rank_loss(scores, batch.pairs);
    terms.rank = rank.value;
    if (grads) grads->add_scaled(backward(params, xb, rank.score_grads), config.lambda_dis);
  }
  return terms;
}

double holdout_plcc(const StudentParams& params, const Eigen::MatrixXd& x,
                    std::span<const double> labels) {
  if (x.rows() < 2) return kUndefinedPlcc;
  const auto pred = to_vector(forward_batch(params, x));
  try {
    return plcc(pred, labels);
  } catch (const Error&) {
    return kUndefinedPlcc;
  }
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

bool operator==(const EpochRecord& a, const EpochRecord& b) {
  return a.epoch == b.epoch && a.train_loss == b.train_loss && a.train_point == b.train_point &&
         a.train_rank == b.train_rank && a.val_loss == b.val_loss && a.val_plcc == b.val_plcc;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kConfiguration, what); };
  for (const StageConfig* s : {&stage1, &stage2}) {
    if (s->epochs < 0 || s->batch_size <= 0) fail("epochs must be >= 0 and batch sizes positive");
    s->optim.validate();
  }
  for (int h : hidden) {
    if (h <= 0) fail("hidden widths must be positive");
  }
  if (!(mos_ratio >= 0.0 && mos_ratio <= 1.0)) fail("mos_ratio must lie in [0, 1]");
  if (!(calib_holdout_frac > 0.0 && calib_holdout_frac < 1.0)) fail("calib_holdout_frac must lie in (0, 1)");
  if (!(stage1_val_frac >= 0.0 && stage1_val_frac < 1.0)) fail("stage1_val_frac must lie in [0, 1)");
  if (!(tau >= 0.0 && tau <= 1.0)) fail("tau must lie in [0, 1]");
  if (!(lambda_dis >= 0.0) || !(lambda_cal >= 0.0)) fail("loss weights must be >= 0");
  if (!(smooth_l1_beta > 0.0)) fail("smooth_l1_beta must be positive");
  if (!skip_stage1 && !supervision.point && !supervision.pair) fail("Stage 1 needs point or pair supervision");
}

FeatureScaler FeatureScaler::fit(const FeatureDataset& dataset) {
  const auto rows = dataset.rows_in(Split::kTrain);
  if (rows.empty()) throw Error(ErrorKind::kInsufficientData, "no training rows");
  FeatureScaler s;
  const auto d = static_cast<Eigen::Index>(dataset.dim());
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  const auto& x = dataset.features();
  for (Eigen::Index j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t r : rows) m += x(static_cast<Eigen::Index>(r), j);
    m /= static_cast<double>(rows.size());
    double v = 0.0;
    for (std::size_t r : rows) v += std::pow(x(static_cast<Eigen::Index>(r), j) - m, 2);
    const double sd = std::sqrt(v / static_cast<double>(rows.size()));
    s.mean[j] = m;
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd FeatureScaler::apply(const Eigen::MatrixXd& features) const {
  if (static_cast<std::size_t>(features.cols()) != mean.size()) {
    throw Error(ErrorKind::kShape, "feature width does not match the scaler");
  }
  Eigen::MatrixXd out = features;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    out.col(j) = (out.col(j).array() - mean[j]) / scale[j];
  }
  return out;
}

std::vector<double> Student::predict(const FeatureDataset& dataset,
                                     std::span<const std::size_t> rows) const {
  const Eigen::MatrixXd x = scaler.apply(gather_rows(dataset.features(), rows));
  return to_vector(forward_batch(params, x));
}

MosBudget split_mos_budget(const FeatureDataset& dataset, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error(ErrorKind::kConfiguration, "MOS ratio must lie in [0, 1]");
  const auto train = dataset.rows_in(Split::kTrain);
  const std::size_t count = floor_count(ratio, train.size());
  if (ratio > 0.0 && count == 0) {
    throw Error(ErrorKind::kBudgetTooSmall, "MOS ratio selects no training image");
  }
  std::vector<std::size_t> candidates;
  for (std::size_t r : train) {
    if (dataset.has_mos(r)) candidates.push_back(r);
  }
  if (candidates.size() < count) {
    throw Error(ErrorKind::kMissingLabels, "training split has fewer MOS labels than the budget");
  }
  const auto order = permutation(candidates.size(), seed);
  std::vector<bool> labeled(dataset.size(), false);
  for (std::size_t k = 0; k < count; ++k) labeled[candidates[order[k]]] = true;
  MosBudget out;
  for (std::size_t k = 0; k < count; ++k) out.labeled.push_back(dataset.ids()[candidates[order[k]]]);
  for (std::size_t r : train) {
    if (!labeled[r]) out.unlabeled.push_back(dataset.ids()[r]);
  }
  return out;
}

std::size_t select_checkpoint(std::span<const EpochRecord> history, CheckpointMode mode) {
  if (history.empty()) throw Error(ErrorKind::kInsufficientData, "empty training history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    const bool better = mode == CheckpointMode::kMosFree
                            ? history[i].val_loss < history[best].val_loss
                            : history[i].val_plcc > history[best].val_plcc;
    if (better) best = i;
  }
  return best;
}

Student fresh_student(const TrainConfig& config, const FeatureDataset& dataset) {
  Student student;
  student.scaler = FeatureScaler::fit(dataset);
  std::vector<int> sizes{static_cast<int>(dataset.dim())};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(1);
  const std::uint64_t init_seed = derive_seed(config.seed, "init");
  student.params = init_params(sizes, init_seed);
  student.seed_lineage = {config.seed, init_seed};
  return student;
}

Stage1Result run_stage1(const TrainConfig& config, const FeatureDataset& dataset,
                        std::span<const TeacherPointSignal> points,
                        std::span<const SupervisionPair> pairs) {
  config.validate();
  Stage1Result result{fresh_student(config, dataset), RunLog{"stage1", {}, -1, {}}};
  Student& student = result.student;

  std::vector<double> teacher(dataset.size(), std::numeric_limits<double>::quiet_NaN());
  for (const TeacherPointSignal& p : points) {
    if (auto row = dataset.find_row(p.image_id)) teacher[*row] = p.soft_score;
  }
  const auto train = dataset.rows_in(Split::kTrain);
  for (std::size_t r : train) {
    if (std::isnan(teacher[r])) {
      throw Error(ErrorKind::kInvalidSignal, "no teacher point signal for image " + dataset.ids()[r]);
    }
  }

  std::vector<IndexedPair> retained;
  for (const SupervisionPair& p : pairs) {
    const auto ra = dataset.find_row(p.a);
    const auto rb = dataset.find_row(p.b);
    if (!ra || !rb) throw Error(ErrorKind::kDanglingPair, "pair references unknown image " + (ra ? p.b : p.a));
    if (dataset.split(*ra) != Split::kTrain || dataset.split(*rb) != Split::kTrain) {
      throw Error(ErrorKind::kDanglingPair, "pair (" + p.a + ", " + p.b + ") leaves the training split");
    }
    if (!config.supervision.confidence) {
      retained.push_back({*ra, *rb, p.t, 1.0});
    } else if (p.omega >= config.tau) {
      retained.push_back({*ra, *rb, p.t, p.omega});
    }
  }

  student.seed_lineage.push_back(derive_seed(config.seed, "stage1"));
  if (config.stage1.epochs == 0) return result;

  // Hold out a slice of the training split for MOS-free checkpoint selection.
  std::vector<bool> held(dataset.size(), false);
  {
    const auto order = permutation(train.size(), derive_seed(config.seed, "stage1_holdout"));
    const std::size_t n_hold = floor_count(config.stage1_val_frac, train.size());
    for (std::size_t k = 0; k < n_hold; ++k) held[train[order[k]]] = true;
  }
  std::vector<std::size_t> fit_rows, hold_rows;
  for (std::size_t r : train) (held[r] ? hold_rows : fit_rows).push_back(r);
  if (fit_rows.empty()) throw Error(ErrorKind::kInsufficientData, "no training rows left after the hold-out");
  std::vector<IndexedPair> fit_pairs, hold_pairs;
  for (const IndexedPair& p : retained) {
    if (!held[p.a] && !held[p.b]) fit_pairs.push_back(p);
    else if (held[p.a] && held[p.b]) hold_pairs.push_back(p);
  }
  if (config.supervision.pair && !config.supervision.point && fit_pairs.empty()) {
    throw Error(ErrorKind::kEmptyBatch, "pair-only distillation with no retained pairs");
  }

  const Eigen::MatrixXd x = student.scaler.apply(dataset.features());
  OptimizerState optim = make_optimizer_state(student.params, config.stage1.optim);
  Rng shuffle(derive_seed(config.seed, "stage1_shuffle"));
  const auto batch = static_cast<std::size_t>(config.stage1.batch_size);
  const std::size_t steps = (fit_rows.size() + batch - 1) / batch;
  const std::size_t pair_batch = (fit_pairs.size() + steps - 1) / steps;
  std::vector<StudentParams> snapshots;

  for (int epoch = 1; epoch <= config.stage1.epochs; ++epoch) {
    shuffle.shuffle(fit_rows);
    shuffle.shuffle(fit_pairs);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t step = 0; step < steps; ++step) {
      const std::size_t r0 = step * batch;
      const std::span<const std::size_t> rows(fit_rows.data() + r0, std::min(batch, fit_rows.size() - r0));
      const std::size_t p0 = std::min(step * pair_batch, fit_pairs.size());
      const std::span<const IndexedPair> pb(fit_pairs.data() + p0, std::min(pair_batch, fit_pairs.size() - p0));
      ParamGrads grads = student.params.zeros_like();
      const DistillTerms terms = distill_terms(config, student.params, x, teacher, rows, pb, &grads);
      const double loss = terms.point + config.lambda_dis * terms.rank;
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::kTrainingDivergence,
                    "non-finite Stage 1 loss at step " + std::to_string(optim.step + 1));
      }
      optimizer_step(student.params, grads, optim);
      rec.train_point += terms.point / double(steps);
      rec.train_rank += terms.rank / double(steps);
    }
    rec.train_loss = rec.train_point + config.lambda_dis * rec.train_rank;
    if (hold_rows.empty()) {
      rec.val_loss = rec.train_loss;
    } else {
      const DistillTerms val = distill_terms(config, student.params, x, teacher, hold_rows, hold_pairs, nullptr);
      rec.val_loss = val.point + config.lambda_dis * val.rank;
    }
    result.log.epochs.push_back(rec);
    snapshots.push_back(student.params);
  }

  const std::size_t chosen = select_checkpoint(result.log.epochs, CheckpointMode::kMosFree);
  result.log.selected = static_cast<int>(chosen);
  student.params = snapshots[chosen];
  student.optimizer = std::move(optim);
  return result;
}

Stage2Result run_stage2(const TrainConfig& config, const Student& start,
                        const FeatureDataset& dataset, std::span<const std::string> labeled_ids) {
  config.validate();
  if (labeled_ids.empty()) throw Error(ErrorKind::kMissingLabels, "calibration needs MOS-labeled images");
  std::vector<std::size_t> rows;
  std::vector<double> labels;
  for (const std::string& id : labeled_ids) {
    const std::size_t r = dataset.row_of(id);
    rows.push_back(r);
    labels.push_back(dataset.mos(r));
  }
  const std::size_t m = rows.size();

  // Positions into rows/labels.
  std::vector<std::size_t> fit, hold;
  const bool few_shot = config.checkpoint_mode == CheckpointMode::kFewShot;
  if (few_shot && m >= 4) {
    const auto order = permutation(m, derive_seed(config.seed, "stage2_holdout"));
    const auto wanted = static_cast<std::size_t>(std::llround(config.calib_holdout_frac * double(m)));
    const std::size_t n_hold = std::clamp<std::size_t>(wanted, 2, m - 2);
    hold.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
    fit.assign(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());
    std::sort(fit.begin(), fit.end());
    std::sort(hold.begin(), hold.end());
  } else {
    fit.resize(m);
    std::iota(fit.begin(), fit.end(), 0);
    hold = fit;
  }

  Stage2Result result{start, RunLog{"stage2", {}, -1, {}}};
  Student& student = result.student;
  student.seed_lineage.push_back(derive_seed(config.seed, "stage2"));
  OptimizerState optim = (config.reuse_optimizer && start.optimizer)
                             ? *start.optimizer
                             : make_optimizer_state(student.params, config.stage2.optim);
  optim.hyper = config.stage2.optim;
  const std::size_t first_trainable = config.freeze_to_head ? student.params.num_layers() - 1 : 0;

  const Eigen::MatrixXd x_all = student.scaler.apply(gather_rows(dataset.features(), rows));
  auto subset_x = [&](std::span<const std::size_t> pos) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(pos.size()), x_all.cols());
    for (std::size_t i = 0; i < pos.size(); ++i) out.row(Eigen::Index(i)) = x_all.row(Eigen::Index(pos[i]));
    return out;
  };
  auto subset_y = [&](std::span<const std::size_t> pos) {
    std::vector<double> out(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) out[i] = labels[pos[i]];
    return out;
  };
  auto batch_loss = [&](std::span<const double> scores, std::span<const double> y) {
    const bool varied = y.size() >= 2 && *std::max_element(y.begin(), y.end()) > *std::min_element(y.begin(), y.end());
    return varied ? calib_loss(scores, y, config.lambda_cal) : mse_loss(scores, y);
  };
  const Eigen::MatrixXd x_fit = subset_x(fit);
  const std::vector<double> y_fit = subset_y(fit);
  const Eigen::MatrixXd x_hold = subset_x(hold);
  const std::vector<double> y_hold = subset_y(hold);

  std::vector<StudentParams> snapshots;
  {
    EpochRecord rec;
    rec.epoch = 0;
    rec.train_loss = batch_loss(to_vector(forward_batch(student.params, x_fit)), y_fit).value;
    rec.val_plcc = holdout_plcc(student.params, x_hold, y_hold);
    result.log.epochs.push_back(rec);
    snapshots.push_back(student.params);
  }

  Rng shuffle(derive_seed(config.seed, "stage2_shuffle"));
  const auto batch = static_cast<std::size_t>(config.stage2.batch_size);
  std::vector<std::size_t> order(fit.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= config.stage2.epochs; ++epoch) {
    shuffle.shuffle(order);
    // Batch boundaries; a trailing single sample joins the previous batch.
    std::vector<std::size_t> bounds;
    for (std::size_t b = 0; b < order.size(); b += batch) bounds.push_back(b);
    bounds.push_back(order.size());
    if (bounds.size() > 2 && bounds[bounds.size() - 1] - bounds[bounds.size() - 2] < 2) {
      bounds.erase(bounds.end() - 2);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
      const std::span<const std::size_t> idx(order.data() + bounds[k], bounds[k + 1] - bounds[k]);
      Eigen::MatrixXd xb(static_cast<Eigen::Index>(idx.size()), x_fit.cols());
      std::vector<double> yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        xb.row(Eigen::Index(i)) = x_fit.row(Eigen::Index(idx[i]));
        yb[i] = y_fit[idx[i]];
      }
      const auto scores = to_vector(forward_batch(student.params, xb));
      const LossValue loss = batch_loss(scores, yb);
      if (!std::isfinite(loss.value)) {
        throw Error(ErrorKind::kTrainingDivergence,
                    "non-finite Stage 2 loss at step " + std::to_string(optim.step + 1));
      }
      optimizer_step(student.params, backward(student.params, xb, loss.score_grads), optim, first_trainable);
      rec.train_loss += loss.value / double(bounds.size() - 1);
    }
    rec.val_plcc = holdout_plcc(student.params, x_hold, y_hold);
    result.log.epochs.push_back(rec);
    snapshots.push_back(student.params);
  }

  const std::size_t chosen = few_shot ? select_checkpoint(result.log.epochs, CheckpointMode::kFewShot)
                                      : result.log.epochs.size() - 1;
  result.log.selected = static_cast<int>(chosen);
  student.params = snapshots[chosen];
  student.optimizer = std::move(optim);
  return result;
}

AffineFit affine_calibrate(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::kShape, "affine fit inputs differ in length");
  if (scores.size() < 2) throw Error(ErrorKind::kDegenerateFit, "affine fit needs two labeled points");
  const double mx = mean_of(scores);
  const double my = mean_of(labels);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sxy += (scores[i] - mx) * (labels[i] - my);
    sxx += (scores[i] - mx) * (scores[i] - mx);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::kDegenerateFit, "teacher scores have zero variance");
  const double a = sxy / sxx;
  return {a, my - a * mx};
}

EvalReport evaluate_split(const Student& student, const FeatureDataset& dataset, Split split) {
  std::vector<std::size_t> rows;
  for (std::size_t r : dataset.rows_in(split)) {
    if (dataset.has_mos(r)) rows.push_back(r);
  }
  if (rows.size() < 2) {
    throw Error(ErrorKind::kMissingLabels, "split " + std::string(to_string(split)) + " has fewer than two MOS labels");
  }
  std::vector<double> labels;
  for (std::size_t r : rows) labels.push_back(dataset.mos(r));
  return evaluate(student.predict(dataset, rows), labels);
}

PipelineResult run_pipeline(const TrainConfig& config, const DatasetBundle& bundle,
                            const PairSource& pair_source) {
  config.validate();
  const FeatureDataset& dataset = bundle.dataset;
  PipelineResult out;
  const MosBudget budget = split_mos_budget(dataset, config.mos_ratio, derive_seed(config.seed, "mos_budget"));
  out.labeled_ids = budget.labeled;

  if (config.skip_stage1) {
    if (budget.labeled.empty()) throw Error(ErrorKind::kConfiguration, "calibration-only run needs a MOS budget");
    out.student = fresh_student(config, dataset);
  } else {
    const std::vector<SupervisionPair> pairs = pair_source ? pair_source(config.seed) : bundle.pairs;
    Stage1Result s1 = run_stage1(config, dataset, bundle.points, pairs);
    out.student = std::move(s1.student);
    out.stage1 = std::move(s1.log);
  }
  if (!budget.labeled.empty()) {
    Stage2Result s2 = run_stage2(config, out.student, dataset, budget.labeled);
    out.student = std::move(s2.student);
    out.stage2 = std::move(s2.log);
  }
  for (Split split : {Split::kVal, Split::kTest}) {
    std::size_t labeled = 0;
    for (std::size_t r : dataset.rows_in(split)) labeled += dataset.has_mos(r) ? 1 : 0;
    if (labeled >= 2) out.reports[std::string(to_string(split))] = evaluate_split(out.student, dataset, split);
  }
  return out;
}

RepeatReport run_seeded_repeats(const TrainConfig& config, const DatasetBundle& bundle,
                                std::span<const std::uint64_t> seeds, const PairSource& pair_source,
                                unsigned max_threads) {
  if (seeds.empty()) throw Error(ErrorKind::kConfiguration, "at least one seed is required");
  RepeatReport report;
  report.runs.resize(seeds.size());
  std::vector<std::exception_ptr> failures(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        TrainConfig run_config = config;
        run_config.seed = seeds[i];
        report.runs[i] = {seeds[i], run_pipeline(run_config, bundle, pair_source).reports};
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  unsigned threads = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(seeds.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), "run with seed " + std::to_string(seeds[i]) + " failed: " + e.what());
    }
  }

  // Aggregate in seed order so the result does not depend on how seeds were listed.
  std::vector<const SeedResult*> sorted;
  for (const SeedResult& r : report.runs) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->seed < b->seed; });
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> columns;
  for (const SeedResult* r : sorted) {
    for (const auto& [split, eval] : r->reports) {
      columns[split].first.push_back(eval.srcc);
      columns[split].second.push_back(eval.plcc);
    }
  }
  for (const auto& [split, cols] : columns) {
    report.aggregate[split] = {mean_of(cols.first), sample_std(cols.first), mean_of(cols.second),
                               sample_std(cols.second)};
  }
  return report;
}

TrainConfig apply_ablation_mode(TrainConfig config, const std::string& mode) {
  config.supervision = {};
  config.skip_stage1 = false;
  if (mode == "point") {
    config.supervision.pair = false;
  } else if (mode == "pair") {
    config.supervision.confidence = false;
  } else if (mode == "pair_conf") {
    config.supervision.point = false;
  } else if (mode == "cft_only") {
    config.skip_stage1 = true;
  } else if (mode != "all") {
    throw Error(ErrorKind::kUsage, "unknown ablation mode '" + mode + "'");
  }
  return config;
}

}  // namespace qdistill
