/**
 * losses.hpp: training objectives for both stages.
 *
 * Every loss returns its value together with dL/ds_i for each score that
 * entered it, so the caller can push the gradient through the student.
 *
 *   distillation:  L_dis = mean SmoothL1(s, teacher) + lambda_dis * L_rank
 *   rank:          L_rank = mean_pairs omega * BCE(sigmoid(s_a - s_b), t)
 *   calibration:   L_cal = mean (s - y)^2 + lambda_cal * (1 - pearson(s, y))
 */
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qdistill/signals.hpp"

namespace qdistill {

struct LossValue {
  double value = 0.0;
  std::vector<double> score_grads;
};

/// A supervision pair whose endpoints are positions in a score vector.
struct IndexedPair {
  std::size_t a = 0;
  std::size_t b = 0;
  int t = 1;
  double omega = 1.0;
};

inline constexpr double kDefaultSmoothL1Beta = 1.0;
inline constexpr double kPlccEpsilon = 1e-8;

LossValue smooth_l1(double pred, double target, double beta = kDefaultSmoothL1Beta);

LossValue reg_loss(std::span<const double> scores, std::span<const double> teacher_scores,
                   double beta = kDefaultSmoothL1Beta);

double rank_prob(double s_a, double s_b);

LossValue rank_loss(std::span<const double> scores, std::span<const IndexedPair> pairs);

/// Id-keyed form. Gradients follow the key order of `scores_by_id`.
LossValue rank_loss(const std::map<std::string, double>& scores_by_id,
                    std::span<const SupervisionPair> pairs);

/// Point term over every score plus lambda_dis times the rank term over `pairs`.
LossValue distill_loss(std::span<const double> scores, std::span<const double> teacher_scores,
                       std::span<const IndexedPair> pairs, double lambda_dis,
                       double beta = kDefaultSmoothL1Beta);

LossValue mse_loss(std::span<const double> scores, std::span<const double> labels);

/// 1 - pearson(scores, labels). A batch whose score spread is below
/// kPlccEpsilon yields 1 with a zero gradient.
LossValue plcc_loss(std::span<const double> scores, std::span<const double> labels);

LossValue calib_loss(std::span<const double> scores, std::span<const double> labels,
                     double lambda_cal);

}  // namespace qdistill
