#include "qdistill/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qdistill/error.hpp"
#include "qdistill/log.hpp"

namespace qdistill {
namespace {

void require_batch(std::span<const double> scores, std::span<const double> targets,
                   const char* what) {
  if (scores.size() != targets.size()) {
    throw Error(ErrorKind::kShape, std::string(what) + ": scores and targets differ in length");
  }
  if (scores.empty()) throw Error(ErrorKind::kEmptyBatch, std::string(what) + " of an empty batch");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

LossValue smooth_l1(double pred, double target, double beta) {
  if (!(beta > 0.0)) throw Error(ErrorKind::kConfiguration, "SmoothL1 beta must be positive");
  const double d = pred - target;
  const double value = std::abs(d) < beta ? 0.5 * d * d / beta : std::abs(d) - 0.5 * beta;
  return {value, {std::clamp(d / beta, -1.0, 1.0)}};
}

LossValue reg_loss(std::span<const double> scores, std::span<const double> teacher_scores,
                   double beta) {
  require_batch(scores, teacher_scores, "regression loss");
  const auto n = static_cast<double>(scores.size());
  LossValue out;
  out.score_grads.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const LossValue term = smooth_l1(scores[i], teacher_scores[i], beta);
    out.value += term.value;
    out.score_grads[i] = term.score_grads[0] / n;
  }
  out.value /= n;
  return out;
}

double rank_prob(double s_a, double s_b) { return sigmoid(s_a - s_b); }

LossValue rank_loss(std::span<const double> scores, std::span<const IndexedPair> pairs) {
  if (pairs.empty()) throw Error(ErrorKind::kEmptyBatch, "rank loss over an empty pair list");
  LossValue out;
  out.score_grads.assign(scores.size(), 0.0);
  const auto n = static_cast<double>(pairs.size());
  for (const IndexedPair& p : pairs) {
    if (p.a >= scores.size() || p.b >= scores.size()) {
      throw Error(ErrorKind::kDanglingPair, "pair endpoint outside the score vector");
    }
    const double z = scores[p.a] - scores[p.b];
    // BCE(sigmoid(z), t) = softplus(z) - t z, evaluated without forming log(sigmoid).
    const double bce = std::max(z, 0.0) - p.t * z + std::log1p(std::exp(-std::abs(z)));
    out.value += p.omega * bce;
    const double dz = p.omega * (sigmoid(z) - p.t) / n;
    out.score_grads[p.a] += dz;
    out.score_grads[p.b] -= dz;
  }
  out.value /= n;
  return out;
}

LossValue rank_loss(const std::map<std::string, double>& scores_by_id,
                    std::span<const SupervisionPair> pairs) {
  std::vector<double> scores;
  std::map<std::string, std::size_t> position;
  for (const auto& [id, s] : scores_by_id) {
    position.emplace(id, scores.size());
    scores.push_back(s);
  }
  std::vector<IndexedPair> indexed;
  indexed.reserve(pairs.size());
  for (const SupervisionPair& p : pairs) {
    const auto ia = position.find(p.a);
    if (ia == position.end()) throw Error(ErrorKind::kDanglingPair, "no score for image " + p.a);
    const auto ib = position.find(p.b);
    if (ib == position.end()) throw Error(ErrorKind::kDanglingPair, "no score for image " + p.b);
    indexed.push_back({ia->second, ib->second, p.t, p.omega});
  }
  return rank_loss(scores, indexed);
}

LossValue distill_loss(std::span<const double> scores, std::span<const double> teacher_scores,
                       std::span<const IndexedPair> pairs, double lambda_dis, double beta) {
  LossValue out = reg_loss(scores, teacher_scores, beta);
  if (lambda_dis == 0.0) return out;
  const LossValue rank = rank_loss(scores, pairs);
  out.value += lambda_dis * rank.value;
  for (std::size_t i = 0; i < scores.size(); ++i) out.score_grads[i] += lambda_dis * rank.score_grads[i];
  return out;
}

LossValue mse_loss(std::span<const double> scores, std::span<const double> labels) {
  require_batch(scores, labels, "MSE loss");
  const auto n = static_cast<double>(scores.size());
  LossValue out;
  out.score_grads.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double d = scores[i] - labels[i];
    out.value += d * d;
    out.score_grads[i] = 2.0 * d / n;
  }
  out.value /= n;
  return out;
}

LossValue plcc_loss(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::kShape, "PLCC loss: scores and labels differ in length");
  }
  if (scores.size() < 2) throw Error(ErrorKind::kDegenerateBatch, "PLCC loss needs two samples");
  const auto n = static_cast<double>(scores.size());
  const double ms = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  const double my = std::accumulate(labels.begin(), labels.end(), 0.0) / n;
  double sxy = 0.0, sss = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double ds = scores[i] - ms;
    const double dy = labels[i] - my;
    sxy += ds * dy;
    sss += ds * ds;
    syy += dy * dy;
  }
  if (std::sqrt(syy / n) < kPlccEpsilon) {
    throw Error(ErrorKind::kDegenerateBatch, "PLCC loss on constant labels");
  }
  LossValue out;
  out.score_grads.assign(scores.size(), 0.0);
  if (std::sqrt(sss / n) < kPlccEpsilon) {
    log_warning("PLCC loss on near-constant scores; returning 1 with zero gradient");
    out.value = 1.0;
    return out;
  }
  const double denom = std::sqrt(sss * syy);
  const double rho = sxy / denom;
  out.value = 1.0 - rho;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double ds = scores[i] - ms;
    const double dy = labels[i] - my;
    out.score_grads[i] = -(dy / denom - rho * ds / sss);
  }
  return out;
}

LossValue calib_loss(std::span<const double> scores, std::span<const double> labels,
                     double lambda_cal) {
  LossValue out = mse_loss(scores, labels);
  if (lambda_cal == 0.0) return out;
  const LossValue corr = plcc_loss(scores, labels);
  out.value += lambda_cal * corr.value;
  for (std::size_t i = 0; i < scores.size(); ++i) out.score_grads[i] += lambda_cal * corr.score_grads[i];
  return out;
}

}  // namespace qdistill
