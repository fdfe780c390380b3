#include "qdistill/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "qdistill/error.hpp"
#include "qdistill/rng.hpp"

namespace qdistill {
namespace {

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string describe(std::string_view image_id) {
  return image_id.empty() ? std::string("<unnamed>") : std::string(image_id);
}

}  // namespace

QualityVector point_probs(const QualityVector& logits, std::string_view image_id) {
  for (double l : logits) {
    if (!std::isfinite(l)) {
      throw Error(ErrorKind::kInvalidSignal,
                  "non-finite quality logit for image " + describe(image_id));
    }
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  QualityVector probs{};
  double total = 0.0;
  for (std::size_t k = 0; k < kNumQualityLevels; ++k) {
    probs[k] = std::exp(logits[k] - top);
    total += probs[k];
  }
  for (double& p : probs) p /= total;
  return probs;
}

double point_score(const QualityVector& probs) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || p > 1.0 + 1e-12) {
      throw Error(ErrorKind::kInvalidSignal, "probability outside [0, 1]");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw Error(ErrorKind::kInvalidSignal, "probabilities do not sum to 1");
  }
  double score = 0.0;
  for (std::size_t k = 0; k < kNumQualityLevels; ++k) score += kQualityValues[k] * probs[k];
  return std::clamp(score, 1.0, 5.0);
}

TeacherPointSignal make_point_signal(std::string image_id, const QualityVector& logits) {
  TeacherPointSignal signal;
  signal.probs = point_probs(logits, image_id);
  signal.soft_score = point_score(signal.probs);
  signal.logits = logits;
  signal.image_id = std::move(image_id);
  return signal;
}

PairProbs pair_probs(double logit_a, double logit_b) {
  if (!std::isfinite(logit_a) || !std::isfinite(logit_b)) {
    throw Error(ErrorKind::kInvalidSignal, "non-finite decision logit");
  }
  const double z = logit_a - logit_b;
  return {stable_sigmoid(z), stable_sigmoid(-z)};
}

int pair_label(double p_a) {
  if (!(p_a >= 0.0 && p_a <= 1.0)) {
    throw Error(ErrorKind::kInvalidSignal, "preference probability outside [0, 1]");
  }
  return p_a >= 0.5 ? 1 : 0;
}

double pair_confidence(double p_a) {
  if (!(p_a >= 0.0 && p_a <= 1.0)) {
    throw Error(ErrorKind::kInvalidSignal, "preference probability outside [0, 1]");
  }
  // With x = p_a - p_b: log 2 - H = ((1+x) log(1+x) + (1-x) log(1-x)) / 2.
  const double x = std::abs(2.0 * p_a - 1.0);
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double excess;
  if (x < 1e-3) {
    // Series sum_k x^{2k} / (2k (2k-1)); keeps omega > 0 for any p_a != 0.5.
    const double x2 = x * x;
    excess = x2 / 2.0 + x2 * x2 / 12.0 + x2 * x2 * x2 / 30.0;
  } else {
    excess = ((1.0 + x) * std::log1p(x) + (1.0 - x) * std::log1p(-x)) / 2.0;
  }
  return std::clamp(excess / std::numbers::ln2, 0.0, 1.0);
}

SupervisionPair make_supervision_pair(std::string a, std::string b, double logit_a,
                                      double logit_b) {
  if (a == b) throw Error(ErrorKind::kInvalidSignal, "self-pair on image " + a);
  SupervisionPair pair;
  pair.p_a = pair_probs(logit_a, logit_b).p_a;
  pair.t = pair_label(pair.p_a);
  pair.omega = pair_confidence(pair.p_a);
  pair.a = std::move(a);
  pair.b = std::move(b);
  pair.logit_a = logit_a;
  pair.logit_b = logit_b;
  return pair;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_pair_indices(std::size_t n,
                                                                     std::size_t count,
                                                                     std::uint64_t seed,
                                                                     bool dedup) {
  if (n < 2) {
    throw Error(ErrorKind::kInsufficientData, "pair sampling needs at least two images");
  }
  if (dedup && count > n * (n - 1)) {
    throw Error(ErrorKind::kInsufficientData, "more distinct pairs requested than exist");
  }
  Rng rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(count);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  while (out.size() < count) {
    const auto a = static_cast<std::size_t>(rng.index(n));
    const auto b = static_cast<std::size_t>(rng.index(n));
    if (a == b) continue;
    if (dedup && !seen.emplace(a, b).second) continue;
    out.emplace_back(a, b);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> sample_pairs(std::span<const std::string> ids,
                                                              std::size_t count,
                                                              std::uint64_t seed, bool dedup) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [a, b] : sample_pair_indices(ids.size(), count, seed, dedup)) {
    out.emplace_back(ids[a], ids[b]);
  }
  return out;
}

std::vector<SupervisionPair> filter_pairs(std::span<const SupervisionPair> pairs, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw Error(ErrorKind::kConfiguration, "tau must lie in [0, 1]");
  }
  std::vector<SupervisionPair> kept;
  std::copy_if(pairs.begin(), pairs.end(), std::back_inserter(kept),
               [tau](const SupervisionPair& p) { return p.omega >= tau; });
  return kept;
}

}  // namespace qdistill
