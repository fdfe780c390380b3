/**
 * signals.hpp: teacher judgments turned into training signals.
 *
 * Point-wise: five quality-token log-likelihoods -> softmax -> expected
 * ordinal score in [1, 5]. Pair-wise: the two decision-token log-likelihoods
 * -> preference probability, hard label and an entropy-based confidence.
 */
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qdistill {

inline constexpr std::size_t kNumQualityLevels = 5;

/// Canonical order: Excellent, Good, Fair, Poor, Bad.
enum class QualityLevel : std::uint8_t { kExcellent, kGood, kFair, kPoor, kBad };

inline constexpr std::array<std::string_view, kNumQualityLevels> kQualityWords = {
    "Excellent", "Good", "Fair", "Poor", "Bad"};
inline constexpr std::array<double, kNumQualityLevels> kQualityValues = {5.0, 4.0, 3.0, 2.0, 1.0};

constexpr double quality_value(QualityLevel level) {
  return kQualityValues[static_cast<std::size_t>(level)];
}

using QualityVector = std::array<double, kNumQualityLevels>;

struct TeacherPointSignal {
  std::string image_id;
  QualityVector logits{};
  QualityVector probs{};
  double soft_score = 0.0;
};

/// One teacher comparison. `a` was shown as option A.
struct SupervisionPair {
  std::string a;
  std::string b;
  double logit_a = 0.0;
  double logit_b = 0.0;
  double p_a = 0.5;
  int t = 1;
  double omega = 0.0;

  double p_b() const { return 1.0 - p_a; }
};

struct PairProbs {
  double p_a;
  double p_b;
};

/// Max-subtracted softmax over the five quality logits.
QualityVector point_probs(const QualityVector& logits, std::string_view image_id = {});

/// Expected ordinal value sum_k v_k p_k.
double point_score(const QualityVector& probs);

TeacherPointSignal make_point_signal(std::string image_id, const QualityVector& logits);

/// Two-way softmax at the decision position; p_a = sigmoid(l_a - l_b).
PairProbs pair_probs(double logit_a, double logit_b);

/// 1 when p_a >= 0.5 (ties go to A).
int pair_label(double p_a);

/// 1 - H(p)/log 2 with H in nats and 0 log 0 = 0.
double pair_confidence(double p_a);

SupervisionPair make_supervision_pair(std::string a, std::string b, double logit_a,
                                      double logit_b);

/// `count` i.i.d. ordered index pairs over [0, n) with self-pairs redrawn.
/// With `dedup`, repeated ordered pairs are redrawn as well.
std::vector<std::pair<std::size_t, std::size_t>> sample_pair_indices(std::size_t n,
                                                                     std::size_t count,
                                                                     std::uint64_t seed,
                                                                     bool dedup = false);

std::vector<std::pair<std::string, std::string>> sample_pairs(std::span<const std::string> ids,
                                                              std::size_t count,
                                                              std::uint64_t seed,
                                                              bool dedup = false);

/// Pairs with omega >= tau, order preserved.
std::vector<SupervisionPair> filter_pairs(std::span<const SupervisionPair> pairs, double tau);

}  // namespace qdistill
