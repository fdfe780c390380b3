/**
 * synth.hpp: synthetic quality benchmark and simulated teacher.
 *
 * Every image has a latent quality q ~ U[1, 5]. Features carry q through a
 * few noisy monotone channels; the rest are distractors. The simulated
 * teacher sees q through a strictly increasing bias map g, so its ranking is
 * sound while its scale is not. Opinion scores are q plus rater noise.
 */
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "qdistill/dataset.hpp"
#include "qdistill/rng.hpp"
#include "qdistill/signals.hpp"

namespace qdistill {

enum class TeacherBias : std::uint8_t { kIdentity, kCompressive, kAffine };
enum class FeatureMap : std::uint8_t { kMixed, kIdentity };
enum class PairNoise : std::uint8_t { kHomoscedastic, kHeteroscedastic };

struct SynthConfig {
  int n = 2000;
  int d = 16;
  int informative_dims = 4;
  FeatureMap feature_map = FeatureMap::kMixed;
  double feature_noise = 0.1;
  TeacherBias teacher_bias = TeacherBias::kCompressive;
  double gamma = 0.5;          // compressive exponent
  double affine_alpha = 0.8;   // affine slope
  double affine_beta = 0.9;    // affine offset
  double teacher_noise = 0.3;  // sigma_t, in teacher-score units
  double point_sharpness = 2.0;
  double pair_sharpness = 3.0;
  PairNoise pair_noise = PairNoise::kHomoscedastic;
  double pair_noise_scale = -1.0;  // pair logit noise; < 0 uses teacher_noise
  double hetero_gap_floor = 0.5;
  double mos_noise = 0.2;
  int pair_count = -1;  // -1: same as n
  bool dedup_pairs = false;  // redraw repeated ordered pairs
  double train_frac = 0.7;
  double val_frac = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t resolved_pair_count() const;
  double resolved_pair_noise() const;
};

/// q_i ~ U[1, 5], i.i.d.
std::vector<double> gen_latent(std::size_t n, std::uint64_t seed);

/// Strictly increasing teacher bias g on [1, 5].
double teacher_bias_map(double q, const SynthConfig& config);

/// N x d features. Informative columns are fixed monotone maps of q plus
/// N(0, feature_noise); the remaining columns are N(3, 1.15) distractors.
Eigen::MatrixXd gen_features(std::span<const double> q, const SynthConfig& config);

/// logits_k = -point_sharpness (v_k - m)^2 with m = clamp(g(q) + N(0, sigma_t), 1, 5).
QualityVector teacher_point_oracle(double q, const SynthConfig& config, Rng& rng);

/// l_a = kappa/2 (g(q_a) - g(q_b) + e_a), l_b = kappa/2 (g(q_b) - g(q_a) + e_b).
/// e ~ N(0, sigma_p) with sigma_p = pair_noise_scale (teacher_noise when
/// negative); in heteroscedastic mode sigma_p is scaled by
/// 1 / max(|q_a - q_b|, hetero_gap_floor).
std::pair<double, double> teacher_pair_oracle(double q_a, double q_b, const SynthConfig& config,
                                              Rng& rng);

/// y_i = clamp(q_i + N(0, sigma_y), 1, 5).
std::vector<double> gen_mos(std::span<const double> q, double sigma_y, std::uint64_t seed);

struct SynthBenchmark {
  SynthConfig config;
  DatasetBundle bundle;  // dataset carries latent and MOS columns
};

SynthBenchmark make_benchmark(const SynthConfig& config);

/// Fresh teacher pairs over the training split of `dataset`, drawn with `seed`.
std::vector<SupervisionPair> resample_teacher_pairs(const FeatureDataset& dataset,
                                                    const SynthConfig& config, std::size_t count,
                                                    std::uint64_t seed);

}  // namespace qdistill
