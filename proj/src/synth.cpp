#include "qdistill/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qdistill/error.hpp"
#include "qdistill/rng.hpp"

namespace qdistill {
namespace {

// Monotone maps from [1, 5] onto [1, 5] for the informative feature columns.
double feature_channel(double q, int column, FeatureMap map) {
  if (map == FeatureMap::kIdentity) return q;
  const double z = (q - 3.0) / 2.0;
  switch (column % 4) {
    case 0: return q;
    case 1: return 3.0 + 2.0 * std::tanh(1.5 * z) / std::tanh(1.5);
    case 2: return 3.0 + 2.0 * z * z * z;
    default: {
      const double lo = std::exp(-1.0);
      const double hi = std::exp(1.0);
      return 3.0 + 2.0 * (2.0 * (std::exp(z) - lo) / (hi - lo) - 1.0);
    }
  }
}

std::string image_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img%05zu", i);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kConfiguration, what); };
  if (n < 10) fail("synthetic benchmark needs n >= 10");
  if (informative_dims < 1 || informative_dims > d) fail("informative_dims must lie in [1, d]");
  if (feature_noise < 0 || teacher_noise < 0 || mos_noise < 0) fail("noise levels must be >= 0");
  if (!(pair_sharpness > 0) || !(point_sharpness > 0)) fail("sharpness must be positive");
  if (teacher_bias == TeacherBias::kCompressive && !(gamma > 0)) fail("gamma must be positive");
  if (teacher_bias == TeacherBias::kAffine && !(affine_alpha > 0)) fail("affine slope must be positive");
  if (!(hetero_gap_floor > 0)) fail("hetero_gap_floor must be positive");
  if (!(train_frac > 0) || !(val_frac >= 0) || train_frac + val_frac >= 1.0) {
    fail("train/val fractions must leave a non-empty test split");
  }
  if (pair_count < -1) fail("pair_count must be >= 0 (or -1 for n)");
}

std::size_t SynthConfig::resolved_pair_count() const {
  return pair_count < 0 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(pair_count);
}

double SynthConfig::resolved_pair_noise() const {
  return pair_noise_scale < 0.0 ? teacher_noise : pair_noise_scale;
}

std::vector<double> gen_latent(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> q(n);
  for (double& v : q) v = rng.uniform(1.0, 5.0);
  return q;
}

double teacher_bias_map(double q, const SynthConfig& config) {
  switch (config.teacher_bias) {
    case TeacherBias::kIdentity: return q;
    case TeacherBias::kCompressive:
      return 1.0 + 4.0 * std::pow(std::clamp((q - 1.0) / 4.0, 0.0, 1.0), config.gamma);
    case TeacherBias::kAffine: return config.affine_alpha * q + config.affine_beta;
  }
  return q;
}

Eigen::MatrixXd gen_features(std::span<const double> q, const SynthConfig& config) {
  const auto n = static_cast<Eigen::Index>(q.size());
  Eigen::MatrixXd x(n, config.d);
  Rng rng(derive_seed(config.seed, "features"));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < config.d; ++j) {
      if (j < config.informative_dims) {
        x(i, j) = feature_channel(q[i], j, config.feature_map) + config.feature_noise * rng.normal();
      } else {
        x(i, j) = rng.normal(3.0, 1.15);
      }
    }
  }
  return x;
}

QualityVector teacher_point_oracle(double q, const SynthConfig& config, Rng& rng) {
  double m = teacher_bias_map(q, config);
  if (config.teacher_noise > 0.0) m += config.teacher_noise * rng.normal();
  m = std::clamp(m, 1.0, 5.0);
  QualityVector logits{};
  for (std::size_t k = 0; k < kNumQualityLevels; ++k) {
    const double gap = kQualityValues[k] - m;
    logits[k] = -config.point_sharpness * gap * gap;
  }
  return logits;
}

std::pair<double, double> teacher_pair_oracle(double q_a, double q_b, const SynthConfig& config,
                                              Rng& rng) {
  const double diff = teacher_bias_map(q_a, config) - teacher_bias_map(q_b, config);
  double sigma = config.resolved_pair_noise();
  if (config.pair_noise == PairNoise::kHeteroscedastic) {
    sigma /= std::max(std::abs(q_a - q_b), config.hetero_gap_floor);
  }
  const double half = config.pair_sharpness / 2.0;
  double l_a = half * diff;
  double l_b = -half * diff;
  if (sigma > 0.0) {
    l_a += half * sigma * rng.normal();
    l_b += half * sigma * rng.normal();
  }
  return {l_a, l_b};
}

std::vector<double> gen_mos(std::span<const double> q, double sigma_y, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> y(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    y[i] = std::clamp(q[i] + (sigma_y > 0.0 ? sigma_y * rng.normal() : 0.0), 1.0, 5.0);
  }
  return y;
}

std::vector<SupervisionPair> resample_teacher_pairs(const FeatureDataset& dataset,
                                                    const SynthConfig& config, std::size_t count,
                                                    std::uint64_t seed) {
  if (!dataset.has_latent()) {
    throw Error(ErrorKind::kConfiguration, "teacher pair oracle needs latent qualities");
  }
  const auto train = dataset.rows_in(Split::kTrain);
  const auto picks = sample_pair_indices(train.size(), count, derive_seed(seed, "pair_sample"), config.dedup_pairs);
  Rng noise(derive_seed(seed, "teacher_pair"));
  std::vector<SupervisionPair> pairs;
  pairs.reserve(picks.size());
  const auto& q = dataset.latent();
  for (const auto& [ia, ib] : picks) {
    const std::size_t a = train[ia];
    const std::size_t b = train[ib];
    const auto [l_a, l_b] = teacher_pair_oracle(q[a], q[b], config, noise);
    pairs.push_back(make_supervision_pair(dataset.ids()[a], dataset.ids()[b], l_a, l_b));
  }
  return pairs;
}

SynthBenchmark make_benchmark(const SynthConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.n);
  const std::vector<double> q = gen_latent(n, derive_seed(config.seed, "latent"));

  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = image_id(i);

  const auto n_train = static_cast<std::size_t>(std::floor(config.train_frac * double(n) + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(config.val_frac * double(n) + 1e-9));
  std::vector<Split> splits(n, Split::kTest);
  const auto order = permutation(n, derive_seed(config.seed, "splits"));
  for (std::size_t k = 0; k < n_train + n_val; ++k) {
    splits[order[k]] = k < n_train ? Split::kTrain : Split::kVal;
  }

  SynthBenchmark bench;
  bench.config = config;
  FeatureDataset dataset(ids, gen_features(q, config), splits);
  const auto y = gen_mos(q, config.mos_noise, derive_seed(config.seed, "mos"));
  dataset.set_mos(std::vector<std::optional<double>>(y.begin(), y.end()));
  dataset.set_latent(q);

  Rng point_noise(derive_seed(config.seed, "teacher_point"));
  for (std::size_t i = 0; i < n; ++i) {
    bench.bundle.points.push_back(
        make_point_signal(ids[i], teacher_point_oracle(q[i], config, point_noise)));
  }
  bench.bundle.pairs =
      resample_teacher_pairs(dataset, config, config.resolved_pair_count(), config.seed);
  bench.bundle.dataset = std::move(dataset);
  return bench;
}

}  // namespace qdistill
