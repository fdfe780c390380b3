/**
 * config.hpp: the flat key/value run configuration.
 *
 * One JSON object whose keys mirror TrainConfig and SynthConfig fields plus a
 * few command-level settings. Command-line flags use the same keys with
 * dashes (`--mos-ratio 0.1` sets `mos_ratio`). A snapshot written by one run
 * and read back by another reproduces that run exactly.
 */
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qdistill/pipeline.hpp"
#include "qdistill/synth.hpp"

namespace qdistill {

struct RunConfig {
  TrainConfig train;
  SynthConfig synth;
  std::string data = "data";
  std::string out = "out";
  std::string checkpoint;  // empty: the stage default inside `out`
  std::string split = "test";
  std::vector<double> ratios = {0.0, 0.1, 0.3};
  int seeds = 5;  // seeds 0 .. seeds-1
  std::vector<std::string> modes = {"point", "pair", "pair_conf", "all", "cft_only"};
  int threads = 0;  // 0: hardware concurrency
};

enum class KeyScope : std::uint8_t { kTrain, kSynth, kCommand };

struct ConfigKey {
  std::string name;
  KeyScope scope;
  std::string help;
};

const std::vector<ConfigKey>& config_keys();

/// Sets every key present in `object`. Unknown keys and ill-typed values are
/// configuration errors.
void apply_config(RunConfig& config, const nlohmann::json& object);
RunConfig load_config(const std::filesystem::path& path);

/// Sets one key from command-line text. Bad values are usage errors.
void apply_flag(RunConfig& config, const std::string& key, const std::string& text);

/// Every key, in registry order.
nlohmann::ordered_json config_json(const RunConfig& config);
std::string config_snapshot(const RunConfig& config);

/// The synthetic-benchmark keys (and its seed) only.
nlohmann::ordered_json synth_config_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const nlohmann::json& object);

std::string_view to_string(CheckpointMode mode);
std::string_view to_string(TeacherBias bias);
std::string_view to_string(FeatureMap map);
std::string_view to_string(PairNoise noise);

}  // namespace qdistill
