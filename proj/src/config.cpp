#include "qdistill/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "qdistill/error.hpp"

namespace qdistill {
namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void bad_value(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::kConfiguration, "key '" + key + "': " + why);
}

template <class E, std::size_t N>
E parse_enum(const std::string& key, const std::string& text,
             const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (name == text) return value;
  }
  std::string options;
  for (const auto& entry : table) options += (options.empty() ? "" : ", ") + std::string(entry.second);
  bad_value(key, "'" + text + "' is not one of " + options);
}

constexpr std::array<std::pair<CheckpointMode, std::string_view>, 2> kModes = {{
    {CheckpointMode::kMosFree, "mos_free"}, {CheckpointMode::kFewShot, "few_shot"}}};
constexpr std::array<std::pair<TeacherBias, std::string_view>, 3> kBiases = {{
    {TeacherBias::kIdentity, "identity"}, {TeacherBias::kCompressive, "compressive"},
    {TeacherBias::kAffine, "affine"}}};
constexpr std::array<std::pair<FeatureMap, std::string_view>, 2> kMaps = {{
    {FeatureMap::kMixed, "mixed"}, {FeatureMap::kIdentity, "identity"}}};
constexpr std::array<std::pair<PairNoise, std::string_view>, 2> kNoises = {{
    {PairNoise::kHomoscedastic, "homoscedastic"}, {PairNoise::kHeteroscedastic, "heteroscedastic"}}};

template <class E, std::size_t N>
std::string_view enum_name(E value, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

// Typed readers for JSON values.
double as_double(const std::string& key, const json& v) {
  if (!v.is_number()) bad_value(key, "expected a number");
  return v.get<double>();
}

long long as_integer(const std::string& key, const json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
  }
  bad_value(key, "expected an integer");
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) bad_value(key, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) bad_value(key, "expected a string");
  return v.get<std::string>();
}

const json& as_array(const std::string& key, const json& v) {
  if (!v.is_array()) bad_value(key, "expected an array");
  return v;
}

// Command-line text to the JSON value the key expects.
enum class ValueType : std::uint8_t { kReal, kInt, kBool, kString, kRealList, kIntList, kStringList };

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw Error(ErrorKind::kUsage, "--" + key + ": cannot parse '" + text + "'");
  }
  return value;
}

json text_to_json(const std::string& key, ValueType type, const std::string& text) {
  switch (type) {
    case ValueType::kReal:
      return parse_number<double>(key, text);
    case ValueType::kInt:
      return parse_number<long long>(key, text);
    case ValueType::kBool:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw Error(ErrorKind::kUsage, "--" + key + ": expected true/false, got '" + text + "'");
    case ValueType::kString:
      return text;
    case ValueType::kRealList: {
      json out = json::array();
      for (const auto& p : split_commas(text)) out.push_back(parse_number<double>(key, p));
      return out;
    }
    case ValueType::kIntList: {
      json out = json::array();
      for (const auto& p : split_commas(text)) out.push_back(parse_number<long long>(key, p));
      return out;
    }
    case ValueType::kStringList: {
      json out = json::array();
      for (const auto& p : split_commas(text)) out.push_back(p);
      return out;
    }
  }
  return {};
}

struct Entry {
  ConfigKey key;
  ValueType type;
  std::function<ojson(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

template <class Access>
Entry real(std::string name, KeyScope scope, std::string help, Access access) {
  return {{name, scope, std::move(help)}, ValueType::kReal,
          [access](const RunConfig& c) { return ojson(access(const_cast<RunConfig&>(c))); },
          [access, name](RunConfig& c, const json& v) { access(c) = as_double(name, v); }};
}

template <class Access>
Entry integer(std::string name, KeyScope scope, std::string help, Access access) {
  return {{name, scope, std::move(help)}, ValueType::kInt,
          [access](const RunConfig& c) { return ojson(access(const_cast<RunConfig&>(c))); },
          [access, name](RunConfig& c, const json& v) {
            access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(as_integer(name, v));
          }};
}

template <class Access>
Entry boolean(std::string name, KeyScope scope, std::string help, Access access) {
  return {{name, scope, std::move(help)}, ValueType::kBool,
          [access](const RunConfig& c) { return ojson(access(const_cast<RunConfig&>(c))); },
          [access, name](RunConfig& c, const json& v) { access(c) = as_bool(name, v); }};
}

template <class Access>
Entry text(std::string name, KeyScope scope, std::string help, Access access) {
  return {{name, scope, std::move(help)}, ValueType::kString,
          [access](const RunConfig& c) { return ojson(access(const_cast<RunConfig&>(c))); },
          [access, name](RunConfig& c, const json& v) { access(c) = as_string(name, v); }};
}

template <class E, std::size_t N, class Access>
Entry choice(std::string name, KeyScope scope, std::string help,
             const std::array<std::pair<E, std::string_view>, N>& table, Access access) {
  return {{name, scope, std::move(help)}, ValueType::kString,
          [access, &table](const RunConfig& c) {
            return ojson(std::string(enum_name(access(const_cast<RunConfig&>(c)), table)));
          },
          [access, name, &table](RunConfig& c, const json& v) {
            access(c) = parse_enum(name, as_string(name, v), table);
          }};
}

std::vector<Entry> build_registry() {
  using K = KeyScope;
  std::vector<Entry> e;
  // Training.
  e.push_back(integer("stage1_epochs", K::kTrain, "Stage 1 epochs", [](RunConfig& c) -> int& { return c.train.stage1.epochs; }));
  e.push_back(integer("stage1_batch", K::kTrain, "Stage 1 image batch size", [](RunConfig& c) -> int& { return c.train.stage1.batch_size; }));
  e.push_back(real("stage1_lr", K::kTrain, "Stage 1 learning rate", [](RunConfig& c) -> double& { return c.train.stage1.optim.lr; }));
  e.push_back(integer("stage2_epochs", K::kTrain, "Stage 2 epochs", [](RunConfig& c) -> int& { return c.train.stage2.epochs; }));
  e.push_back(integer("stage2_batch", K::kTrain, "Stage 2 batch size", [](RunConfig& c) -> int& { return c.train.stage2.batch_size; }));
  e.push_back(real("stage2_lr", K::kTrain, "Stage 2 learning rate", [](RunConfig& c) -> double& { return c.train.stage2.optim.lr; }));
  auto both_stages = [](std::string name, std::string help, double AdamWConfig::*field) {
    Entry entry = real(name, K::kTrain, std::move(help),
                       [field](RunConfig& c) -> double& { return c.train.stage1.optim.*field; });
    entry.set = [name, field](RunConfig& c, const json& v) {
      const double x = as_double(name, v);
      c.train.stage1.optim.*field = x;
      c.train.stage2.optim.*field = x;
    };
    return entry;
  };
  e.push_back(both_stages("beta1", "AdamW beta1 (both stages)", &AdamWConfig::beta1));
  e.push_back(both_stages("beta2", "AdamW beta2 (both stages)", &AdamWConfig::beta2));
  e.push_back(both_stages("eps", "AdamW epsilon (both stages)", &AdamWConfig::eps));
  e.push_back(both_stages("weight_decay", "AdamW decoupled weight decay (both stages)", &AdamWConfig::weight_decay));
  e.push_back({{"hidden", K::kTrain, "hidden layer widths, e.g. 64,32"}, ValueType::kIntList,
               [](const RunConfig& c) { return ojson(c.train.hidden); },
               [](RunConfig& c, const json& v) {
                 std::vector<int> widths;
                 for (const auto& w : as_array("hidden", v)) widths.push_back(static_cast<int>(as_integer("hidden", w)));
                 c.train.hidden = widths;
               }});
  e.push_back(real("lambda_dis", K::kTrain, "weight of the pair term in Stage 1", [](RunConfig& c) -> double& { return c.train.lambda_dis; }));
  e.push_back(real("lambda_cal", K::kTrain, "weight of the PLCC term in Stage 2", [](RunConfig& c) -> double& { return c.train.lambda_cal; }));
  e.push_back(real("tau", K::kTrain, "pair confidence threshold", [](RunConfig& c) -> double& { return c.train.tau; }));
  e.push_back(real("smooth_l1_beta", K::kTrain, "SmoothL1 transition point", [](RunConfig& c) -> double& { return c.train.smooth_l1_beta; }));
  e.push_back(real("mos_ratio", K::kTrain, "fraction of training ids with visible MOS", [](RunConfig& c) -> double& { return c.train.mos_ratio; }));
  e.push_back(real("calib_holdout_frac", K::kTrain, "fraction of labeled ids held out for Stage 2 selection", [](RunConfig& c) -> double& { return c.train.calib_holdout_frac; }));
  e.push_back(real("stage1_val_frac", K::kTrain, "fraction of training ids held out for Stage 1 selection", [](RunConfig& c) -> double& { return c.train.stage1_val_frac; }));
  e.push_back({{"seed", K::kTrain, "run seed (also the benchmark seed for synth)"}, ValueType::kInt,
               [](const RunConfig& c) { return ojson(c.train.seed); },
               [](RunConfig& c, const json& v) {
                 const long long s = as_integer("seed", v);
                 if (s < 0) bad_value("seed", "must be >= 0");
                 c.train.seed = static_cast<std::uint64_t>(s);
                 c.synth.seed = c.train.seed;
               }});
  e.push_back(choice("checkpoint_mode", K::kTrain, "mos_free or few_shot", kModes, [](RunConfig& c) -> CheckpointMode& { return c.train.checkpoint_mode; }));
  e.push_back(boolean("use_point", K::kTrain, "Stage 1 point term", [](RunConfig& c) -> bool& { return c.train.supervision.point; }));
  e.push_back(boolean("use_pair", K::kTrain, "Stage 1 pair term", [](RunConfig& c) -> bool& { return c.train.supervision.pair; }));
  e.push_back(boolean("use_confidence", K::kTrain, "confidence weights and tau filtering", [](RunConfig& c) -> bool& { return c.train.supervision.confidence; }));
  e.push_back(boolean("skip_stage1", K::kTrain, "calibrate a fresh student", [](RunConfig& c) -> bool& { return c.train.skip_stage1; }));
  e.push_back(boolean("freeze_to_head", K::kTrain, "Stage 2 updates only the last layer", [](RunConfig& c) -> bool& { return c.train.freeze_to_head; }));
  e.push_back(boolean("reuse_optimizer", K::kTrain, "Stage 2 keeps the Stage 1 optimizer moments", [](RunConfig& c) -> bool& { return c.train.reuse_optimizer; }));
  // Synthetic benchmark.
  e.push_back(integer("n", K::kSynth, "image count", [](RunConfig& c) -> int& { return c.synth.n; }));
  e.push_back(integer("d", K::kSynth, "feature dimension", [](RunConfig& c) -> int& { return c.synth.d; }));
  e.push_back(integer("informative_dims", K::kSynth, "feature columns that depend on quality", [](RunConfig& c) -> int& { return c.synth.informative_dims; }));
  e.push_back(choice("feature_map", K::kSynth, "mixed or identity", kMaps, [](RunConfig& c) -> FeatureMap& { return c.synth.feature_map; }));
  e.push_back(real("feature_noise", K::kSynth, "feature noise sigma_x", [](RunConfig& c) -> double& { return c.synth.feature_noise; }));
  e.push_back(choice("teacher_bias", K::kSynth, "identity, compressive or affine", kBiases, [](RunConfig& c) -> TeacherBias& { return c.synth.teacher_bias; }));
  e.push_back(real("gamma", K::kSynth, "compressive exponent", [](RunConfig& c) -> double& { return c.synth.gamma; }));
  e.push_back(real("affine_alpha", K::kSynth, "affine bias slope", [](RunConfig& c) -> double& { return c.synth.affine_alpha; }));
  e.push_back(real("affine_beta", K::kSynth, "affine bias offset", [](RunConfig& c) -> double& { return c.synth.affine_beta; }));
  e.push_back(real("teacher_noise", K::kSynth, "teacher noise sigma_t", [](RunConfig& c) -> double& { return c.synth.teacher_noise; }));
  e.push_back(real("point_sharpness", K::kSynth, "point logit sharpness", [](RunConfig& c) -> double& { return c.synth.point_sharpness; }));
  e.push_back(real("pair_sharpness", K::kSynth, "pair logit sharpness kappa", [](RunConfig& c) -> double& { return c.synth.pair_sharpness; }));
  e.push_back(choice("pair_noise", K::kSynth, "homoscedastic or heteroscedastic", kNoises, [](RunConfig& c) -> PairNoise& { return c.synth.pair_noise; }));
  e.push_back(real("pair_noise_scale", K::kSynth, "pair logit noise; negative uses teacher_noise", [](RunConfig& c) -> double& { return c.synth.pair_noise_scale; }));
  e.push_back(real("hetero_gap_floor", K::kSynth, "smallest gap used to scale heteroscedastic noise", [](RunConfig& c) -> double& { return c.synth.hetero_gap_floor; }));
  e.push_back(real("mos_noise", K::kSynth, "opinion-score noise sigma_y", [](RunConfig& c) -> double& { return c.synth.mos_noise; }));
  e.push_back(integer("pair_count", K::kSynth, "sampled pairs; -1 means n", [](RunConfig& c) -> int& { return c.synth.pair_count; }));
  e.push_back(boolean("dedup_pairs", K::kSynth, "redraw repeated ordered pairs", [](RunConfig& c) -> bool& { return c.synth.dedup_pairs; }));
  e.push_back(real("train_frac", K::kSynth, "training split fraction", [](RunConfig& c) -> double& { return c.synth.train_frac; }));
  e.push_back(real("val_frac", K::kSynth, "validation split fraction", [](RunConfig& c) -> double& { return c.synth.val_frac; }));
  // Command level.
  e.push_back(text("data", K::kCommand, "dataset directory", [](RunConfig& c) -> std::string& { return c.data; }));
  e.push_back(text("out", K::kCommand, "output directory", [](RunConfig& c) -> std::string& { return c.out; }));
  e.push_back(text("checkpoint", K::kCommand, "checkpoint file (default: the stage checkpoint in out)", [](RunConfig& c) -> std::string& { return c.checkpoint; }));
  e.push_back(text("split", K::kCommand, "train, val or test", [](RunConfig& c) -> std::string& { return c.split; }));
  e.push_back({{"ratios", K::kCommand, "MOS ratios for sweep, e.g. 0,0.1,0.3"}, ValueType::kRealList,
               [](const RunConfig& c) { return ojson(c.ratios); },
               [](RunConfig& c, const json& v) {
                 std::vector<double> r;
                 for (const auto& x : as_array("ratios", v)) r.push_back(as_double("ratios", x));
                 c.ratios = r;
               }});
  e.push_back(integer("seeds", K::kCommand, "number of seeds, 0..N-1", [](RunConfig& c) -> int& { return c.seeds; }));
  e.push_back({{"modes", K::kCommand, "ablation modes"}, ValueType::kStringList,
               [](const RunConfig& c) { return ojson(c.modes); },
               [](RunConfig& c, const json& v) {
                 std::vector<std::string> m;
                 for (const auto& x : as_array("modes", v)) m.push_back(as_string("modes", x));
                 c.modes = m;
               }});
  e.push_back(integer("threads", K::kCommand, "worker threads for seeded repeats; 0 = all cores", [](RunConfig& c) -> int& { return c.threads; }));
  return e;
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = build_registry();
  return entries;
}

const Entry* find_entry(std::string_view name) {
  for (const Entry& e : registry()) {
    if (e.key.name == name) return &e;
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(CheckpointMode mode) { return enum_name(mode, kModes); }
std::string_view to_string(TeacherBias bias) { return enum_name(bias, kBiases); }
std::string_view to_string(FeatureMap map) { return enum_name(map, kMaps); }
std::string_view to_string(PairNoise noise) { return enum_name(noise, kNoises); }

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const Entry& e : registry()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

void apply_config(RunConfig& config, const json& object) {
  if (!object.is_object()) throw Error(ErrorKind::kConfiguration, "config must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    const Entry* e = find_entry(key);
    if (e == nullptr) throw Error(ErrorKind::kConfiguration, "unknown config key '" + key + "'");
    e->set(config, value);
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingArtifact, "cannot open config " + path.string());
  json object;
  try {
    object = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw Error(ErrorKind::kConfiguration, path.string() + ": " + ex.what());
  }
  RunConfig config;
  apply_config(config, object);
  return config;
}

void apply_flag(RunConfig& config, const std::string& key, const std::string& text) {
  const Entry* e = find_entry(key);
  if (e == nullptr) throw Error(ErrorKind::kUsage, "unknown option --" + key);
  e->set(config, text_to_json(key, e->type, text));
}

nlohmann::ordered_json config_json(const RunConfig& config) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const Entry& e : registry()) out[e.key.name] = e.get(config);
  return out;
}

std::string config_snapshot(const RunConfig& config) {
  return config_json(config).dump(2) + "\n";
}

nlohmann::ordered_json synth_config_json(const SynthConfig& config) {
  RunConfig c;
  c.synth = config;
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const Entry& e : registry()) {
    if (e.key.scope == KeyScope::kSynth) out[e.key.name] = e.get(c);
  }
  out["seed"] = config.seed;
  return out;
}

SynthConfig synth_config_from_json(const json& object) {
  if (!object.is_object()) throw Error(ErrorKind::kConfiguration, "synthetic config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : object.items()) {
    const Entry* e = find_entry(key);
    if (e == nullptr || (e->key.scope != KeyScope::kSynth && key != "seed")) {
      throw Error(ErrorKind::kConfiguration, "unknown synthetic config key '" + key + "'");
    }
    e->set(c, value);
  }
  return c.synth;
}

}  // namespace qdistill
