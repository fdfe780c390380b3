#include "qdistill/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qdistill/config.hpp"
#include "qdistill/error.hpp"
#include "qdistill/io.hpp"
#include "qdistill/pipeline.hpp"
#include "qdistill/synth.hpp"
#include "qdistill/teacher_client.hpp"

namespace qdistill {
namespace fs = std::filesystem;

namespace {

const char* const kExitCodes =
    "Exit status: 0 success, 2 usage, 3 configuration or template, 4 data format or reference,\n"
    "5 missing artifact or labels, 6 numerical failure, 7 teacher harvest, 8 insufficient data or MOS budget.";

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, CLI::Option*> flags;  // config key -> option
  std::map<std::string, std::string> values;
};

void add_flags(Command& cmd, std::initializer_list<KeyScope> scopes, std::initializer_list<std::string> extra = {}) {
  cmd.app->add_option("--config", cmd.config_path, "JSON config file; flags override it");
  for (const ConfigKey& key : config_keys()) {
    const bool wanted = std::find(scopes.begin(), scopes.end(), key.scope) != scopes.end() ||
                        std::find(extra.begin(), extra.end(), key.name) != extra.end();
    if (!wanted) continue;
    cmd.flags[key.name] = cmd.app->add_option("--" + dashed(key.name), cmd.values[key.name], key.help);
  }
}

RunConfig resolve(const Command& cmd) {
  RunConfig config = cmd.config_path.empty() ? RunConfig{} : load_config(cmd.config_path);
  for (const ConfigKey& key : config_keys()) {
    const auto it = cmd.flags.find(key.name);
    if (it != cmd.flags.end() && it->second->count() > 0) apply_flag(config, key.name, cmd.values.at(key.name));
  }
  return config;
}

struct LoadedData {
  DatasetBundle bundle;
  std::optional<SynthConfig> synth;  // present for synthetic benchmarks
};

LoadedData load_data(const RunConfig& config) {
  const DatasetPaths paths = DatasetPaths::in_directory(config.data);
  if (!fs::exists(paths.features)) {
    throw Error(ErrorKind::kMissingArtifact, "no dataset at " + config.data + " (missing " +
                                                 paths.features.string() + ")");
  }
  LoadedData data{load_bundle(paths), std::nullopt};
  if (fs::exists(paths.synth_config)) data.synth = read_synth_config(paths.synth_config);
  return data;
}

// Synthetic data gets fresh teacher pairs per run seed; harvested data keeps
// its fixed pair file.
PairSource pair_source_for(const LoadedData& data) {
  if (!data.synth || !data.bundle.dataset.has_latent()) return {};
  const SynthConfig synth = *data.synth;
  const FeatureDataset* dataset = &data.bundle.dataset;
  return [synth, dataset](std::uint64_t seed) {
    return resample_teacher_pairs(*dataset, synth, synth.resolved_pair_count(), seed);
  };
}

fs::path checkpoint_path(const RunConfig& config, const std::string& stage) {
  return config.checkpoint.empty() ? fs::path(config.out) / (stage + ".ckpt.json") : fs::path(config.checkpoint);
}

std::vector<std::uint64_t> seed_list(const RunConfig& config) {
  if (config.seeds < 1) throw Error(ErrorKind::kConfiguration, "seeds must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < config.seeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  return seeds;
}

// Per-seed rows followed by one mean row per group.
std::string grid_csv(const std::string& group_column, const std::vector<std::string>& groups,
                     const std::vector<RepeatReport>& reports) {
  std::string csv = group_column + ",seed,srcc,plcc\n";
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const SeedResult& run : reports[g].runs) {
      const EvalReport& r = run.reports.at("test");
      csv += groups[g] + "," + std::to_string(run.seed) + "," + format_double(r.srcc) + "," +
             format_double(r.plcc) + "\n";
    }
    const MetricSummary& m = reports[g].aggregate.at("test");
    csv += groups[g] + ",mean," + format_double(m.srcc_mean) + "," + format_double(m.plcc_mean) + "\n";
  }
  return csv;
}

int cmd_synth(const RunConfig& config, std::ostream& out) {
  const SynthBenchmark bench = make_benchmark(config.synth);
  const DatasetPaths paths = DatasetPaths::in_directory(config.data);
  write_bundle(bench.bundle, paths);
  write_synth_config(bench.config, paths.synth_config);
  out << "wrote synthetic benchmark (" << config.synth.n << " images, " << bench.bundle.pairs.size()
      << " pairs) to " << config.data << "\n";
  return 0;
}

int cmd_harvest(const std::string& manifest_path, std::ostream& out) {
  const HarvestManifest manifest = load_manifest(manifest_path);
  std::vector<std::string> ids;
  for (const auto& img : manifest.images) ids.push_back(img.id);
  const HarvestReport report = harvest(manifest, ids, manifest_pairs(manifest));
  out << "points: " << report.points_written << " new, " << report.points_skipped << " kept; pairs: "
      << report.pairs_written << " new, " << report.pairs_skipped << " kept; failures: " << report.failures.size()
      << "\n";
  return 0;
}

int cmd_distill(const RunConfig& config, std::ostream& out) {
  config.train.validate();
  const LoadedData data = load_data(config);
  const Stage1Result s1 = run_stage1(config.train, data.bundle.dataset, data.bundle.points, data.bundle.pairs);
  const fs::path dir = config.out;
  write_text(dir / "config.json", config_snapshot(config));
  write_checkpoint({"stage1", s1.student}, dir / "stage1.ckpt.json");
  write_run_log(s1.log, dir / "stage1_log.jsonl");
  out << "stage1: " << s1.log.epochs.size() << " epochs, selected " << s1.log.selected << ", wrote "
      << (dir / "stage1.ckpt.json").string() << "\n";
  return 0;
}

int cmd_calibrate(const RunConfig& config, std::ostream& out) {
  config.train.validate();
  const LoadedData data = load_data(config);
  const FeatureDataset& ds = data.bundle.dataset;
  Student start = config.train.skip_stage1 ? fresh_student(config.train, ds)
                                           : read_checkpoint(checkpoint_path(config, "stage1")).student;
  if (start.params.input_dim() != static_cast<int>(ds.dim())) {
    throw Error(ErrorKind::kShape, "checkpoint expects " + std::to_string(start.params.input_dim()) +
                                       " features, dataset has " + std::to_string(ds.dim()));
  }
  const MosBudget budget =
      split_mos_budget(ds, config.train.mos_ratio, derive_seed(config.train.seed, "mos_budget"));
  const fs::path dir = config.out;
  write_text(dir / "config.json", config_snapshot(config));
  std::string labeled;
  for (const auto& id : budget.labeled) labeled += id + "\n";
  write_text(dir / "labeled_ids.txt", labeled);
  RunLog log{"stage2", {}, -1, {}};
  if (!budget.labeled.empty()) {
    Stage2Result s2 = run_stage2(config.train, start, ds, budget.labeled);
    start = std::move(s2.student);
    log = std::move(s2.log);
  }
  write_checkpoint({"stage2", start}, dir / "stage2.ckpt.json");
  write_run_log(log, dir / "stage2_log.jsonl");
  out << "stage2: " << budget.labeled.size() << " labeled images, selected epoch " << log.selected << ", wrote "
      << (dir / "stage2.ckpt.json").string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& config, std::ostream& out) {
  const fs::path path = checkpoint_path(config, "stage2");
  if (!fs::exists(path)) throw Error(ErrorKind::kMissingArtifact, "no checkpoint at " + path.string());
  const Checkpoint ckpt = read_checkpoint(path);
  const LoadedData data = load_data(config);
  if (ckpt.student.params.input_dim() != static_cast<int>(data.bundle.dataset.dim())) {
    throw Error(ErrorKind::kShape, "checkpoint does not match the dataset's feature width");
  }
  out << eval_report_json(evaluate_split(ckpt.student, data.bundle.dataset, parse_split(config.split)));
  return 0;
}

int cmd_sweep(const RunConfig& config, std::ostream& out) {
  config.train.validate();
  if (config.ratios.empty()) throw Error(ErrorKind::kConfiguration, "ratios must not be empty");
  const LoadedData data = load_data(config);
  const auto seeds = seed_list(config);
  const fs::path dir = config.out;
  write_text(dir / "config.json", config_snapshot(config));
  std::vector<std::string> groups;
  std::vector<RepeatReport> reports;
  for (double ratio : config.ratios) {
    TrainConfig train = config.train;
    train.mos_ratio = ratio;
    groups.push_back(format_double(ratio));
    reports.push_back(run_seeded_repeats(train, data.bundle, seeds, pair_source_for(data),
                                         static_cast<unsigned>(config.threads)));
  }
  const std::string csv = grid_csv("ratio", groups, reports);
  write_text(dir / "sweep.csv", csv);
  out << csv;
  return 0;
}

int cmd_ablate(const RunConfig& config, std::ostream& out) {
  config.train.validate();
  if (config.modes.empty()) throw Error(ErrorKind::kConfiguration, "modes must not be empty");
  const LoadedData data = load_data(config);
  const auto seeds = seed_list(config);
  for (const auto& mode : config.modes) apply_ablation_mode(config.train, mode);
  const fs::path dir = config.out;
  write_text(dir / "config.json", config_snapshot(config));
  std::vector<RepeatReport> reports;
  for (const auto& mode : config.modes) {
    reports.push_back(run_seeded_repeats(apply_ablation_mode(config.train, mode), data.bundle, seeds,
                                         pair_source_for(data), static_cast<unsigned>(config.threads)));
  }
  const std::string csv = grid_csv("mode", config.modes, reports);
  write_text(dir / "ablate.csv", csv);
  out << csv;
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"qdistill: teacher-guided distillation and few-label calibration for quality prediction"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  using K = KeyScope;
  Command synth, distill, calibrate, eval, sweep, ablate;
  synth.app = app.add_subcommand("synth", "write a synthetic benchmark to --data");
  add_flags(synth, {K::kSynth}, {"seed", "data"});
  distill.app = app.add_subcommand("distill", "Stage 1: distill teacher signals into a student");
  add_flags(distill, {K::kTrain, K::kCommand});
  calibrate.app = app.add_subcommand("calibrate", "Stage 2: calibrate the Stage 1 student on the MOS budget");
  add_flags(calibrate, {K::kTrain, K::kCommand});
  eval.app = app.add_subcommand("eval", "print an evaluation report for one split");
  add_flags(eval, {K::kCommand});
  sweep.app = app.add_subcommand("sweep", "label-efficiency curve over MOS ratios and seeds");
  add_flags(sweep, {K::kTrain, K::kCommand});
  ablate.app = app.add_subcommand("ablate", "supervision ablation grid over seeds");
  add_flags(ablate, {K::kTrain, K::kCommand});

  std::string manifest;
  CLI::App* harvest_app = app.add_subcommand("harvest", "collect teacher signals from an endpoint");
  harvest_app->add_option("--manifest", manifest, "harvest manifest (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_code(ErrorKind::kUsage);
  }

  try {
    if (*harvest_app) return cmd_harvest(manifest, out);
    for (Command* c : {&synth, &distill, &calibrate, &eval, &sweep, &ablate}) {
      if (!*c->app) continue;
      const RunConfig config = resolve(*c);
      const std::string name = c->app->get_name();
      if (name == "synth") return cmd_synth(config, out);
      if (name == "distill") return cmd_distill(config, out);
      if (name == "calibrate") return cmd_calibrate(config, out);
      if (name == "eval") return cmd_eval(config, out);
      if (name == "sweep") return cmd_sweep(config, out);
      return cmd_ablate(config, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code(ErrorKind::kUsage);
}

}  // namespace qdistill
