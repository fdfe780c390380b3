/**
 * io.hpp: on-disk formats.
 *
 * Dataset files are line-delimited JSON for variable-length records and CSV
 * for flat tables. Doubles are written in shortest round-trip form, so every
 * format reads back value-exactly and rewrites to identical bytes.
 */
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qdistill/dataset.hpp"
#include "qdistill/metrics.hpp"
#include "qdistill/pipeline.hpp"
#include "qdistill/synth.hpp"

namespace qdistill {

/// Shortest decimal that parses back to exactly `value`.
std::string format_double(double value);

struct DatasetPaths {
  std::filesystem::path features;  // {"id", "feat": [...]} per line
  std::filesystem::path mos;       // id,mos
  std::filesystem::path points;    // {"id", "logits": [5]} per line
  std::filesystem::path pairs;     // {"a", "b", "logit_a", "logit_b"} per line
  std::filesystem::path splits;    // id,split
  std::filesystem::path latent;    // id,latent (synthetic only)
  std::filesystem::path synth_config;

  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

/// Writes every file of `bundle`. Rows are written in id order. MOS and
/// latent files are only written when the dataset carries them.
void write_bundle(const DatasetBundle& bundle, const DatasetPaths& paths);

/// Features and splits are required. MOS, point, pair and latent files are
/// optional and read when present. Rows and points come back sorted by id.
DatasetBundle load_bundle(const DatasetPaths& paths);

// Individual record files, also used by the harvester.
void write_point_signals(const std::vector<TeacherPointSignal>& points,
                         const std::filesystem::path& path);
std::vector<TeacherPointSignal> read_point_signals(const std::filesystem::path& path);
void write_pair_signals(const std::vector<SupervisionPair>& pairs, const std::filesystem::path& path);
std::vector<SupervisionPair> read_pair_signals(const std::filesystem::path& path);

std::string point_signal_line(const TeacherPointSignal& point);
std::string pair_signal_line(const SupervisionPair& pair);

void write_synth_config(const SynthConfig& config, const std::filesystem::path& path);
SynthConfig read_synth_config(const std::filesystem::path& path);

struct Checkpoint {
  std::string stage;
  Student student;
};

inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
/// Missing file → missing-artifact error; bad content → format error.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// One line per epoch, then a summary line with the selected epoch and reports.
void write_run_log(const RunLog& log, const std::filesystem::path& path);
RunLog read_run_log(const std::filesystem::path& path);

std::string eval_report_json(const EvalReport& report);
EvalReport parse_eval_report(std::string_view text);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace qdistill
