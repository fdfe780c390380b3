#include "qdistill/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "qdistill/config.hpp"
#include "qdistill/error.hpp"

namespace qdistill {
namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void format_error(const fs::path& file, std::size_t line, std::size_t column,
                               const std::string& what) {
  throw Error(ErrorKind::kFormat, file.string() + ":" + std::to_string(line) + ":" +
                                      std::to_string(column) + ": " + what);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingArtifact, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

// 1-based column of `key` inside a JSON line, for error positions.
std::size_t column_of(const std::string& line, const std::string& key) {
  const auto pos = line.find("\"" + key + "\"");
  return pos == std::string::npos ? 1 : pos + 1;
}

json parse_json_line(const fs::path& file, std::size_t line_no, const std::string& line) {
  try {
    json v = json::parse(line);
    if (!v.is_object()) format_error(file, line_no, 1, "expected a JSON object");
    return v;
  } catch (const json::parse_error& ex) {
    format_error(file, line_no, ex.byte == 0 ? 1 : ex.byte, "malformed JSON");
  }
}

const json& require(const fs::path& file, std::size_t line_no, const std::string& line,
                    const json& object, const std::string& key) {
  const auto it = object.find(key);
  if (it == object.end()) format_error(file, line_no, 1, "missing field '" + key + "'");
  (void)line;
  return *it;
}

std::string string_field(const fs::path& file, std::size_t line_no, const std::string& line,
                         const json& object, const std::string& key) {
  const json& v = require(file, line_no, line, object, key);
  if (!v.is_string()) format_error(file, line_no, column_of(line, key), "'" + key + "' must be a string");
  return v.get<std::string>();
}

double number_field(const fs::path& file, std::size_t line_no, const std::string& line,
                    const json& object, const std::string& key) {
  const json& v = require(file, line_no, line, object, key);
  if (!v.is_number()) format_error(file, line_no, column_of(line, key), "'" + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> number_array(const fs::path& file, std::size_t line_no, const std::string& line,
                                 const json& object, const std::string& key) {
  const json& v = require(file, line_no, line, object, key);
  if (!v.is_array()) format_error(file, line_no, column_of(line, key), "'" + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& x : v) {
    if (!x.is_number()) format_error(file, line_no, column_of(line, key), "'" + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

struct CsvRow {
  std::size_t line = 0;
  std::string id;
  std::string value;
  std::size_t value_column = 0;
};

// Two-column CSV with a fixed header.
std::vector<CsvRow> read_csv2(const fs::path& path, const std::string& header) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines.front() != header) {
    format_error(path, 1, 1, "expected header '" + header + "'");
  }
  std::vector<CsvRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (blank(line)) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) format_error(path, i + 1, line.size() + 1, "expected two fields");
    if (line.find(',', comma + 1) != std::string::npos) {
      format_error(path, i + 1, line.find(',', comma + 1) + 1, "expected two fields");
    }
    if (comma == 0) format_error(path, i + 1, 1, "empty id");
    rows.push_back({i + 1, line.substr(0, comma), line.substr(comma + 1), comma + 2});
  }
  return rows;
}

double parse_csv_number(const fs::path& path, const CsvRow& row) {
  double value = 0.0;
  const char* begin = row.value.data();
  const char* end = begin + row.value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    format_error(path, row.line, row.value_column + static_cast<std::size_t>(ptr - begin),
                 "cannot parse number '" + row.value + "'");
  }
  if (!std::isfinite(value)) format_error(path, row.line, row.value_column, "non-finite value");
  return value;
}

[[noreturn]] void dangling(const fs::path& referring, std::size_t line, const std::string& id,
                           const fs::path& owner) {
  throw Error(ErrorKind::kReference, referring.string() + ":" + std::to_string(line) + ": id '" + id +
                                         "' is not present in " + owner.string());
}

std::string dump_line(const ojson& v) { return v.dump() + "\n"; }

void write_lines(const fs::path& path, const std::string& text) { write_text(path, text); }

std::vector<std::size_t> rows_by_id(const FeatureDataset& ds) {
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ds.ids()[a] < ds.ids()[b]; });
  return order;
}

ojson flat_params(const StudentParams& params) {
  ojson weights = ojson::array();
  ojson biases = ojson::array();
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const auto& w = params.weights[l];
    weights.push_back(std::vector<double>(w.data(), w.data() + w.size()));
    const auto& b = params.biases[l];
    biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  }
  return ojson{{"weights", weights}, {"biases", biases}};
}

StudentParams read_params(const fs::path& file, const std::vector<int>& sizes, const json& holder) {
  auto fail = [&](const std::string& what) { format_error(file, 1, 1, what); };
  StudentParams p;
  p.layer_sizes = sizes;
  const json& w = holder.at("weights");
  const json& b = holder.at("biases");
  if (!w.is_array() || !b.is_array() || w.size() + 1 != sizes.size() || b.size() + 1 != sizes.size()) {
    fail("parameter arrays do not match layer_sizes");
  }
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto wl = w[l].get<std::vector<double>>();
    const auto bl = b[l].get<std::vector<double>>();
    if (wl.size() != static_cast<std::size_t>(sizes[l + 1]) * static_cast<std::size_t>(sizes[l]) ||
        bl.size() != static_cast<std::size_t>(sizes[l + 1])) {
      fail("layer " + std::to_string(l) + " has the wrong number of values");
    }
    p.weights.push_back(Eigen::Map<const Eigen::MatrixXd>(wl.data(), sizes[l + 1], sizes[l]));
    p.biases.push_back(Eigen::Map<const Eigen::VectorXd>(bl.data(), sizes[l + 1]));
  }
  return p;
}

ojson report_json(const EvalReport& r) {
  return ojson{{"srcc", r.srcc}, {"plcc", r.plcc}, {"mean_residual", r.mean_residual},
               {"mae", r.mae},   {"rmse", r.rmse}, {"n", r.n}};
}

EvalReport report_from(const json& v) {
  EvalReport r;
  r.srcc = v.at("srcc").get<double>();
  r.plcc = v.at("plcc").get<double>();
  r.mean_residual = v.at("mean_residual").get<double>();
  r.mae = v.at("mae").get<double>();
  r.rmse = v.at("rmse").get<double>();
  r.n = v.at("n").get<std::size_t>();
  return r;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, end);
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kMissingArtifact, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kMissingArtifact, "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingArtifact, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

DatasetPaths DatasetPaths::in_directory(const fs::path& dir) {
  return {dir / "features.jsonl", dir / "mos.csv",    dir / "points.jsonl",       dir / "pairs.jsonl",
          dir / "splits.csv",     dir / "latent.csv", dir / "synth_config.json"};
}

std::string point_signal_line(const TeacherPointSignal& point) {
  return dump_line(ojson{{"id", point.image_id},
                         {"logits", std::vector<double>(point.logits.begin(), point.logits.end())}});
}

std::string pair_signal_line(const SupervisionPair& pair) {
  return dump_line(ojson{{"a", pair.a}, {"b", pair.b}, {"logit_a", pair.logit_a}, {"logit_b", pair.logit_b}});
}

void write_point_signals(const std::vector<TeacherPointSignal>& points, const fs::path& path) {
  std::string text;
  for (const auto& p : points) text += point_signal_line(p);
  write_lines(path, text);
}

std::vector<TeacherPointSignal> read_point_signals(const fs::path& path) {
  const auto lines = read_lines(path);
  std::vector<TeacherPointSignal> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const json v = parse_json_line(path, i + 1, lines[i]);
    std::string id = string_field(path, i + 1, lines[i], v, "id");
    const auto logits = number_array(path, i + 1, lines[i], v, "logits");
    if (logits.size() != kNumQualityLevels) {
      format_error(path, i + 1, column_of(lines[i], "logits"), "expected 5 logits");
    }
    QualityVector q{};
    std::copy(logits.begin(), logits.end(), q.begin());
    try {
      out.push_back(make_point_signal(std::move(id), q));
    } catch (const Error& ex) {
      format_error(path, i + 1, column_of(lines[i], "logits"), ex.what());
    }
  }
  return out;
}

void write_pair_signals(const std::vector<SupervisionPair>& pairs, const fs::path& path) {
  std::string text;
  for (const auto& p : pairs) text += pair_signal_line(p);
  write_lines(path, text);
}

std::vector<SupervisionPair> read_pair_signals(const fs::path& path) {
  const auto lines = read_lines(path);
  std::vector<SupervisionPair> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const json v = parse_json_line(path, i + 1, lines[i]);
    std::string a = string_field(path, i + 1, lines[i], v, "a");
    std::string b = string_field(path, i + 1, lines[i], v, "b");
    const double la = number_field(path, i + 1, lines[i], v, "logit_a");
    const double lb = number_field(path, i + 1, lines[i], v, "logit_b");
    try {
      out.push_back(make_supervision_pair(std::move(a), std::move(b), la, lb));
    } catch (const Error& ex) {
      format_error(path, i + 1, 1, ex.what());
    }
  }
  return out;
}

void write_synth_config(const SynthConfig& config, const fs::path& path) {
  write_text(path, synth_config_json(config).dump(2) + "\n");
}

SynthConfig read_synth_config(const fs::path& path) {
  const std::string text = read_text(path);
  json v;
  try {
    v = json::parse(text);
  } catch (const json::parse_error& ex) {
    format_error(path, 1, ex.byte, "malformed JSON");
  }
  return synth_config_from_json(v);
}

void write_bundle(const DatasetBundle& bundle, const DatasetPaths& paths) {
  const FeatureDataset& ds = bundle.dataset;
  const auto order = rows_by_id(ds);

  std::string features, splits = "id,split\n", mos = "id,mos\n", latent = "id,latent\n";
  bool any_mos = false;
  for (std::size_t r : order) {
    const auto row = ds.features().row(static_cast<Eigen::Index>(r));
    std::vector<double> feat(row.size());
    for (Eigen::Index j = 0; j < row.size(); ++j) feat[static_cast<std::size_t>(j)] = row(j);
    features += dump_line(ojson{{"id", ds.ids()[r]}, {"feat", feat}});
    splits += ds.ids()[r] + "," + std::string(to_string(ds.split(r))) + "\n";
    if (ds.has_mos(r)) {
      any_mos = true;
      mos += ds.ids()[r] + "," + format_double(ds.mos(r)) + "\n";
    }
    if (ds.has_latent()) latent += ds.ids()[r] + "," + format_double(ds.latent()[r]) + "\n";
  }
  write_lines(paths.features, features);
  write_lines(paths.splits, splits);
  if (any_mos) write_lines(paths.mos, mos);
  if (ds.has_latent()) write_lines(paths.latent, latent);

  std::vector<TeacherPointSignal> points = bundle.points;
  std::stable_sort(points.begin(), points.end(),
                   [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  write_point_signals(points, paths.points);
  write_pair_signals(bundle.pairs, paths.pairs);
}

DatasetBundle load_bundle(const DatasetPaths& paths) {
  // Features define the id universe.
  struct FeatureRow {
    std::string id;
    std::vector<double> feat;
  };
  std::vector<FeatureRow> rows;
  {
    const auto lines = read_lines(paths.features);
    std::map<std::string, std::size_t> seen;
    std::size_t dim = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (blank(lines[i])) continue;
      const json v = parse_json_line(paths.features, i + 1, lines[i]);
      FeatureRow row{string_field(paths.features, i + 1, lines[i], v, "id"),
                     number_array(paths.features, i + 1, lines[i], v, "feat")};
      if (row.feat.empty()) format_error(paths.features, i + 1, column_of(lines[i], "feat"), "empty feature vector");
      if (rows.empty()) {
        dim = row.feat.size();
      } else if (row.feat.size() != dim) {
        format_error(paths.features, i + 1, column_of(lines[i], "feat"),
                     "feature length " + std::to_string(row.feat.size()) + " differs from " + std::to_string(dim));
      }
      for (double x : row.feat) {
        if (!std::isfinite(x)) format_error(paths.features, i + 1, column_of(lines[i], "feat"), "non-finite feature");
      }
      if (!seen.emplace(row.id, i + 1).second) {
        format_error(paths.features, i + 1, column_of(lines[i], "id"), "duplicate id '" + row.id + "'");
      }
      rows.push_back(std::move(row));
    }
  }
  if (rows.empty()) throw Error(ErrorKind::kInsufficientData, paths.features.string() + " holds no rows");
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  std::vector<std::string> ids;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().feat.size()));
  std::map<std::string, std::size_t, std::less<>> row_of;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ids.push_back(rows[r].id);
    row_of[rows[r].id] = r;
    for (std::size_t j = 0; j < rows[r].feat.size(); ++j) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r].feat[j];
    }
  }

  std::vector<std::optional<Split>> split_of(rows.size());
  for (const CsvRow& row : read_csv2(paths.splits, "id,split")) {
    const auto it = row_of.find(row.id);
    if (it == row_of.end()) dangling(paths.splits, row.line, row.id, paths.features);
    if (split_of[it->second]) format_error(paths.splits, row.line, 1, "duplicate id '" + row.id + "'");
    try {
      split_of[it->second] = parse_split(row.value);
    } catch (const Error&) {
      format_error(paths.splits, row.line, row.value_column, "unknown split '" + row.value + "'");
    }
  }
  std::vector<Split> splits;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!split_of[r]) {
      throw Error(ErrorKind::kReference, paths.features.string() + ": id '" + ids[r] + "' has no entry in " +
                                             paths.splits.string());
    }
    splits.push_back(*split_of[r]);
  }

  DatasetBundle bundle;
  bundle.dataset = FeatureDataset(ids, std::move(x), std::move(splits));

  if (fs::exists(paths.mos)) {
    std::vector<std::optional<double>> mos(rows.size());
    for (const CsvRow& row : read_csv2(paths.mos, "id,mos")) {
      const auto it = row_of.find(row.id);
      if (it == row_of.end()) dangling(paths.mos, row.line, row.id, paths.features);
      if (mos[it->second]) format_error(paths.mos, row.line, 1, "duplicate id '" + row.id + "'");
      mos[it->second] = parse_csv_number(paths.mos, row);
    }
    bundle.dataset.set_mos(std::move(mos));
  }

  if (fs::exists(paths.latent)) {
    std::vector<std::optional<double>> latent(rows.size());
    for (const CsvRow& row : read_csv2(paths.latent, "id,latent")) {
      const auto it = row_of.find(row.id);
      if (it == row_of.end()) dangling(paths.latent, row.line, row.id, paths.features);
      if (latent[it->second]) format_error(paths.latent, row.line, 1, "duplicate id '" + row.id + "'");
      latent[it->second] = parse_csv_number(paths.latent, row);
    }
    std::vector<double> values;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!latent[r]) {
        throw Error(ErrorKind::kReference, paths.features.string() + ": id '" + ids[r] + "' has no entry in " +
                                               paths.latent.string());
      }
      values.push_back(*latent[r]);
    }
    bundle.dataset.set_latent(std::move(values));
  }

  if (fs::exists(paths.points)) {
    auto points = read_point_signals(paths.points);
    std::vector<bool> seen(rows.size(), false);
    std::size_t line = 0;
    for (const auto& p : points) {
      ++line;
      const auto it = row_of.find(p.image_id);
      if (it == row_of.end()) dangling(paths.points, line, p.image_id, paths.features);
      if (seen[it->second]) format_error(paths.points, line, 1, "duplicate id '" + p.image_id + "'");
      seen[it->second] = true;
    }
    std::stable_sort(points.begin(), points.end(),
                     [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    bundle.points = std::move(points);
  }

  if (fs::exists(paths.pairs)) {
    auto pairs = read_pair_signals(paths.pairs);
    std::size_t line = 0;
    for (const auto& p : pairs) {
      ++line;
      if (!row_of.contains(p.a)) dangling(paths.pairs, line, p.a, paths.features);
      if (!row_of.contains(p.b)) dangling(paths.pairs, line, p.b, paths.features);
    }
    bundle.pairs = std::move(pairs);
  }
  return bundle;
}

void write_checkpoint(const Checkpoint& checkpoint, const fs::path& path) {
  const Student& s = checkpoint.student;
  ojson doc;
  doc["format"] = "qdistill-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["stage"] = checkpoint.stage;
  doc["layer_sizes"] = s.params.layer_sizes;
  const ojson params = flat_params(s.params);
  doc["weights"] = params["weights"];
  doc["biases"] = params["biases"];
  doc["scaler"] = ojson{{"mean", s.scaler.mean}, {"scale", s.scaler.scale}};
  if (s.optimizer) {
    const OptimizerState& o = *s.optimizer;
    doc["optimizer"] = ojson{{"step", o.step},
                             {"lr", o.hyper.lr},
                             {"beta1", o.hyper.beta1},
                             {"beta2", o.hyper.beta2},
                             {"eps", o.hyper.eps},
                             {"weight_decay", o.hyper.weight_decay},
                             {"first_moment", flat_params(o.first_moment)},
                             {"second_moment", flat_params(o.second_moment)}};
  } else {
    doc["optimizer"] = nullptr;
  }
  doc["seed_lineage"] = s.seed_lineage;
  write_text(path, doc.dump(1) + "\n");
}

Checkpoint read_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::kMissingArtifact, "checkpoint " + path.string() + " not found");
  const std::string text = read_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    format_error(path, 1, ex.byte, "malformed JSON");
  }
  try {
    if (doc.at("format") != "qdistill-checkpoint") format_error(path, 1, 1, "not a checkpoint");
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      format_error(path, 1, 1, "unsupported checkpoint version " + doc.at("version").dump());
    }
    Checkpoint c;
    c.stage = doc.at("stage").get<std::string>();
    const auto sizes = doc.at("layer_sizes").get<std::vector<int>>();
    try {
      validate_layer_sizes(sizes);
    } catch (const Error& ex) {
      format_error(path, 1, 1, ex.what());
    }
    c.student.params = read_params(path, sizes, doc);
    c.student.scaler.mean = doc.at("scaler").at("mean").get<std::vector<double>>();
    c.student.scaler.scale = doc.at("scaler").at("scale").get<std::vector<double>>();
    if (c.student.scaler.mean.size() != static_cast<std::size_t>(sizes.front()) ||
        c.student.scaler.scale.size() != static_cast<std::size_t>(sizes.front())) {
      format_error(path, 1, 1, "scaler does not match the input width");
    }
    const json& o = doc.at("optimizer");
    if (!o.is_null()) {
      OptimizerState state;
      state.step = o.at("step").get<std::int64_t>();
      state.hyper = {o.at("lr").get<double>(), o.at("beta1").get<double>(), o.at("beta2").get<double>(),
                     o.at("eps").get<double>(), o.at("weight_decay").get<double>()};
      state.first_moment = read_params(path, sizes, o.at("first_moment"));
      state.second_moment = read_params(path, sizes, o.at("second_moment"));
      c.student.optimizer = std::move(state);
    }
    c.student.seed_lineage = doc.at("seed_lineage").get<std::vector<std::uint64_t>>();
    return c;
  } catch (const json::exception& ex) {
    format_error(path, 1, 1, ex.what());
  }
}

void write_run_log(const RunLog& log, const fs::path& path) {
  std::string text;
  for (const EpochRecord& e : log.epochs) {
    text += dump_line(ojson{{"stage", log.stage},
                            {"epoch", e.epoch},
                            {"train_loss", e.train_loss},
                            {"train_point", e.train_point},
                            {"train_rank", e.train_rank},
                            {"val_loss", e.val_loss},
                            {"val_plcc", e.val_plcc}});
  }
  ojson reports = ojson::object();
  for (const auto& [name, report] : log.reports) reports[name] = report_json(report);
  text += dump_line(ojson{{"stage", log.stage}, {"selected", log.selected}, {"reports", reports}});
  write_text(path, text);
}

RunLog read_run_log(const fs::path& path) {
  const auto lines = read_lines(path);
  RunLog log;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const json v = parse_json_line(path, i + 1, lines[i]);
    try {
      log.stage = v.at("stage").get<std::string>();
      if (v.contains("epoch")) {
        EpochRecord e;
        e.epoch = v.at("epoch").get<int>();
        e.train_loss = v.at("train_loss").get<double>();
        e.train_point = v.at("train_point").get<double>();
        e.train_rank = v.at("train_rank").get<double>();
        e.val_loss = v.at("val_loss").get<double>();
        e.val_plcc = v.at("val_plcc").get<double>();
        log.epochs.push_back(e);
      } else {
        log.selected = v.at("selected").get<int>();
        for (const auto& [name, report] : v.at("reports").items()) log.reports[name] = report_from(report);
      }
    } catch (const json::exception& ex) {
      format_error(path, i + 1, 1, ex.what());
    }
  }
  return log;
}

std::string eval_report_json(const EvalReport& report) { return report_json(report).dump(2) + "\n"; }

EvalReport parse_eval_report(std::string_view text) {
  try {
    return report_from(json::parse(text));
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::kFormat, std::string("evaluation report: ") + ex.what());
  }
}

}  // namespace qdistill
