#include "qdistill/teacher_client.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "qdistill/error.hpp"
#include "qdistill/io.hpp"
#include "qdistill/log.hpp"
// After Eigen: resolv.h (pulled in by httplib) defines _res as a macro.
#include "httplib.h"

namespace qdistill {
namespace fs = std::filesystem;
using nlohmann::json;

const char* const kDefaultPointTemplate =
    "Look at the image and judge its overall perceptual quality.\n"
    "{image}\n"
    "Answer with exactly one word from: {choices}.";

const char* const kDefaultPairTemplate =
    "Compare the overall perceptual quality of two images.\n"
    "Image A:\n{image_a}\n"
    "Image B:\n{image_b}\n"
    "Which image has better quality? Answer with exactly one letter: A or B.";

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
  return text;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string choices_text() {
  std::string out;
  for (std::size_t k = 0; k < kNumQualityLevels; ++k) {
    if (k > 0) out += ", ";
    out += kQualityWords[k];
  }
  return out;
}

// Splits `text` at the given placeholders (in order of appearance) into
// content parts: text segments and image parts.
json content_parts(const std::string& text, const std::map<std::string, std::string>& images) {
  json parts = json::array();
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = std::string::npos;
    const std::pair<const std::string, std::string>* hit = nullptr;
    for (const auto& entry : images) {
      const auto p = text.find(entry.first, pos);
      if (p < next) {
        next = p;
        hit = &entry;
      }
    }
    const std::string segment = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (!trim(segment).empty()) parts.push_back({{"type", "text"}, {"text", segment}});
    if (hit == nullptr) break;
    parts.push_back({{"type", "image_url"}, {"image_url", {{"url", hit->second}}}});
    pos = next + hit->first.size();
  }
  return parts;
}

json chat_request(const std::string& model, json parts, int top_logprobs) {
  return json{{"model", model},
              {"messages", json::array({{{"role", "user"}, {"content", std::move(parts)}}})},
              {"max_tokens", 1},
              {"temperature", 0},
              {"logprobs", true},
              {"top_logprobs", top_logprobs}};
}

[[noreturn]] void unparseable(const json& response, const std::string& why) {
  throw Error(ErrorKind::kUnparseableResponse, why + "; response: " + response.dump());
}

std::string base64(const std::string& bytes) {
  static const char* table = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += table[(v >> 6) & 63];
    out += table[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += table[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(ErrorKind::kConfiguration, "bad endpoint URL '" + url + "'");
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

std::string pair_key(const std::string& a, const std::string& b) { return a + "|" + b; }

// Previously written records, keyed by item. Lines that do not parse (for
// example a write cut short by an interrupted run) are ignored.
std::map<std::string, std::string> existing_records(const fs::path& path, bool pairs) {
  std::map<std::string, std::string> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    try {
      const json v = json::parse(line);
      if (pairs) {
        const auto p = make_supervision_pair(v.at("a").get<std::string>(), v.at("b").get<std::string>(),
                                             v.at("logit_a").get<double>(), v.at("logit_b").get<double>());
        out[pair_key(p.a, p.b)] = pair_signal_line(p);
      } else {
        const auto logits = v.at("logits").get<std::vector<double>>();
        if (logits.size() != kNumQualityLevels) continue;
        QualityVector q{};
        std::copy(logits.begin(), logits.end(), q.begin());
        const auto p = make_point_signal(v.at("id").get<std::string>(), q);
        out[p.image_id] = point_signal_line(p);
      }
    } catch (const std::exception&) {
      continue;
    }
  }
  return out;
}

LatencyStats latency_stats(std::vector<double> ms) {
  LatencyStats s;
  s.count = ms.size();
  if (ms.empty()) return s;
  std::sort(ms.begin(), ms.end());
  double sum = 0.0;
  for (double x : ms) sum += x;
  s.mean_ms = sum / static_cast<double>(ms.size());
  auto rank = [&](double q) {
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(ms.size())));
    return ms[std::clamp<std::size_t>(k, 1, ms.size()) - 1];
  };
  s.p50_ms = rank(0.5);
  s.p95_ms = rank(0.95);
  s.max_ms = ms.back();
  return s;
}

std::vector<ImageRef> read_image_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingArtifact, "cannot open " + path.string());
  std::vector<ImageRef> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (no == 1 && line == "id,ref") continue;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0) {
      throw Error(ErrorKind::kFormat, path.string() + ":" + std::to_string(no) + ":1: expected id,ref");
    }
    out.push_back({line.substr(0, comma), line.substr(comma + 1)});
  }
  return out;
}

}  // namespace

void HarvestManifest::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kConfiguration, "manifest: " + what); };
  if (endpoint.empty()) fail("endpoint is required");
  parse_endpoint(endpoint);
  if (model.empty()) fail("model is required");
  if (concurrency < 1) fail("concurrency must be >= 1");
  if (retry.max_attempts < 1 || retry.backoff_ms < 0 || retry.max_backoff_ms < 0) fail("bad retry policy");
  if (top_logprobs < 5) fail("top_logprobs must be >= 5");
  if (timeout_s < 1) fail("timeout_s must be >= 1");
  if (pair_count < -1) fail("pair_count must be >= 0 (or -1)");
  // Surface template problems before any request is sent.
  build_point_request("x", point_template, model, top_logprobs);
  build_pair_request("x", "y", pair_template, model, top_logprobs);
}

HarvestManifest load_manifest(const fs::path& path) {
  json v;
  try {
    v = json::parse(read_text(path));
  } catch (const json::parse_error& ex) {
    throw Error(ErrorKind::kConfiguration, path.string() + ": " + ex.what());
  }
  if (!v.is_object()) throw Error(ErrorKind::kConfiguration, path.string() + ": expected a JSON object");
  const fs::path dir = path.parent_path();
  auto rel = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : dir / p; };

  HarvestManifest m;
  m.point_template = kDefaultPointTemplate;
  m.pair_template = kDefaultPairTemplate;
  try {
    for (const auto& [key, value] : v.items()) {
      if (key == "endpoint") m.endpoint = value.get<std::string>();
      else if (key == "model") m.model = value.get<std::string>();
      else if (key == "images") {
        for (const auto& img : value) m.images.push_back({img.at("id").get<std::string>(), img.at("ref").get<std::string>()});
      } else if (key == "images_file") m.images = read_image_list(rel(value.get<std::string>()));
      else if (key == "point_template") m.point_template = read_text(rel(value.get<std::string>()));
      else if (key == "pair_template") m.pair_template = read_text(rel(value.get<std::string>()));
      else if (key == "concurrency") m.concurrency = value.get<int>();
      else if (key == "max_attempts") m.retry.max_attempts = value.get<int>();
      else if (key == "backoff_ms") m.retry.backoff_ms = value.get<int>();
      else if (key == "max_backoff_ms") m.retry.max_backoff_ms = value.get<int>();
      else if (key == "top_logprobs") m.top_logprobs = value.get<int>();
      else if (key == "timeout_s") m.timeout_s = value.get<int>();
      else if (key == "token_env") m.token_env = value.get<std::string>();
      else if (key == "out") m.out_dir = rel(value.get<std::string>());
      else if (key == "pairs_file") m.pairs_file = rel(value.get<std::string>());
      else if (key == "pair_count") m.pair_count = value.get<long>();
      else if (key == "pair_seed") m.pair_seed = value.get<std::uint64_t>();
      else if (key == "dedup_pairs") m.dedup_pairs = value.get<bool>();
      else if (key == "splits_file") m.splits_file = rel(value.get<std::string>());
      else throw Error(ErrorKind::kConfiguration, path.string() + ": unknown manifest key '" + key + "'");
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::kConfiguration, path.string() + ": " + ex.what());
  }
  if (m.out_dir.is_relative()) m.out_dir = dir / m.out_dir;
  m.validate();
  return m;
}

std::string image_url(const std::string& ref) {
  if (ref.starts_with("http://") || ref.starts_with("https://") || ref.starts_with("data:")) return ref;
  const std::string ext = lower(fs::path(ref).extension().string());
  const std::string mime = ext == ".png"    ? "image/png"
                           : ext == ".webp" ? "image/webp"
                           : ext == ".gif"  ? "image/gif"
                           : ext == ".bmp"  ? "image/bmp"
                                            : "image/jpeg";
  return "data:" + mime + ";base64," + base64(read_text(ref));
}

json build_point_request(const std::string& url, const std::string& templ, const std::string& model,
                         int top_logprobs) {
  if (count_of(templ, "{image}") != 1) {
    throw Error(ErrorKind::kTemplate, "point template needs exactly one {image} slot");
  }
  const std::string text = replace_all(templ, "{choices}", choices_text());
  const std::string lowered = lower(text);
  for (std::string_view word : kQualityWords) {
    if (lowered.find(lower(std::string(word))) == std::string::npos) {
      throw Error(ErrorKind::kTemplate, "point template does not list the answer word '" + std::string(word) +
                                            "' (use {choices})");
    }
  }
  return chat_request(model, content_parts(text, {{"{image}", url}}), top_logprobs);
}

json build_pair_request(const std::string& url_a, const std::string& url_b, const std::string& templ,
                        const std::string& model, int top_logprobs) {
  if (count_of(templ, "{image_a}") != 1 || count_of(templ, "{image_b}") != 1) {
    throw Error(ErrorKind::kTemplate, "pair template needs exactly one {image_a} and one {image_b} slot");
  }
  return chat_request(model, content_parts(templ, {{"{image_a}", url_a}, {"{image_b}", url_b}}), top_logprobs);
}

std::vector<std::pair<std::string, double>> top_alternatives(const json& response) {
  std::vector<std::pair<std::string, double>> out;
  try {
    const json& logprobs = response.at("choices").at(0).at("logprobs");
    if (logprobs.contains("content")) {
      for (const json& alt : logprobs.at("content").at(0).at("top_logprobs")) {
        out.emplace_back(alt.at("token").get<std::string>(), alt.at("logprob").get<double>());
      }
    } else {
      for (const auto& [token, lp] : logprobs.at("top_logprobs").at(0).items()) {
        out.emplace_back(token, lp.get<double>());
      }
    }
  } catch (const json::exception&) {
    unparseable(response, "no top-logprobs list at the first answer token");
  }
  if (out.empty()) unparseable(response, "empty top-logprobs list");
  for (const auto& [token, lp] : out) {
    if (!std::isfinite(lp) && !(std::isinf(lp) && lp < 0)) unparseable(response, "non-finite logprob for '" + token + "'");
  }
  return out;
}

QualityVector extract_point_logits(const json& response, int* floored) {
  const auto alts = top_alternatives(response);
  double min_lp = std::numeric_limits<double>::infinity();
  for (const auto& alt : alts) {
    if (std::isfinite(alt.second)) min_lp = std::min(min_lp, alt.second);
  }
  QualityVector logits{};
  std::array<bool, kNumQualityLevels> found{};
  for (const auto& [token, lp] : alts) {
    const std::string t = lower(trim(token));
    for (std::size_t k = 0; k < kNumQualityLevels; ++k) {
      if (t == lower(std::string(kQualityWords[k])) && std::isfinite(lp)) {
        logits[k] = found[k] ? std::max(logits[k], lp) : lp;
        found[k] = true;
      }
    }
  }
  int missing = 0;
  for (std::size_t k = 0; k < kNumQualityLevels; ++k) {
    if (!found[k]) {
      logits[k] = min_lp - 10.0;
      ++missing;
    }
  }
  if (missing == static_cast<int>(kNumQualityLevels)) unparseable(response, "no quality word among the alternatives");
  if (floored != nullptr) *floored = missing;
  return logits;
}

std::pair<double, double> extract_pair_logits(const json& response) {
  const auto alts = top_alternatives(response);
  std::optional<double> la, lb;
  for (const auto& [token, lp] : alts) {
    const std::string t = trim(token);
    if (!std::isfinite(lp)) continue;
    if (t == "A") la = la ? std::max(*la, lp) : lp;
    if (t == "B") lb = lb ? std::max(*lb, lp) : lp;
  }
  if (!la || !lb) unparseable(response, std::string("decision token '") + (la ? "B" : "A") + "' missing");
  return {*la, *lb};
}

nlohmann::ordered_json report_json(const HarvestReport& r) {
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& f : r.failures) {
    failures.push_back({{"item", f.item}, {"kind", f.kind}, {"attempts", f.attempts}, {"error", f.error}});
  }
  return {{"points_written", r.points_written},
          {"pairs_written", r.pairs_written},
          {"points_skipped", r.points_skipped},
          {"pairs_skipped", r.pairs_skipped},
          {"failures", failures},
          {"floored", r.floored},
          {"latency_ms",
           {{"count", r.latency.count},
            {"mean", r.latency.mean_ms},
            {"p50", r.latency.p50_ms},
            {"p95", r.latency.p95_ms},
            {"max", r.latency.max_ms}}},
          {"max_in_flight", r.max_in_flight}};
}

std::vector<std::pair<std::string, std::string>> manifest_pairs(const HarvestManifest& m) {
  std::vector<std::pair<std::string, std::string>> out;
  if (!m.pairs_file.empty()) {
    std::ifstream in(m.pairs_file);
    if (!in) throw Error(ErrorKind::kMissingArtifact, "cannot open " + m.pairs_file.string());
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (trim(line).empty()) continue;
      try {
        const json v = json::parse(line);
        out.emplace_back(v.at("a").get<std::string>(), v.at("b").get<std::string>());
      } catch (const json::exception& ex) {
        throw Error(ErrorKind::kFormat, m.pairs_file.string() + ":" + std::to_string(no) + ":1: " + ex.what());
      }
    }
    return out;
  }
  std::vector<std::string> ids;
  for (const auto& img : m.images) ids.push_back(img.id);
  if (!m.splits_file.empty()) {
    std::set<std::string> train;
    std::ifstream in(m.splits_file);
    if (!in) throw Error(ErrorKind::kMissingArtifact, "cannot open " + m.splits_file.string());
    std::string line;
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      if (comma != std::string::npos && trim(line.substr(comma + 1)) == "train") train.insert(line.substr(0, comma));
    }
    std::erase_if(ids, [&](const std::string& id) { return !train.contains(id); });
  }
  if (ids.size() < 2) throw Error(ErrorKind::kInsufficientData, "need at least two images to sample pairs");
  const std::size_t count = m.pair_count < 0 ? m.images.size() : static_cast<std::size_t>(m.pair_count);
  return sample_pairs(ids, count, m.pair_seed, m.dedup_pairs);
}

HarvestReport harvest(const HarvestManifest& manifest, const std::vector<std::string>& image_ids,
                      const std::vector<std::pair<std::string, std::string>>& pairs) {
  manifest.validate();
  const Endpoint endpoint = parse_endpoint(manifest.endpoint);
  std::map<std::string, std::string> ref_of;
  for (const auto& img : manifest.images) ref_of[img.id] = img.ref;
  for (const auto& id : image_ids) {
    if (!ref_of.contains(id)) throw Error(ErrorKind::kReference, "image '" + id + "' has no reference in the manifest");
  }
  for (const auto& [a, b] : pairs) {
    if (!ref_of.contains(a) || !ref_of.contains(b)) {
      throw Error(ErrorKind::kReference, "pair (" + a + ", " + b + ") references an image without a reference");
    }
  }

  fs::create_directories(manifest.out_dir);
  const fs::path points_path = manifest.out_dir / "points.jsonl";
  const fs::path pairs_path = manifest.out_dir / "pairs.jsonl";
  auto point_records = existing_records(points_path, false);
  auto pair_records = existing_records(pairs_path, true);

  struct Task {
    bool pair;
    std::string a, b;
  };
  HarvestReport report;
  std::vector<Task> tasks;
  {
    std::set<std::string> queued;
    for (const auto& id : image_ids) {
      if (point_records.contains(id)) {
        ++report.points_skipped;
      } else if (queued.insert("p:" + id).second) {
        tasks.push_back({false, id, {}});
      }
    }
    for (const auto& [a, b] : pairs) {
      if (pair_records.contains(pair_key(a, b))) {
        ++report.pairs_skipped;
      } else if (queued.insert("q:" + pair_key(a, b)).second) {
        tasks.push_back({true, a, b});
      }
    }
  }

  std::string token;
  if (const char* t = std::getenv(manifest.token_env.c_str())) token = t;

  std::mutex mu;  // guards records, report and the append streams
  std::ofstream point_out(points_path, std::ios::app);
  std::ofstream pair_out(pairs_path, std::ios::app);
  std::vector<double> latencies;
  std::atomic<std::size_t> next{0};
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};

  auto worker = [&] {
    httplib::Client client(endpoint.base);
    client.set_connection_timeout(manifest.timeout_s, 0);
    client.set_read_timeout(manifest.timeout_s, 0);
    client.set_write_timeout(manifest.timeout_s, 0);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
      const Task& task = tasks[i];
      json request;
      std::string error;
      int attempts = 0;
      std::string record;
      int floored = 0;
      try {
        request = task.pair ? build_pair_request(image_url(ref_of.at(task.a)), image_url(ref_of.at(task.b)),
                                                 manifest.pair_template, manifest.model, manifest.top_logprobs)
                            : build_point_request(image_url(ref_of.at(task.a)), manifest.point_template,
                                                  manifest.model, manifest.top_logprobs);
      } catch (const Error& ex) {
        error = ex.what();
      }
      const std::string body = request.dump();
      int backoff = manifest.retry.backoff_ms;
      while (error.empty() && attempts < manifest.retry.max_attempts) {
        ++attempts;
        const int now = in_flight.fetch_add(1) + 1;
        for (int seen = peak.load(); now > seen && !peak.compare_exchange_weak(seen, now);) {
        }
        const auto t0 = std::chrono::steady_clock::now();
        auto res = client.Post(endpoint.path, headers, body, "application/json");
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        in_flight.fetch_sub(1);

        bool transient = false;
        std::string attempt_error;
        if (!res) {
          transient = true;
          attempt_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 429 || res->status >= 500) {
          transient = true;
          attempt_error = "HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
          attempt_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        } else {
          {
            std::lock_guard<std::mutex> lock(mu);
            latencies.push_back(ms);
          }
          try {
            const json response = json::parse(res->body);
            if (task.pair) {
              const auto [la, lb] = extract_pair_logits(response);
              record = pair_signal_line(make_supervision_pair(task.a, task.b, la, lb));
            } else {
              record = point_signal_line(make_point_signal(task.a, extract_point_logits(response, &floored)));
            }
          } catch (const json::exception& ex) {
            attempt_error = std::string("response is not JSON: ") + ex.what();
          } catch (const Error& ex) {
            attempt_error = ex.what();
          }
        }
        if (!record.empty()) break;
        if (!transient || attempts == manifest.retry.max_attempts) {
          error = attempt_error;
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff = std::min(backoff * 2, manifest.retry.max_backoff_ms);
      }

      std::lock_guard<std::mutex> lock(mu);
      if (!record.empty()) {
        if (task.pair) {
          pair_records[pair_key(task.a, task.b)] = record;
          pair_out << record << std::flush;
          ++report.pairs_written;
        } else {
          point_records[task.a] = record;
          point_out << record << std::flush;
          ++report.points_written;
          if (floored > 0) report.floored.push_back(task.a);
        }
      } else {
        report.failures.push_back({task.pair ? pair_key(task.a, task.b) : task.a, task.pair ? "pair" : "point",
                                   attempts, error});
        log_warning("harvest: " + std::string(task.pair ? "pair " : "image ") + report.failures.back().item +
                    " failed: " + error);
      }
    }
  };

  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(manifest.concurrency),
                                               std::max<std::size_t>(tasks.size(), 1));
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);
  for (auto& t : workers) t.join();
  point_out.close();
  pair_out.close();

  // Canonical rewrite: requested items in input order.
  std::string points_text, pairs_text;
  std::set<std::string> done;
  for (const auto& id : image_ids) {
    if (point_records.contains(id) && done.insert("p:" + id).second) points_text += point_records[id];
  }
  for (const auto& [a, b] : pairs) {
    const auto key = pair_key(a, b);
    if (pair_records.contains(key) && done.insert("q:" + key).second) pairs_text += pair_records[key];
  }
  write_text(points_path, points_text);
  write_text(pairs_path, pairs_text);

  auto order = [&](const std::string& item) {
    const auto it = std::find(image_ids.begin(), image_ids.end(), item);
    return it - image_ids.begin();
  };
  std::sort(report.floored.begin(), report.floored.end(),
            [&](const auto& x, const auto& y) { return order(x) < order(y); });
  std::sort(report.failures.begin(), report.failures.end(),
            [](const auto& x, const auto& y) { return std::tie(x.kind, x.item) < std::tie(y.kind, y.item); });
  report.latency = latency_stats(latencies);
  report.max_in_flight = peak.load();
  write_text(manifest.out_dir / "harvest_report.json", report_json(report).dump(2) + "\n");

  const std::size_t succeeded = report.points_written + report.pairs_written + report.points_skipped +
                                report.pairs_skipped;
  if (succeeded == 0 && !report.failures.empty()) {
    throw Error(ErrorKind::kHarvest, "every request failed; first error: " + report.failures.front().error);
  }
  return report;
}

}  // namespace qdistill
