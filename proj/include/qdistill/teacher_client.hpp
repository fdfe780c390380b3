/**
 * teacher_client.hpp: harvesting teacher signals from a chat-completion
 * endpoint that returns per-token log-probabilities.
 *
 * Requests ask for a single answer token with the top alternatives' logprobs.
 * Point requests show one image and the five quality words; pair requests
 * show two images and expect "A" or "B". Results are written in the same
 * line-delimited formats the synthetic benchmark produces.
 *
 * Template placeholders:
 *   point: {image} (required), {choices} (optional, the five words)
 *   pair:  {image_a}, {image_b} (both required)
 * Each image placeholder becomes an image part; the surrounding text becomes
 * text parts.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qdistill/signals.hpp"

namespace qdistill {

struct RetryPolicy {
  int max_attempts = 4;
  int backoff_ms = 200;  // doubled after every failed attempt
  int max_backoff_ms = 5000;
};

struct ImageRef {
  std::string id;
  std::string ref;  // http(s) URL, data: URI, or local file path
};

struct HarvestManifest {
  std::string endpoint;  // full URL of the chat-completions route
  std::string model;
  std::vector<ImageRef> images;
  std::string point_template;
  std::string pair_template;
  int concurrency = 4;
  RetryPolicy retry;
  int top_logprobs = 5;
  int timeout_s = 60;
  std::string token_env = "TEACHER_API_KEY";
  std::filesystem::path out_dir = "harvest";
  // Pair list: an explicit file of {"a","b"} lines, or uniform sampling.
  std::filesystem::path pairs_file;
  long pair_count = -1;  // -1: as many pairs as images
  std::uint64_t pair_seed = 0;
  bool dedup_pairs = false;
  std::filesystem::path splits_file;  // when set, pairs are sampled among train ids only

  void validate() const;
};

/// Reads a manifest JSON file. Template and list paths are relative to it.
HarvestManifest load_manifest(const std::filesystem::path& path);

/// Built-in prompt texts, the same as the files under templates/.
extern const char* const kDefaultPointTemplate;
extern const char* const kDefaultPairTemplate;

/// Turns a reference into the URL sent in an image part. Local files become
/// base64 data URIs.
std::string image_url(const std::string& ref);

nlohmann::json build_point_request(const std::string& image_url, const std::string& templ,
                                   const std::string& model = "teacher", int top_logprobs = 5);
nlohmann::json build_pair_request(const std::string& image_url_a, const std::string& image_url_b,
                                  const std::string& templ, const std::string& model = "teacher",
                                  int top_logprobs = 5);

/// Alternatives at the first answer token as (token, logprob). Accepts the
/// chat format (logprobs.content[0].top_logprobs) and the legacy completion
/// format (logprobs.top_logprobs[0] as a token -> logprob map).
std::vector<std::pair<std::string, double>> top_alternatives(const nlohmann::json& response);

/// Quality-word logits in canonical order. Words missing from the
/// alternatives get min(returned logprobs) - 10; `floored` receives how many.
QualityVector extract_point_logits(const nlohmann::json& response, int* floored = nullptr);

/// Logprobs of "A" and "B"; both must be present.
std::pair<double, double> extract_pair_logits(const nlohmann::json& response);

struct HarvestFailure {
  std::string item;  // image id, or "a|b" for pairs
  std::string kind;  // "point" or "pair"
  int attempts = 0;
  std::string error;
};

struct LatencyStats {
  std::size_t count = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
};

struct HarvestReport {
  std::size_t points_written = 0;  // new this run
  std::size_t pairs_written = 0;
  std::size_t points_skipped = 0;  // already present from an earlier run
  std::size_t pairs_skipped = 0;
  std::vector<HarvestFailure> failures;
  std::vector<std::string> floored;  // ids whose logits needed the floor
  LatencyStats latency;
  int max_in_flight = 0;
};

nlohmann::ordered_json report_json(const HarvestReport& report);

/// Pairs the manifest asks for: the pairs file, or a seeded uniform sample.
std::vector<std::pair<std::string, std::string>> manifest_pairs(const HarvestManifest& manifest);

/// Requests every point and pair signal not already present in the output
/// files, at most `concurrency` at a time. Output files end up in input order
/// regardless of completion order. Throws a harvest error if nothing at all
/// could be collected.
HarvestReport harvest(const HarvestManifest& manifest, const std::vector<std::string>& image_ids,
                      const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace qdistill
