/**
 * dataset.hpp: images as feature rows, their splits and optional labels.
 *
 * Opinion-score reads go through FeatureDataset::mos(), which counts every
 * access. The counter is shared between copies of a dataset so a training
 * stage can be audited for label use after the fact.
 */
#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qdistill/signals.hpp"

namespace qdistill {

enum class Split : std::uint8_t { kTrain, kVal, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

class FeatureDataset {
 public:
  FeatureDataset() = default;
  FeatureDataset(std::vector<std::string> ids, Eigen::MatrixXd features, std::vector<Split> splits);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features_.cols()); }

  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::MatrixXd& features() const { return features_; }
  Split split(std::size_t row) const { return splits_[row]; }
  const std::vector<Split>& splits() const { return splits_; }

  /// Row of `id`; throws a reference error for unknown ids.
  std::size_t row_of(std::string_view id) const;
  std::optional<std::size_t> find_row(std::string_view id) const;

  std::vector<std::size_t> rows_in(Split split) const;

  void set_mos(std::vector<std::optional<double>> mos);
  bool has_mos(std::size_t row) const { return row < mos_.size() && mos_[row].has_value(); }
  /// Opinion score of `row`. Counted; throws a missing-labels error if absent.
  double mos(std::size_t row) const;
  std::uint64_t mos_access_count() const { return mos_reads_->load(); }

  void set_latent(std::vector<double> latent);
  bool has_latent() const { return !latent_.empty(); }
  const std::vector<double>& latent() const { return latent_; }

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd features_;
  std::vector<Split> splits_;
  std::vector<std::optional<double>> mos_;
  std::vector<double> latent_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::shared_ptr<std::atomic<std::uint64_t>> mos_reads_ =
      std::make_shared<std::atomic<std::uint64_t>>(0);
};

/// Everything a training run consumes. `points` is aligned with dataset rows,
/// which load_bundle sorts by id.
struct DatasetBundle {
  FeatureDataset dataset;
  std::vector<TeacherPointSignal> points;
  std::vector<SupervisionPair> pairs;
};

}  // namespace qdistill
