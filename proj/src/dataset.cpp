#include "qdistill/dataset.hpp"

#include "qdistill/error.hpp"

namespace qdistill {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw Error(ErrorKind::kFormat, "unknown split tag '" + std::string(text) + "'");
}

FeatureDataset::FeatureDataset(std::vector<std::string> ids, Eigen::MatrixXd features,
                               std::vector<Split> splits)
    : ids_(std::move(ids)), features_(std::move(features)), splits_(std::move(splits)) {
  if (static_cast<Eigen::Index>(ids_.size()) != features_.rows() || ids_.size() != splits_.size()) {
    throw Error(ErrorKind::kShape, "dataset ids, features and splits differ in length");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw Error(ErrorKind::kFormat, "duplicate image id " + ids_[i]);
    }
  }
}

std::optional<std::size_t> FeatureDataset::find_row(std::string_view id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t FeatureDataset::row_of(std::string_view id) const {
  if (auto row = find_row(id)) return *row;
  throw Error(ErrorKind::kReference, "unknown image id " + std::string(id));
}

std::vector<std::size_t> FeatureDataset::rows_in(Split split) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < splits_.size(); ++i) {
    if (splits_[i] == split) rows.push_back(i);
  }
  return rows;
}

void FeatureDataset::set_mos(std::vector<std::optional<double>> mos) {
  if (mos.size() != ids_.size()) throw Error(ErrorKind::kShape, "MOS column length mismatch");
  mos_ = std::move(mos);
}

double FeatureDataset::mos(std::size_t row) const {
  mos_reads_->fetch_add(1);
  if (!has_mos(row)) {
    throw Error(ErrorKind::kMissingLabels, "no MOS for image " + ids_.at(row));
  }
  return *mos_[row];
}

void FeatureDataset::set_latent(std::vector<double> latent) {
  if (latent.size() != ids_.size()) throw Error(ErrorKind::kShape, "latent column length mismatch");
  latent_ = std::move(latent);
}

}  // namespace qdistill
