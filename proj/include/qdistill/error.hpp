/**
 * error.hpp: error classes shared by every qdistill module.
 *
 * Every failure is thrown as qdistill::Error carrying an ErrorKind. The CLI
 * maps kinds onto process exit codes (see exit_code()).
 */
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qdistill {

enum class ErrorKind {
  kInvalidSignal,
  kInsufficientData,
  kConfiguration,
  kShape,
  kTrainingDivergence,
  kEmptyBatch,
  kDanglingPair,
  kDegenerateBatch,
  kDegenerateMetric,
  kDegenerateFit,
  kBudgetTooSmall,
  kMissingLabels,
  kTemplate,
  kUnparseableResponse,
  kHarvest,
  kFormat,
  kReference,
  kMissingArtifact,
  kUsage,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Process exit status for an error class. 0 is reserved for success.
///   2 usage, 3 configuration, 4 data format/reference, 5 missing artifact,
///   6 numerical/training failure, 7 teacher harvest, 8 other runtime errors.
int exit_code(ErrorKind kind);

}  // namespace qdistill
