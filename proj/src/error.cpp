#include "qdistill/error.hpp"

namespace qdistill {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidSignal: return "invalid signal";
    case ErrorKind::kInsufficientData: return "insufficient data";
    case ErrorKind::kConfiguration: return "configuration error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kTrainingDivergence: return "training divergence";
    case ErrorKind::kEmptyBatch: return "empty batch";
    case ErrorKind::kDanglingPair: return "dangling pair";
    case ErrorKind::kDegenerateBatch: return "degenerate batch";
    case ErrorKind::kDegenerateMetric: return "degenerate metric";
    case ErrorKind::kDegenerateFit: return "degenerate fit";
    case ErrorKind::kBudgetTooSmall: return "budget too small";
    case ErrorKind::kMissingLabels: return "missing labels";
    case ErrorKind::kTemplate: return "template error";
    case ErrorKind::kUnparseableResponse: return "unparseable response";
    case ErrorKind::kHarvest: return "harvest error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kReference: return "reference error";
    case ErrorKind::kMissingArtifact: return "missing artifact";
    case ErrorKind::kUsage: return "usage error";
  }
  return "error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return 2;
    case ErrorKind::kConfiguration:
    case ErrorKind::kTemplate:
      return 3;
    case ErrorKind::kFormat:
    case ErrorKind::kReference:
    case ErrorKind::kDanglingPair:
    case ErrorKind::kInvalidSignal:
      return 4;
    case ErrorKind::kMissingArtifact:
    case ErrorKind::kMissingLabels:
      return 5;
    case ErrorKind::kTrainingDivergence:
    case ErrorKind::kShape:
    case ErrorKind::kEmptyBatch:
    case ErrorKind::kDegenerateBatch:
    case ErrorKind::kDegenerateMetric:
    case ErrorKind::kDegenerateFit:
      return 6;
    case ErrorKind::kHarvest:
    case ErrorKind::kUnparseableResponse:
      return 7;
    case ErrorKind::kInsufficientData:
    case ErrorKind::kBudgetTooSmall:
      return 8;
  }
  return 8;
}

}  // namespace qdistill
