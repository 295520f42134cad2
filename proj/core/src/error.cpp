#include "fcausal/error.hpp"

namespace fcausal {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    case ErrorKind::MissingCell: return "MissingCell";
    case ErrorKind::NonNumericValue: return "NonNumericValue";
    case ErrorKind::DuplicateCell: return "DuplicateCell";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::InsufficientReplicates: return "InsufficientReplicates";
    case ErrorKind::RankTooLarge: return "RankTooLarge";
    case ErrorKind::DegenerateColumn: return "DegenerateColumn";
    case ErrorKind::MaskTooSmall: return "MaskTooSmall";
    case ErrorKind::FoldTooSmall: return "FoldTooSmall";
    case ErrorKind::BootstrapFailure: return "BootstrapFailure";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

}  // namespace fcausal
