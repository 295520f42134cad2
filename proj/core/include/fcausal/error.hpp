#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fcausal {

enum class ErrorKind {
  InvalidArgument,
  Io,
  MissingCell,
  NonNumericValue,
  DuplicateCell,
  NonFiniteValue,
  NotPositiveDefinite,
  InsufficientReplicates,
  RankTooLarge,
  DegenerateColumn,
  MaskTooSmall,
  FoldTooSmall,
  BootstrapFailure,
  NumericalFailure,
};

std::string_view to_string(ErrorKind kind);

/// True for failures that come from the numbers rather than the inputs' shape
/// or contents. The CLI maps these to exit code 2.
constexpr bool is_numerical(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::DegenerateColumn:
    case ErrorKind::BootstrapFailure:
    case ErrorKind::NumericalFailure:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fcausal
