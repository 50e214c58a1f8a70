#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reyes {

/// Failure categories. Each maps onto one CLI exit code (see exit_code()).
enum class ErrorKind {
  NonPositivePart,
  DimensionMismatch,
  AllZeroRow,
  UnknownLabel,
  SelfEdge,
  IslandUnit,
  NotStandardized,
  DegenerateSample,
  TooFewUnits,
  ConstantVector,
  TooManyUnits,
  EmptyDistribution,
  NotPositiveDefinite,
  SingularSystem,
  DuplicateId,
  NegativeValue,
  RaggedRow,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// 2 = input validation, 3 = degenerate statistic, 4 = resource cap, 1 = other.
int exit_code(ErrorKind kind);

}  // namespace reyes
