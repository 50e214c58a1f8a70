#include "reyes/errors.hpp"

namespace reyes {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositivePart: return "NonPositivePart";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::AllZeroRow: return "AllZeroRow";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::SelfEdge: return "SelfEdge";
    case ErrorKind::IslandUnit: return "IslandUnit";
    case ErrorKind::NotStandardized: return "NotStandardized";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::TooFewUnits: return "TooFewUnits";
    case ErrorKind::ConstantVector: return "ConstantVector";
    case ErrorKind::TooManyUnits: return "TooManyUnits";
    case ErrorKind::EmptyDistribution: return "EmptyDistribution";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::NegativeValue: return "NegativeValue";
    case ErrorKind::RaggedRow: return "RaggedRow";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateSample:
    case ErrorKind::ConstantVector:
      return 3;
    case ErrorKind::TooManyUnits:
      return 4;
    case ErrorKind::SingularSystem:
      return 1;
    default:
      return 2;
  }
}

}  // namespace reyes
