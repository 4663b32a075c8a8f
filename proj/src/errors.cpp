#include "mgcoord/errors.hpp"

namespace mgcoord {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::UnknownPartition: return "UnknownPartition";
    case ErrorKind::NonSeparableConstraint: return "NonSeparableConstraint";
    case ErrorKind::SingularPartition: return "SingularPartition";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::DimensionCap: return "DimensionCap";
    case ErrorKind::PowerIterationStall: return "PowerIterationStall";
    case ErrorKind::NotTwoColorable: return "NotTwoColorable";
    case ErrorKind::MissingMetadata: return "MissingMetadata";
    case ErrorKind::NonDivisor: return "NonDivisor";
    case ErrorKind::InfeasibleCoarse: return "InfeasibleCoarse";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace mgcoord
