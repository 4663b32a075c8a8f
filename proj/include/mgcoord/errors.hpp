#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mgcoord {

enum class ErrorKind {
  SingularSystem,
  DimensionMismatch,
  RankDeficient,
  UnknownPartition,
  NonSeparableConstraint,
  SingularPartition,
  NotConverged,
  DimensionCap,
  PowerIterationStall,
  NotTwoColorable,
  MissingMetadata,
  NonDivisor,
  InfeasibleCoarse,
  InvalidArgument,
  Config,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-readable kind; what() holds the human message.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace mgcoord
