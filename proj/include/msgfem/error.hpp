#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace msgfem {

enum class ErrorKind {
  NotPositiveDefinite,
  DimensionMismatch,
  IndexOutOfRange,
  NotSymmetric,
  NonConvergence,
  NonpositiveCoefficient,
  AllNeumann,
  InvalidBlockCount,
  InvalidArgument,
  GridTooSmall,
  UncoveredNode,
  EmptyBoundary,
  TooManyModes,
  EmptyCoarseSpace,
  MissingCoarseSpace,
  TooLarge,
  Io,
  Config,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type carried through the library; `kind()` tells callers
/// which precondition or numerical failure triggered it.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
  case ErrorKind::DimensionMismatch: return "DimensionMismatch";
  case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
  case ErrorKind::NotSymmetric: return "NotSymmetric";
  case ErrorKind::NonConvergence: return "NonConvergence";
  case ErrorKind::NonpositiveCoefficient: return "NonpositiveCoefficient";
  case ErrorKind::AllNeumann: return "AllNeumann";
  case ErrorKind::InvalidBlockCount: return "InvalidBlockCount";
  case ErrorKind::InvalidArgument: return "InvalidArgument";
  case ErrorKind::GridTooSmall: return "GridTooSmall";
  case ErrorKind::UncoveredNode: return "UncoveredNode";
  case ErrorKind::EmptyBoundary: return "EmptyBoundary";
  case ErrorKind::TooManyModes: return "TooManyModes";
  case ErrorKind::EmptyCoarseSpace: return "EmptyCoarseSpace";
  case ErrorKind::MissingCoarseSpace: return "MissingCoarseSpace";
  case ErrorKind::TooLarge: return "TooLarge";
  case ErrorKind::Io: return "Io";
  case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

} // namespace msgfem
