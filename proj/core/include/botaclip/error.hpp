#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace botaclip {

enum class ErrorKind {
  ShapeMismatch,
  ZeroRow,
  NonFinite,
  NotNormalized,
  MissingForwardCache,
  BadLabel,
  EmptySplit,
  EmptyData,
  LeakageDetected,
  UnknownClass,
  UnknownSpecies,
  DuplicateEntry,
  InsufficientAbsences,
  EmptySample,
  TooFewCells,
  UndefinedMetric,
  ZeroVariance,
  Degenerate,
  DegenerateCluster,
  AllZeroDifferences,
  BadMagic,
  TruncatedFile,
  BadFormat,
  BadConfig,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Numeric failures map to CLI exit code 3, everything else raised by the
// library is a data error (exit code 2).
bool is_numeric(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace botaclip
