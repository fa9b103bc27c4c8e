#include "botaclip/error.hpp"

namespace botaclip {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ZeroRow: return "ZeroRow";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::MissingForwardCache: return "MissingForwardCache";
    case ErrorKind::BadLabel: return "BadLabel";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::EmptyData: return "EmptyData";
    case ErrorKind::LeakageDetected: return "LeakageDetected";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::UnknownSpecies: return "UnknownSpecies";
    case ErrorKind::DuplicateEntry: return "DuplicateEntry";
    case ErrorKind::InsufficientAbsences: return "InsufficientAbsences";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::TooFewCells: return "TooFewCells";
    case ErrorKind::UndefinedMetric: return "UndefinedMetric";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::DegenerateCluster: return "DegenerateCluster";
    case ErrorKind::AllZeroDifferences: return "AllZeroDifferences";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::BadFormat: return "BadFormat";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

bool is_numeric(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ZeroRow:
    case ErrorKind::NonFinite:
    case ErrorKind::NotNormalized:
    case ErrorKind::ZeroVariance:
    case ErrorKind::Degenerate:
    case ErrorKind::DegenerateCluster:
    case ErrorKind::UndefinedMetric:
      return true;
    default:
      return false;
  }
}

}  // namespace botaclip
