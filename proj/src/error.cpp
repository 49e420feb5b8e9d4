#include "beltpick/error.hpp"

namespace beltpick {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kBehindCamera: return "BehindCamera";
    case Errc::kNonPositiveDepth: return "NonPositiveDepth";
    case Errc::kInsufficientHistory: return "InsufficientHistory";
    case Errc::kNegativeDelay: return "NegativeDelay";
    case Errc::kAlreadyPassed: return "AlreadyPassed";
    case Errc::kPlacementFailure: return "PlacementFailure";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kEmptySurface: return "EmptySurface";
    case Errc::kNonWatertight: return "NonWatertight";
    case Errc::kOutOfRange: return "OutOfRange";
    case Errc::kSpecMismatch: return "SpecMismatch";
    case Errc::kBadMagic: return "BadMagic";
    case Errc::kTruncatedFile: return "TruncatedFile";
    case Errc::kSchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::kInvariantViolation: return "InvariantViolation";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace beltpick
