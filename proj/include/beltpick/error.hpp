#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace beltpick {

enum class Errc {
  kBehindCamera,
  kNonPositiveDepth,
  kInsufficientHistory,
  kNegativeDelay,
  kAlreadyPassed,
  kPlacementFailure,
  kDimensionMismatch,
  kEmptySurface,
  kNonWatertight,
  kOutOfRange,
  kSpecMismatch,
  kBadMagic,
  kTruncatedFile,
  kSchemaVersionMismatch,
  kInvariantViolation,
  kInvalidArgument,
  kIo,
};

std::string_view errc_name(Errc code);

// Every failure surfaced by the library carries one of the codes above so
// callers (CLI, bindings, tests) can branch on the kind instead of the text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace beltpick
