#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bc {

enum class Errc {
  NotWav,
  UnsupportedFormat,
  InvalidWindow,
  EmptyUtterance,
  NonMonotonicTime,
  LengthMismatch,
  InsufficientNegatives,
  DidNotConverge,
  SingleClass,
  SchemaMismatch,
  TooFewSamples,
  DegenerateSamples,
  FitDiverged,
  WeightsNotNormalized,
  EventOutOfOrder,
  ModelMissing,
  EmptyCategory,
  NoSpeechDetected,
  ProtocolError,
  UnknownTask,
  InvalidArgument,
  Io,
  Parse,
};

std::string_view to_string(Errc code);

// Every module reports failures through this one exception type; the code
// names the failure class and what() carries the context.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace bc
