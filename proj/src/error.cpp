#include "bc/error.hpp"

namespace bc {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NotWav: return "NotWav";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::InvalidWindow: return "InvalidWindow";
    case Errc::EmptyUtterance: return "EmptyUtterance";
    case Errc::NonMonotonicTime: return "NonMonotonicTime";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InsufficientNegatives: return "InsufficientNegatives";
    case Errc::DidNotConverge: return "DidNotConverge";
    case Errc::SingleClass: return "SingleClass";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::DegenerateSamples: return "DegenerateSamples";
    case Errc::FitDiverged: return "FitDiverged";
    case Errc::WeightsNotNormalized: return "WeightsNotNormalized";
    case Errc::EventOutOfOrder: return "EventOutOfOrder";
    case Errc::ModelMissing: return "ModelMissing";
    case Errc::EmptyCategory: return "EmptyCategory";
    case Errc::NoSpeechDetected: return "NoSpeechDetected";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::UnknownTask: return "UnknownTask";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace bc
