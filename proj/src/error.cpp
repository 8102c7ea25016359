#include "anx/error.hpp"

#include <fmt/format.h>

namespace anx {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedContainer: return "MalformedContainer";
    case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
    case Errc::EmptyAudio: return "EmptyAudio";
    case Errc::SignalTooShort: return "SignalTooShort";
    case Errc::NoVoicedRegion: return "NoVoicedRegion";
    case Errc::TooFewPeriods: return "TooFewPeriods";
    case Errc::NonpositiveAmplitude: return "NonpositiveAmplitude";
    case Errc::EmptyTrack: return "EmptyTrack";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::EmptyFile: return "EmptyFile";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::MissingId: return "MissingId";
    case Errc::ScoreOutOfRange: return "ScoreOutOfRange";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::SingleClass: return "SingleClass";
    case Errc::NonpositiveWeight: return "NonpositiveWeight";
    case Errc::WrongModelKind: return "WrongModelKind";
    case Errc::NoPositives: return "NoPositives";
    case Errc::NumericFailure: return "NumericFailure";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::IoFailure: return "IoFailure";
    case Errc::ConfigError: return "ConfigError";
    case Errc::MissingInput: return "MissingInput";
  }
  return "Unknown";
}

namespace {

std::string decorate(Errc code, const std::string& what, std::optional<std::size_t> line) {
  if (line) return fmt::format("{} (line {}): {}", errc_name(code), *line, what);
  return fmt::format("{}: {}", errc_name(code), what);
}

}  // namespace

Error::Error(Errc code, const std::string& what, std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, what, line)), code_(code), line_(line) {}

void fail(Errc code, const std::string& what, std::optional<std::size_t> line) {
  throw Error(code, what, line);
}

}  // namespace anx
