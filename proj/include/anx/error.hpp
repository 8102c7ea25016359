#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace anx {

enum class Errc {
  // audio
  MalformedContainer,
  UnsupportedEncoding,
  EmptyAudio,
  SignalTooShort,
  // features
  NoVoicedRegion,
  TooFewPeriods,
  NonpositiveAmplitude,
  EmptyTrack,
  // ingest / dataset
  DimensionMismatch,
  DuplicateId,
  EmptyFile,
  NonFiniteValue,
  EmptySequence,
  MissingId,
  ScoreOutOfRange,
  MalformedLine,
  EmptyClass,
  // learners / metrics
  SingleClass,
  NonpositiveWeight,
  WrongModelKind,
  NoPositives,
  NumericFailure,
  // synth / pipeline
  InvalidSpec,
  InvalidInput,
  IoFailure,
  ConfigError,
  MissingInput,
};

std::string_view errc_name(Errc code) noexcept;

/// Single exception type for the library. `line()` is set for errors that
/// point at a 1-based line of a JSONL input.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::optional<std::size_t> line = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  Errc code_;
  std::optional<std::size_t> line_;
};

[[noreturn]] void fail(Errc code, const std::string& what,
                       std::optional<std::size_t> line = std::nullopt);

}  // namespace anx
