#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anx/audio_io.hpp"

namespace anx {

/// Pitch tracker settings. Defaults follow common GeMAPS practice.
struct PitchConfig {
  double frame_ms = 40.0;
  double hop_ms = 10.0;
  double f0_min = 55.0;
  double f0_max = 1000.0;
  double voicing_threshold = 0.45;
  double rms_floor = 1e-4;
};

/// Per-frame fundamental frequency. f0 is 0 on unvoiced frames.
/// `peak_corr` keeps the normalized autocorrelation peak of every frame
/// (also unvoiced ones); HNR is derived from it.
struct F0Track {
  std::vector<double> f0;
  std::vector<bool> voiced;
  std::vector<double> peak_corr;
  std::size_t frame_len = 0;
  std::size_t hop = 1;
  int sample_rate = kCanonicalRate;

  std::size_t size() const noexcept { return f0.size(); }
  std::size_t voiced_count() const noexcept;
};

/// Consecutive pitch periods (samples) with the peak amplitude at the start of each.
/// `onsets` holds the sub-sample position of each period's starting peak.
struct PeriodTrack {
  std::vector<double> periods;
  std::vector<double> amplitudes;
  std::vector<double> onsets;

  std::size_t size() const noexcept { return periods.size(); }
};

struct FrameDescriptor {
  double loudness_db = -80.0;
  double hnr_db = -10.0;
  double spectral_centroid_hz = 0.0;
  double spectral_slope_0_500 = 0.0;
  double alpha_ratio_db = 0.0;
  double hammarberg_db = 0.0;
  bool silent = true;
};

struct Functionals {
  double mean = 0.0;
  double std = 0.0;
  double p20 = 0.0;
  double p50 = 0.0;
  double p80 = 0.0;
  double range_p20_p80 = 0.0;
};

enum class Emotion { anger = 0, fear = 1, joy = 2, love = 3, sadness = 4 };
enum class Sentiment { negative = 0, positive = 1 };

struct Annotation {
  Emotion emotion = Emotion::anger;
  Sentiment sentiment = Sentiment::negative;
};

std::optional<Emotion> parse_emotion(std::string_view name) noexcept;
std::optional<Sentiment> parse_sentiment(std::string_view name) noexcept;

inline constexpr std::size_t kLldCount = 9;
inline constexpr std::size_t kFunctionalCount = 6;
inline constexpr std::size_t kFeatureDim = kLldCount * kFunctionalCount + 2;
inline constexpr std::string_view kRegistryVersion = "acoustic-56/v1";

/// Ordered feature names: each LLD expanded by {mean, std, p20, p50, p80,
/// range_p20_p80}, followed by emotion_id and sentiment_id.
const std::array<std::string, kFeatureDim>& feature_names();

struct FeatureVector {
  std::array<double, kFeatureDim> values{};
  bool annotation_present = false;
};

F0Track estimate_f0(const FrameSeq& frames, const PitchConfig& cfg = {});

/// Peak-picks one maximum per expected period inside voiced regions
/// (search window +/-25% of rate / f0). Throws NoVoicedRegion.
PeriodTrack period_analysis(const Signal& signal, const F0Track& track);

/// mean |T[i+1] - T[i]| / mean T[i]. Throws TooFewPeriods.
double jitter_local(std::span<const double> periods);
inline double jitter_local(const PeriodTrack& p) { return jitter_local(p.periods); }

/// mean |20 log10(A[i+1] / A[i])|. Throws TooFewPeriods / NonpositiveAmplitude.
double shimmer_db(std::span<const double> amplitudes);
inline double shimmer_db(const PeriodTrack& p) { return shimmer_db(p.amplitudes); }

/// Spectral and energy descriptors per frame. `frames` are normally Hann
/// windowed; loudness is compensated for the window's RMS gain so that a
/// full-scale sine reads -3.01 dB under either window. `track` must share
/// the frame grid.
std::vector<FrameDescriptor> frame_descriptors(const FrameSeq& frames, const F0Track& track);

/// Population std; percentiles interpolate linearly at rank q (n - 1).
Functionals functionals(std::span<const double> track);

/// Full acoustic + annotation vector. Resamples to 16 kHz when needed.
FeatureVector extract_feature_vector(const Signal& signal,
                                     const std::optional<Annotation>& annotation = std::nullopt,
                                     const PitchConfig& cfg = {});

/// Hz -> semitones relative to 27.5 Hz.
double hz_to_semitone(double hz) noexcept;

/// CSV with header `id,<feature names>`; values printed with 9 significant digits.
struct FeatureRow {
  std::string id;
  FeatureVector features;
};
void write_feature_csv(std::ostream& out, std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_feature_csv(std::istream& in);

}  // namespace anx
