#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anx/audio_io.hpp"
#include "anx/dataset.hpp"
#include "anx/representation_ingest.hpp"

namespace anx {

/// Parameters of a period-by-period harmonic voice.
struct VoiceSpec {
  double f0_mean = 150.0;
  double jitter_pct = 0.0;   // expected jitter_local, in percent
  double shimmer_pct = 0.0;  // peak amplitude perturbation, in percent
  double snr_db = std::numeric_limits<double>::infinity();
  double duration_s = 1.0;
  int n_harmonics = 10;
  std::uint64_t seed = 0;
};

/// Pulse i is followed by a period of rate / f0 * (1 + 1.5 * jitter_pct / 100 * u_i) and has
/// amplitude 1 + shimmer_pct / 100 * v_i, with u, v ~ U(-1, 1). Harmonics
/// roll off as 1/k and stop below Nyquist. Gaussian noise sets the SNR;
/// the result is peak-normalized to 0.9. Throws InvalidSpec.
Signal synth_voice(const VoiceSpec& spec);

/// Expected jitter_local and shimmer (dB) of the generator, to first order.
double expected_jitter_local(const VoiceSpec& spec) noexcept;
double expected_shimmer_db(const VoiceSpec& spec) noexcept;

struct SynthDatasetSpec {
  std::size_t n = 200;
  VoiceSpec base;                    // class-0 voice; f0_mean is the class-0 centre
  double f0_spread_st = 2.5;         // per-recording f0 offset ~ U(-spread, +spread) semitones
  double class1_f0_shift_st = 4.0;   // added to class-1 recordings
  double jitter_range_pct[2] = {0.5, 2.0};
  double shimmer_range_pct[2] = {1.0, 5.0};
  double snr_range_db[2] = {15.0, 35.0};
  double duration_range_s[2] = {60.0, 120.0};
  int class0_scores[2] = {0, 4};
  int class1_scores[2] = {5, 21};
  std::uint64_t seed = 0;
};

struct SynthRecording {
  ManifestEntry entry;
  VoiceSpec voice;
  int label = 0;
};

/// Recording i belongs to class i % 2. Per-recording seeds derive from spec.seed.
std::vector<SynthRecording> plan_synth_dataset(const SynthDatasetSpec& spec);

/// Writes <out_dir>/audio/<id>.wav and <out_dir>/manifest.jsonl. Throws IoFailure.
Manifest synth_dataset(const SynthDatasetSpec& spec, const std::filesystem::path& out_dir);

/// Class-conditional Gaussian embeddings: unit noise in every coordinate and
/// the class means separated by `separation` along the first `informative` axes.
EmbeddingSet synth_embeddings(std::span<const ManifestEntry> manifest, std::size_t dim, std::size_t informative,
                              double separation, std::uint64_t seed);

}  // namespace anx
