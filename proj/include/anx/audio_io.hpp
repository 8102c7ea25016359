#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace anx {

/// Rate every feature extractor assumes.
inline constexpr int kCanonicalRate = 16000;

/// Mono audio with amplitudes nominally in [-1, 1].
struct Signal {
  std::vector<double> samples;
  int sample_rate = kCanonicalRate;

  std::size_t size() const noexcept { return samples.size(); }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
  friend bool operator==(const Signal&, const Signal&) = default;
};

enum class Window { rect, hann };

/// Equal-length (optionally windowed) blocks cut from a Signal.
struct FrameSeq {
  std::vector<std::vector<double>> frames;
  std::size_t frame_len = 0;
  std::size_t hop = 1;
  int sample_rate = kCanonicalRate;
  Window window = Window::rect;

  std::size_t size() const noexcept { return frames.size(); }
  /// First sample index covered by frame i.
  std::size_t start(std::size_t i) const noexcept { return i * hop; }
};

enum class WavEncoding { pcm16, float32 };

/// Reads a RIFF/WAVE file: PCM16 or IEEE float32, mono or stereo.
/// Stereo is downmixed by per-sample channel mean; PCM16 is scaled by 1/32768.
Signal read_wav(const std::filesystem::path& path);

/// Writes a mono WAV. PCM16 encoding rounds s*32768 and clamps to the int16 range.
void write_wav(const std::filesystem::path& path, const Signal& signal,
               WavEncoding encoding = WavEncoding::pcm16);

/// Decodes a WAV image already in memory.
Signal decode_wav(const std::vector<unsigned char>& bytes);
std::vector<unsigned char> encode_wav(const Signal& signal, WavEncoding encoding,
                                      int channels = 1);

/// Band-limited resampling with a 64-tap Kaiser-windowed sinc (beta 8.6).
/// Output length is round(N * target / source); identity when rates match.
Signal resample(const Signal& signal, int target_rate);

/// Number of full frames: floor((n - len) / hop) + 1 when n >= len, else 0.
std::size_t frame_count(std::size_t n, std::size_t frame_len, std::size_t hop) noexcept;

/// Cuts `signal` into frames of round(frame_len_ms) / round(hop_ms) samples.
/// Trailing partial frames are dropped. Throws SignalTooShort if no frame fits.
FrameSeq frame(const Signal& signal, double frame_len_ms, double hop_ms, Window window);

/// w[n] = 0.5 - 0.5 cos(2 pi n / (L - 1)).
std::vector<double> hann_window(std::size_t length);

}  // namespace anx
