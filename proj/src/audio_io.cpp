#include "anx/audio_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string_view>

#include <fmt/format.h>

#include "anx/error.hpp"

namespace anx {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<unsigned char>((v >> shift) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, std::string_view tag) {
  out.insert(out.end(), tag.begin(), tag.end());
}

bool tag_is(const unsigned char* p, std::string_view tag) {
  return std::memcmp(p, tag.data(), 4) == 0;
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

FmtChunk parse_fmt(const unsigned char* p, std::uint32_t size) {
  if (size < 16) fail(Errc::MalformedContainer, "fmt chunk shorter than 16 bytes");
  FmtChunk f;
  f.format = read_u16(p);
  f.channels = read_u16(p + 2);
  f.rate = read_u32(p + 4);
  f.block_align = read_u16(p + 12);
  f.bits = read_u16(p + 14);
  if (f.format == kFormatExtensible) {
    if (size < 40) fail(Errc::MalformedContainer, "extensible fmt chunk too short");
    // The sub-format GUID starts with the plain format tag.
    f.format = read_u16(p + 24);
  }
  return f;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

Signal decode_wav(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 12 || !tag_is(bytes.data(), "RIFF") || !tag_is(bytes.data() + 8, "WAVE")) {
    fail(Errc::MalformedContainer, "missing RIFF/WAVE header");
  }

  std::optional<FmtChunk> fmt_chunk;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      if (tag_is(chunk, "data")) fail(Errc::MalformedContainer, "data chunk runs past end of file");
      break;
    }
    if (tag_is(chunk, "fmt ")) {
      fmt_chunk = parse_fmt(bytes.data() + body, size);
    } else if (tag_is(chunk, "data")) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1u);
  }

  if (!fmt_chunk) fail(Errc::MalformedContainer, "no fmt chunk");
  if (data == nullptr) fail(Errc::MalformedContainer, "no data chunk");
  const FmtChunk& f = *fmt_chunk;
  if (f.rate == 0) fail(Errc::MalformedContainer, "sample rate is zero");
  if (f.channels != 1 && f.channels != 2) {
    fail(Errc::UnsupportedEncoding, fmt::format("{} channels", f.channels));
  }
  const bool pcm16 = f.format == kFormatPcm && f.bits == 16;
  const bool float32 = f.format == kFormatFloat && f.bits == 32;
  if (!pcm16 && !float32) {
    fail(Errc::UnsupportedEncoding, fmt::format("format tag {} with {} bits", f.format, f.bits));
  }

  const std::size_t bytes_per_sample = f.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * f.channels;
  const std::size_t n = data_size / frame_bytes;
  if (n == 0) fail(Errc::EmptyAudio, "data chunk holds no samples");

  Signal out;
  out.sample_rate = static_cast<int>(f.rate);
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < f.channels; ++c) {
      const unsigned char* p = data + i * frame_bytes + c * bytes_per_sample;
      double v;
      if (pcm16) {
        v = static_cast<double>(static_cast<std::int16_t>(read_u16(p))) / 32768.0;
      } else {
        v = static_cast<double>(std::bit_cast<float>(read_u32(p)));
        if (!std::isfinite(v)) fail(Errc::NonFiniteValue, fmt::format("sample {} is not finite", i));
      }
      acc += v;
    }
    out.samples[i] = f.channels == 1 ? acc : acc / 2.0;
  }
  return out;
}

std::vector<unsigned char> encode_wav(const Signal& signal, WavEncoding encoding, int channels) {
  if (channels != 1 && channels != 2) fail(Errc::InvalidInput, "channels must be 1 or 2");
  const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(bits / 8 * channels);
  const auto data_size = static_cast<std::uint32_t>(signal.size() * block);

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, encoding == WavEncoding::pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * block);
  put_u16(out, block);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_size);
  for (double s : signal.samples) {
    for (int c = 0; c < channels; ++c) {
      if (encoding == WavEncoding::pcm16) {
        const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
      } else {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
      }
    }
  }
  return out;
}

Signal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoFailure, fmt::format("cannot open {}", path.string()));
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

void write_wav(const std::filesystem::path& path, const Signal& signal, WavEncoding encoding) {
  const auto bytes = encode_wav(signal, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoFailure, fmt::format("cannot write {}", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::IoFailure, fmt::format("short write to {}", path.string()));
}

Signal resample(const Signal& signal, int target_rate) {
  if (target_rate <= 0) fail(Errc::InvalidInput, "target rate must be positive");
  if (target_rate == signal.sample_rate) return signal;

  constexpr int kHalfTaps = 32;
  constexpr double kBeta = 8.6;
  const double i0_beta = std::cyl_bessel_i(0.0, kBeta);

  const auto src = static_cast<std::int64_t>(signal.sample_rate);
  const auto dst = static_cast<std::int64_t>(target_rate);
  const double ratio = static_cast<double>(dst) / static_cast<double>(src);
  const double cutoff = std::min(1.0, ratio);
  const auto n_in = static_cast<std::int64_t>(signal.size());
  const auto n_out = static_cast<std::int64_t>(std::llround(static_cast<double>(n_in) * ratio));

  Signal out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (std::int64_t m = 0; m < n_out; ++m) {
    // Position of output sample m on the input grid, split into integer and fraction exactly.
    const std::int64_t num = m * src;
    const std::int64_t center = num / dst;
    const double frac = static_cast<double>(num % dst) / static_cast<double>(dst);
    double acc = 0.0;
    for (std::int64_t k = center - kHalfTaps + 1; k <= center + kHalfTaps; ++k) {
      if (k < 0 || k >= n_in) continue;
      const double x = static_cast<double>(center - k) + frac;
      const double u = x / kHalfTaps;
      if (u <= -1.0 || u >= 1.0) continue;
      const double w = std::cyl_bessel_i(0.0, kBeta * std::sqrt(1.0 - u * u)) / i0_beta;
      acc += signal.samples[static_cast<std::size_t>(k)] * cutoff * sinc(cutoff * x) * w;
    }
    out.samples[static_cast<std::size_t>(m)] = acc;
  }
  return out;
}

std::size_t frame_count(std::size_t n, std::size_t frame_len, std::size_t hop) noexcept {
  if (frame_len == 0 || hop == 0 || n < frame_len) return 0;
  return (n - frame_len) / hop + 1;
}

std::vector<double> hann_window(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
  }
  return w;
}

FrameSeq frame(const Signal& signal, double frame_len_ms, double hop_ms, Window window) {
  if (!(hop_ms > 0.0) || frame_len_ms < hop_ms) {
    fail(Errc::InvalidInput, fmt::format("need frame_len_ms >= hop_ms > 0 (got {} / {})", frame_len_ms, hop_ms));
  }
  const double rate = static_cast<double>(signal.sample_rate);
  const auto len = static_cast<std::size_t>(std::llround(frame_len_ms * rate / 1000.0));
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hop_ms * rate / 1000.0)));
  if (len == 0 || signal.size() < len) {
    fail(Errc::SignalTooShort, fmt::format("{} samples, frame needs {}", signal.size(), len));
  }

  FrameSeq fs;
  fs.frame_len = len;
  fs.hop = hop;
  fs.sample_rate = signal.sample_rate;
  fs.window = window;
  const auto w = window == Window::hann ? hann_window(len) : std::vector<double>{};
  const std::size_t count = frame_count(signal.size(), len, hop);
  fs.frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto first = signal.samples.begin() + static_cast<std::ptrdiff_t>(i * hop);
    std::vector<double> f(first, first + static_cast<std::ptrdiff_t>(len));
    if (!w.empty()) {
      for (std::size_t n = 0; n < len; ++n) f[n] *= w[n];
    }
    fs.frames.push_back(std::move(f));
  }
  return fs;
}

}  // namespace anx
