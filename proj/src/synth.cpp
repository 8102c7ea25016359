#include "anx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "anx/error.hpp"

namespace anx {

namespace {

// Jitter perturbations are scaled so that E|u_{i+1} - u_i| (= 2/3 for U(-1, 1))
// times the scale equals 1, i.e. jitter_pct is the expected jitter_local.
constexpr double kJitterScale = 1.5;

void validate(const VoiceSpec& s) {
  if (!(s.f0_mean >= 55.0 && s.f0_mean <= 1000.0)) fail(Errc::InvalidSpec, fmt::format("f0_mean {} outside [55, 1000]", s.f0_mean));
  if (!(s.jitter_pct >= 0.0) || !(s.shimmer_pct >= 0.0)) fail(Errc::InvalidSpec, "jitter and shimmer must be >= 0");
  if (kJitterScale * s.jitter_pct >= 100.0 || s.shimmer_pct >= 100.0) fail(Errc::InvalidSpec, "perturbation too large");
  if (!(s.duration_s > 0.0)) fail(Errc::InvalidSpec, "duration must be positive");
  if (s.n_harmonics < 1) fail(Errc::InvalidSpec, "need at least one harmonic");
  if (std::isnan(s.snr_db)) fail(Errc::InvalidSpec, "snr_db is NaN");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint64_t, 1> out{};
  seq.generate(reinterpret_cast<std::uint32_t*>(out.data()), reinterpret_cast<std::uint32_t*>(out.data()) + 2);
  return out[0];
}

}  // namespace

double expected_jitter_local(const VoiceSpec& spec) noexcept { return spec.jitter_pct / 100.0; }

double expected_shimmer_db(const VoiceSpec& spec) noexcept {
  // E|20 log10((1 + s v') / (1 + s v))| ~= 20 / ln 10 * s * E|v' - v|, E|v' - v| = 2/3.
  return 20.0 / std::numbers::ln10 * (spec.shimmer_pct / 100.0) * (2.0 / 3.0);
}

Signal synth_voice(const VoiceSpec& spec) {
  validate(spec);
  const double rate = static_cast<double>(kCanonicalRate);
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * rate));
  const double period = rate / spec.f0_mean;
  const double jitter = kJitterScale * spec.jitter_pct / 100.0;
  const double shimmer = spec.shimmer_pct / 100.0;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  // Pulse i peaks at t_i and owns [t_i - T_{i-1} / 2, t_i + T_i / 2): the
  // phase runs over T_{i-1} before the peak and T_i after it, so peak spacing
  // is exactly T_i and each peak carries one amplitude.
  std::vector<double> peaks, lens, amps;
  for (double t = 0.0; t < static_cast<double>(n) + period;) {
    peaks.push_back(t);
    lens.push_back(period * (1.0 + jitter * unit(rng)));
    amps.push_back(1.0 + shimmer * unit(rng));
    t += lens.back();
  }
  // Fixed harmonic count below Nyquist for the shortest possible period.
  const double shortest = period * (1.0 - jitter);
  int harmonics = 0;
  while (harmonics < spec.n_harmonics && (harmonics + 1) * rate / shortest < rate / 2.0) ++harmonics;
  harmonics = std::max(harmonics, 1);

  Signal s;
  s.sample_rate = kCanonicalRate;
  s.samples.assign(n, 0.0);
  std::size_t i = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto tt = static_cast<double>(t);
    while (i + 1 < peaks.size() && tt >= peaks[i] + lens[i] / 2.0) ++i;
    const double tau = tt - peaks[i];
    const double len = tau < 0.0 && i > 0 ? lens[i - 1] : lens[i];
    const double phase = 2.0 * std::numbers::pi * tau / len;
    double v = 0.0;
    for (int k = 1; k <= harmonics; ++k) v += std::cos(k * phase) / k;
    s.samples[t] = amps[i] * v;
  }

  if (std::isfinite(spec.snr_db)) {
    double power = 0.0;
    for (double v : s.samples) power += v * v;
    power /= static_cast<double>(std::max<std::size_t>(1, n));
    const double noise_sd = std::sqrt(power / std::pow(10.0, spec.snr_db / 10.0));
    std::normal_distribution<double> noise(0.0, noise_sd);
    for (double& v : s.samples) v += noise(rng);
  }

  double peak = 0.0;
  for (double v : s.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : s.samples) v *= 0.9 / peak;
  }
  return s;
}

std::vector<SynthRecording> plan_synth_dataset(const SynthDatasetSpec& spec) {
  if (spec.n < 4) fail(Errc::InvalidSpec, "synthetic dataset needs n >= 4");
  for (const auto* r : {spec.class0_scores, spec.class1_scores}) {
    if (r[0] > r[1] || r[0] < 0 || r[1] > kGad7Max) fail(Errc::InvalidSpec, "bad score range");
  }
  if (gad7_label(spec.class0_scores[1]) != 0 || gad7_label(spec.class1_scores[0]) != 1) {
    fail(Errc::InvalidSpec, "score ranges disagree with their classes");
  }
  validate(spec.base);
  if (!(spec.f0_spread_st >= 0.0)) fail(Errc::InvalidSpec, "f0_spread_st must be >= 0");
  for (const auto* r : {spec.jitter_range_pct, spec.shimmer_range_pct, spec.snr_range_db, spec.duration_range_s}) {
    if (!(r[0] <= r[1])) fail(Errc::InvalidSpec, "range needs lo <= hi");
  }
  VoiceSpec extreme = spec.base;
  extreme.jitter_pct = spec.jitter_range_pct[1];
  extreme.shimmer_pct = spec.shimmer_range_pct[1];
  extreme.duration_s = spec.duration_range_s[0];
  validate(extreme);
  if (!(spec.jitter_range_pct[0] >= 0.0 && spec.shimmer_range_pct[0] >= 0.0)) fail(Errc::InvalidSpec, "negative perturbation");
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&](const double (&r)[2]) { return std::uniform_real_distribution<double>(r[0], r[1])(rng); };

  std::vector<SynthRecording> out;
  out.reserve(spec.n);
  const int width = static_cast<int>(std::to_string(spec.n - 1).size());
  for (std::size_t i = 0; i < spec.n; ++i) {
    SynthRecording rec;
    rec.label = static_cast<int>(i % 2);
    const int* scores = rec.label == 0 ? spec.class0_scores : spec.class1_scores;
    rec.entry.id = fmt::format("synth_{:0{}}", i, width);
    rec.entry.gad7 = std::uniform_int_distribution<int>(scores[0], scores[1])(rng);
    rec.entry.audio_path = fmt::format("audio/{}.wav", rec.entry.id);

    rec.voice = spec.base;
    const double offset = std::uniform_real_distribution<double>(-spec.f0_spread_st, spec.f0_spread_st)(rng) +
                          (rec.label == 1 ? spec.class1_f0_shift_st : 0.0);
    rec.voice.f0_mean = std::clamp(spec.base.f0_mean * std::pow(2.0, offset / 12.0), 55.0, 1000.0);
    rec.voice.jitter_pct = uniform(spec.jitter_range_pct);
    rec.voice.shimmer_pct = uniform(spec.shimmer_range_pct);
    rec.voice.snr_db = uniform(spec.snr_range_db);
    rec.voice.duration_s = uniform(spec.duration_range_s);
    rec.voice.seed = derive_seed(spec.seed, i);
    out.push_back(std::move(rec));
  }
  return out;
}

Manifest synth_dataset(const SynthDatasetSpec& spec, const std::filesystem::path& out_dir) {
  const auto plan = plan_synth_dataset(spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "audio", ec);
  if (ec) fail(Errc::IoFailure, fmt::format("cannot create {}: {}", (out_dir / "audio").string(), ec.message()));
  Manifest manifest;
  manifest.reserve(plan.size());
  for (const auto& rec : plan) {
    write_wav(out_dir / *rec.entry.audio_path, synth_voice(rec.voice), WavEncoding::float32);
    manifest.push_back(rec.entry);
  }
  save_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

EmbeddingSet synth_embeddings(std::span<const ManifestEntry> manifest, std::size_t dim, std::size_t informative,
                              double separation, std::uint64_t seed) {
  if (dim == 0 || informative > dim) fail(Errc::InvalidSpec, "informative axes must fit in dim > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  EmbeddingSet set(dim);
  for (const auto& e : manifest) {
    const double shift = (gad7_label(e.gad7) == 1 ? 0.5 : -0.5) * separation;
    std::vector<double> v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = noise(rng) + (k < informative ? shift : 0.0);
    set.add({e.id, std::move(v)});
  }
  return set;
}

}  // namespace anx
