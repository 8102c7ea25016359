#include "anx/dsp_features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "anx/error.hpp"
#include "anx/fft.hpp"

namespace anx {

namespace {

constexpr double kLoudnessFloorDb = -80.0;
constexpr double kHnrMinDb = -10.0;
constexpr double kHnrMaxDb = 40.0;
constexpr double kTinyPower = 1e-30;

double db_power(double p) { return 10.0 * std::log10(std::max(p, kTinyPower)); }

struct Peak {
  double position = 0.0;
  double value = 0.0;
};

// Vertex of the parabola through (-1, a), (0, b), (1, c), offset from the middle sample.
Peak parabolic(double a, double b, double c) {
  const double denom = a - 2.0 * b + c;
  if (denom >= 0.0) return {0.0, b};
  const double delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  return {delta, b - 0.25 * (a - c) * delta};
}

// Normalized autocorrelation r(lag) = sum x[n] x[n+lag] / sqrt(E[0, L-lag) E[lag, L)).
std::vector<double> normalized_autocorrelation(std::span<const double> x, std::size_t max_lag) {
  const auto ac = autocorrelation(x, max_lag);
  std::vector<double> cum(x.size() + 1, 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) cum[n + 1] = cum[n] + x[n] * x[n];
  std::vector<double> r(max_lag + 1, 0.0);
  const std::size_t len = x.size();
  for (std::size_t lag = 0; lag <= max_lag && lag < len; ++lag) {
    const double e1 = cum[len - lag];
    const double e2 = cum[len] - cum[lag];
    const double denom = std::sqrt(e1 * e2);
    r[lag] = denom > 0.0 ? ac[lag] / denom : 0.0;
  }
  return r;
}

double window_rms(const FrameSeq& fs) {
  if (fs.window == Window::rect) return 1.0;
  const auto w = hann_window(fs.frame_len);
  double acc = 0.0;
  for (double v : w) acc += v * v;
  return std::sqrt(acc / static_cast<double>(w.size()));
}

double percentile_sorted(const std::vector<double>& sorted, double q) {
  const double rank = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

// f0 of the frame whose centre is nearest to `pos`.
double f0_at(const F0Track& t, double pos) {
  const double centre_offset = static_cast<double>(t.frame_len) / 2.0;
  const double idx = std::round((pos - centre_offset) / static_cast<double>(t.hop));
  const auto i = static_cast<std::size_t>(std::clamp(idx, 0.0, static_cast<double>(t.size() - 1)));
  return t.f0[i];
}

std::size_t argmax_in(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
  std::size_t best = lo;
  for (std::size_t i = lo + 1; i <= hi; ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

Peak refine_sample_peak(const std::vector<double>& x, std::size_t i) {
  if (i == 0 || i + 1 >= x.size()) return {static_cast<double>(i), x[i]};
  const Peak p = parabolic(x[i - 1], x[i], x[i + 1]);
  return {static_cast<double>(i) + p.position, p.value};
}

}  // namespace

std::size_t F0Track::voiced_count() const noexcept {
  return static_cast<std::size_t>(std::count(voiced.begin(), voiced.end(), true));
}

std::optional<Emotion> parse_emotion(std::string_view name) noexcept {
  if (name == "anger") return Emotion::anger;
  if (name == "fear") return Emotion::fear;
  if (name == "joy") return Emotion::joy;
  if (name == "love") return Emotion::love;
  if (name == "sadness") return Emotion::sadness;
  return std::nullopt;
}

std::optional<Sentiment> parse_sentiment(std::string_view name) noexcept {
  if (name == "negative") return Sentiment::negative;
  if (name == "positive") return Sentiment::positive;
  return std::nullopt;
}

const std::array<std::string, kFeatureDim>& feature_names() {
  static const std::array<std::string, kFeatureDim> names = [] {
    constexpr std::array<std::string_view, kLldCount> llds = {
        "F0_semitone",          "loudness_dB",          "jitter_local",
        "shimmer_dB",           "HNR_dB",               "spectral_centroid_Hz",
        "spectral_slope_0_500", "alpha_ratio_dB",       "hammarberg_dB"};
    constexpr std::array<std::string_view, kFunctionalCount> funcs = {
        "mean", "std", "p20", "p50", "p80", "range_p20_p80"};
    std::array<std::string, kFeatureDim> out;
    std::size_t k = 0;
    for (auto lld : llds) {
      for (auto f : funcs) out[k++] = fmt::format("{}_{}", lld, f);
    }
    out[k++] = "emotion_id";
    out[k++] = "sentiment_id";
    return out;
  }();
  return names;
}

double hz_to_semitone(double hz) noexcept { return 12.0 * std::log2(hz / 27.5); }

F0Track estimate_f0(const FrameSeq& fs, const PitchConfig& cfg) {
  F0Track t;
  t.frame_len = fs.frame_len;
  t.hop = fs.hop;
  t.sample_rate = fs.sample_rate;
  t.f0.assign(fs.size(), 0.0);
  t.voiced.assign(fs.size(), false);
  t.peak_corr.assign(fs.size(), 0.0);

  const double rate = static_cast<double>(fs.sample_rate);
  const auto min_lag = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(rate / cfg.f0_max)));
  const auto max_lag = std::min<std::size_t>(static_cast<std::size_t>(std::ceil(rate / cfg.f0_min)),
                                             fs.frame_len > 2 ? fs.frame_len - 2 : 0);
  if (max_lag <= min_lag) return t;

  // Per frame: admissible local maxima (lag, peak) and the index chosen in pass one.
  std::vector<std::vector<std::pair<double, Peak>>> candidates(fs.size());
  std::vector<std::size_t> chosen(fs.size(), 0);
  std::vector<double> best(fs.size(), -1.0);
  std::vector<char> loud(fs.size(), 0);

  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto& x = fs.frames[i];
    double energy = 0.0;
    for (double v : x) energy += v * v;
    if (energy <= 0.0) continue;
    loud[i] = std::sqrt(energy / static_cast<double>(x.size())) >= cfg.rms_floor;

    const auto r = normalized_autocorrelation(x, max_lag + 1);
    auto& maxima = candidates[i];
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] > r[lag + 1]) {
        const Peak p = parabolic(r[lag - 1], r[lag], r[lag + 1]);
        maxima.emplace_back(static_cast<double>(lag) + p.position, p);
        best[i] = std::max(best[i], p.value);
      }
    }
    if (maxima.empty()) continue;

    // Shortest lag whose peak is within 5% of the best one; multiples of the
    // true period correlate almost as well on steady voicing.
    chosen[i] = static_cast<std::size_t>(std::find_if(maxima.begin(), maxima.end(),
                                                      [&](const auto& m) { return m.second.value >= 0.95 * best[i]; }) -
                                         maxima.begin());
  }

  auto f0_of = [&](std::size_t i, std::size_t c) { return rate / candidates[i][c].first; };
  auto admissible = [&](std::size_t i, std::size_t c) {
    const double f0 = f0_of(i, c);
    return loud[i] && candidates[i][c].second.value >= cfg.voicing_threshold && f0 >= cfg.f0_min && f0 <= cfg.f0_max;
  };

  // Octave-down correction: a frame may switch to a shorter-lag candidate
  // (peak >= 80% of its best) that lies closer to the median voiced pitch.
  std::vector<double> log_f0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (!candidates[i].empty() && admissible(i, chosen[i])) log_f0.push_back(std::log2(f0_of(i, chosen[i])));
  }
  if (!log_f0.empty()) {
    std::nth_element(log_f0.begin(), log_f0.begin() + static_cast<std::ptrdiff_t>(log_f0.size() / 2), log_f0.end());
    const double centre = log_f0[log_f0.size() / 2];
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (candidates[i].empty()) continue;
      double dist = std::abs(std::log2(f0_of(i, chosen[i])) - centre);
      for (std::size_t c = 0; c < chosen[i]; ++c) {
        if (candidates[i][c].second.value < 0.8 * best[i] || !admissible(i, c)) continue;
        const double d = std::abs(std::log2(f0_of(i, c)) - centre);
        if (d < dist - 0.25) {
          dist = d;
          chosen[i] = c;
        }
      }
    }
  }

  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (candidates[i].empty()) continue;
    const std::size_t c = chosen[i];
    t.peak_corr[i] = std::min(candidates[i][c].second.value, 1.0);
    if (admissible(i, c)) {
      t.voiced[i] = true;
      t.f0[i] = f0_of(i, c);
    }
  }
  return t;
}

PeriodTrack period_analysis(const Signal& s, const F0Track& t) {
  if (t.voiced_count() == 0) fail(Errc::NoVoicedRegion, "pitch track has no voiced frames");

  PeriodTrack out;
  const double rate = static_cast<double>(t.sample_rate);
  const auto& x = s.samples;

  std::size_t i = 0;
  while (i < t.size()) {
    if (!t.voiced[i]) {
      ++i;
      continue;
    }
    const std::size_t first_frame = i;
    std::size_t j = i;
    while (j + 1 < t.size() && t.voiced[j + 1]) ++j;
    const std::size_t region_begin = first_frame * t.hop;
    const std::size_t region_end = std::min(x.size(), j * t.hop + t.frame_len);  // exclusive
    i = j + 1;

    const double first_period = rate / t.f0[first_frame];
    const auto first_hi = static_cast<std::size_t>(static_cast<double>(region_begin) + first_period);
    if (first_hi >= region_end) continue;
    std::size_t k = argmax_in(x, region_begin, first_hi);
    Peak prev = refine_sample_peak(x, k);

    while (true) {
      const double f0 = f0_at(t, prev.position);
      const double expected = rate / (f0 > 0.0 ? f0 : t.f0[j]);
      const auto lo = static_cast<std::size_t>(std::ceil(prev.position + 0.75 * expected));
      const auto hi = static_cast<std::size_t>(std::floor(prev.position + 1.25 * expected));
      if (hi >= region_end || lo > hi) break;
      k = argmax_in(x, lo, hi);
      const Peak next = refine_sample_peak(x, k);
      out.periods.push_back(next.position - prev.position);
      out.amplitudes.push_back(std::abs(prev.value));
      out.onsets.push_back(prev.position);
      prev = next;
    }
  }
  return out;
}

double jitter_local(std::span<const double> periods) {
  if (periods.size() < 2) fail(Errc::TooFewPeriods, fmt::format("{} periods, need 2", periods.size()));
  double diff = 0.0;
  for (std::size_t i = 0; i + 1 < periods.size(); ++i) diff += std::abs(periods[i + 1] - periods[i]);
  const double mean_diff = diff / static_cast<double>(periods.size() - 1);
  const double mean_period =
      std::accumulate(periods.begin(), periods.end(), 0.0) / static_cast<double>(periods.size());
  return mean_diff / mean_period;
}

double shimmer_db(std::span<const double> amplitudes) {
  if (amplitudes.size() < 2) fail(Errc::TooFewPeriods, fmt::format("{} amplitudes, need 2", amplitudes.size()));
  for (double a : amplitudes) {
    if (!(a > 0.0)) fail(Errc::NonpositiveAmplitude, fmt::format("amplitude {}", a));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < amplitudes.size(); ++i) {
    acc += std::abs(20.0 * std::log10(amplitudes[i + 1] / amplitudes[i]));
  }
  return acc / static_cast<double>(amplitudes.size() - 1);
}

std::vector<FrameDescriptor> frame_descriptors(const FrameSeq& fs, const F0Track& t) {
  if (t.size() != fs.size()) {
    fail(Errc::DimensionMismatch, fmt::format("{} frames but pitch track has {}", fs.size(), t.size()));
  }
  const double rate = static_cast<double>(fs.sample_rate);
  const std::size_t nfft = next_pow2(fs.frame_len);
  const double bin_hz = rate / static_cast<double>(nfft);
  const double gain = window_rms(fs);

  std::vector<FrameDescriptor> out(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    FrameDescriptor& d = out[i];
    const double r = std::clamp(t.peak_corr[i], 1e-12, 1.0 - 1e-12);
    d.hnr_db = std::clamp(10.0 * std::log10(r / (1.0 - r)), kHnrMinDb, kHnrMaxDb);

    const auto& x = fs.frames[i];
    double energy = 0.0;
    for (double v : x) energy += v * v;
    const double rms = std::sqrt(energy / static_cast<double>(x.size())) / gain;
    if (!(rms > 0.0)) continue;  // digital silence keeps the floor values
    const double loud = 20.0 * std::log10(rms);
    d.loudness_db = std::max(loud, kLoudnessFloorDb);
    d.silent = loud <= kLoudnessFloorDb;
    if (d.silent) continue;

    const auto p = power_spectrum(x, nfft);
    double total = 0.0, weighted = 0.0;
    double low_band = 0.0, high_band = 0.0;
    double max_low = 0.0, max_high = 0.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n_slope = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      total += p[k];
      weighted += f * p[k];
      if (f >= 50.0 && f < 1000.0) low_band += p[k];
      if (f >= 1000.0 && f <= 5000.0) high_band += p[k];
      if (f <= 2000.0) max_low = std::max(max_low, p[k]);
      if (f > 2000.0 && f <= 5000.0) max_high = std::max(max_high, p[k]);
      if (f <= 500.0) {
        const double y = db_power(p[k]);
        sx += f;
        sy += y;
        sxx += f * f;
        sxy += f * y;
        ++n_slope;
      }
    }
    d.spectral_centroid_hz = total > 0.0 ? weighted / total : 0.0;
    const double nn = static_cast<double>(n_slope);
    const double var_f = sxx - sx * sx / nn;
    d.spectral_slope_0_500 = n_slope >= 2 && var_f > 0.0 ? (sxy - sx * sy / nn) / var_f : 0.0;
    d.alpha_ratio_db = db_power(low_band) - db_power(high_band);
    d.hammarberg_db = db_power(max_low) - db_power(max_high);
  }
  return out;
}

Functionals functionals(std::span<const double> track) {
  if (track.empty()) fail(Errc::EmptyTrack, "functionals of an empty track");
  const double n = static_cast<double>(track.size());
  const double mean = std::accumulate(track.begin(), track.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : track) ss += (v - mean) * (v - mean);
  std::vector<double> sorted(track.begin(), track.end());
  std::sort(sorted.begin(), sorted.end());
  Functionals f;
  f.mean = mean;
  f.std = std::sqrt(ss / n);
  f.p20 = percentile_sorted(sorted, 0.2);
  f.p50 = percentile_sorted(sorted, 0.5);
  f.p80 = percentile_sorted(sorted, 0.8);
  f.range_p20_p80 = f.p80 - f.p20;
  return f;
}

FeatureVector extract_feature_vector(const Signal& input, const std::optional<Annotation>& annotation,
                                     const PitchConfig& cfg) {
  if (input.samples.empty()) fail(Errc::EmptyAudio, "empty signal");
  const Signal s = input.sample_rate == kCanonicalRate ? input : resample(input, kCanonicalRate);

  const FrameSeq raw = frame(s, cfg.frame_ms, cfg.hop_ms, Window::rect);
  const FrameSeq windowed = frame(s, cfg.frame_ms, cfg.hop_ms, Window::hann);
  const F0Track track = estimate_f0(raw, cfg);
  const auto desc = frame_descriptors(windowed, track);

  // Per-frame jitter / shimmer from the periods lying fully inside each voiced frame.
  std::vector<double> jitter_track, shimmer_track;
  if (track.voiced_count() > 0) {
    const PeriodTrack periods = period_analysis(s, track);
    std::size_t first = 0;
    for (std::size_t f = 0; f < track.size(); ++f) {
      const double begin = static_cast<double>(f * track.hop);
      const double end = begin + static_cast<double>(track.frame_len);
      while (first < periods.size() && periods.onsets[first] < begin) ++first;
      if (!track.voiced[f]) continue;
      std::vector<double> per, amp;
      for (std::size_t k = first; k < periods.size() && periods.onsets[k] + periods.periods[k] <= end; ++k) {
        per.push_back(periods.periods[k]);
        amp.push_back(periods.amplitudes[k]);
      }
      if (per.size() < 2) continue;
      jitter_track.push_back(jitter_local(per));
      if (std::all_of(amp.begin(), amp.end(), [](double a) { return a > 0.0; })) {
        shimmer_track.push_back(shimmer_db(amp));
      }
    }
  }

  std::vector<double> f0_track, hnr_track;
  for (std::size_t f = 0; f < track.size(); ++f) {
    if (!track.voiced[f]) continue;
    f0_track.push_back(hz_to_semitone(track.f0[f]));
    hnr_track.push_back(desc[f].hnr_db);
  }

  // Loudness and spectral descriptors skip frames at the silence floor; if the
  // whole recording is silent they fall back to every frame.
  std::vector<double> loud, centroid, slope, alpha, hammar;
  const bool any_sound = std::any_of(desc.begin(), desc.end(), [](const auto& d) { return !d.silent; });
  for (const auto& d : desc) {
    if (any_sound && d.silent) continue;
    loud.push_back(d.loudness_db);
    centroid.push_back(d.spectral_centroid_hz);
    slope.push_back(d.spectral_slope_0_500);
    alpha.push_back(d.alpha_ratio_db);
    hammar.push_back(d.hammarberg_db);
  }

  FeatureVector fv;
  std::size_t k = 0;
  auto put = [&](const std::vector<double>& lld) {
    Functionals f;  // zero sentinel when the track is empty
    if (!lld.empty()) f = functionals(lld);
    for (double v : {f.mean, f.std, f.p20, f.p50, f.p80, f.range_p20_p80}) fv.values[k++] = v;
  };
  put(f0_track);
  put(loud);
  put(jitter_track);
  put(shimmer_track);
  put(hnr_track);
  put(centroid);
  put(slope);
  put(alpha);
  put(hammar);
  if (annotation) {
    fv.values[k++] = static_cast<double>(annotation->emotion);
    fv.values[k++] = static_cast<double>(annotation->sentiment);
    fv.annotation_present = true;
  } else {
    fv.values[k++] = 0.0;
    fv.values[k++] = 0.0;
  }
  for (double v : fv.values) {
    if (!std::isfinite(v)) fail(Errc::NumericFailure, "non-finite feature value");
  }
  return fv;
}

void write_feature_csv(std::ostream& out, std::span<const FeatureRow> rows) {
  out << "id";
  for (const auto& name : feature_names()) out << ',' << name;
  out << '\n';
  for (const auto& row : rows) {
    out << row.id;
    for (double v : row.features.values) out << ',' << fmt::format("{:.9g}", v);
    out << '\n';
  }
}

std::vector<FeatureRow> read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(Errc::EmptyFile, "feature CSV has no header");
  {
    std::stringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');
    for (const auto& name : feature_names()) {
      if (!std::getline(header, cell, ',') || cell != name) {
        fail(Errc::MalformedLine, fmt::format("header mismatch at '{}'", name), 1);
      }
    }
  }
  std::vector<FeatureRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    FeatureRow row;
    std::getline(ss, row.id, ',');
    std::string cell;
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      if (!std::getline(ss, cell, ',')) fail(Errc::DimensionMismatch, "too few columns", line_no);
      try {
        row.features.values[k] = std::stod(cell);
      } catch (const std::exception&) {
        fail(Errc::MalformedLine, fmt::format("bad number '{}'", cell), line_no);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace anx
