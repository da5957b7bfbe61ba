#include "bc/features.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cmath>
#include <numeric>

#include "bc/dsp.hpp"
#include "bc/error.hpp"

namespace bc {

namespace {

constexpr std::size_t kFftSize = 512;

const dsp::MelFilterbank& filterbank() {
  static const dsp::MelFilterbank fb(kMelBands, kFftSize, kSampleRate, 0.0, kSampleRate / 2.0);
  return fb;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + (s[hi] - s[lo]) * frac;
}

// Appends the 12 functionals of `x`; `last` is the channel-specific 12th value.
void append_functionals(std::vector<double>& out, const std::vector<double>& x, double last) {
  const auto n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  const double sd = std::sqrt(m2);
  const double skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;

  std::vector<double> s = x;
  std::sort(s.begin(), s.end());
  const double q25 = quantile_sorted(s, 0.25);
  const double q75 = quantile_sorted(s, 0.75);

  double slope = 0.0;
  if (x.size() > 1) {
    const double tbar = (n - 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double dt = static_cast<double>(i) - tbar;
      sxy += dt * (x[i] - mean);
      sxx += dt * dt;
    }
    slope = sxy / sxx;
  }

  out.insert(out.end(), {mean, sd, s.front(), s.back(), s.back() - s.front(), quantile_sorted(s, 0.5), q25, q75,
                         q75 - q25, slope, skew, last});
}

double mean_crossing_rate(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  int crossings = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if ((x[i - 1] - mean) * (x[i] - mean) < 0.0) ++crossings;
  }
  return static_cast<double>(crossings) / static_cast<double>(x.size() - 1);
}

std::vector<std::string> build_names() {
  static const char* kStats[] = {"mean", "std", "min", "max", "range", "median",
                                 "q25", "q75", "iqr", "slope", "skewness"};
  std::vector<std::string> channels = {"energy", "f0"};
  for (int i = 0; i < kMfccCount; ++i) channels.push_back("mfcc" + std::to_string(i));
  std::vector<std::string> names;
  for (const auto& ch : channels) {
    for (const char* st : kStats) names.push_back(ch + "." + st);
    names.push_back(ch + (ch == "f0" ? ".voiced_ratio" : ".mean_crossing_rate"));
  }
  names.push_back("duration_ms");
  names.push_back("voiced_frames");
  return names;
}

}  // namespace

PitchEstimate estimate_pitch(std::span<const float> samples, int sample_rate) {
  const std::size_t n = samples.size();
  const auto min_lag = static_cast<std::size_t>(std::ceil(sample_rate / kF0MaxHz));
  const auto max_lag = std::min(static_cast<std::size_t>(std::floor(sample_rate / kF0MinHz)), n > 0 ? n - 1 : 0);
  if (n == 0 || min_lag >= max_lag) return {};

  std::vector<double> x(n);
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = samples[i] - mean;
  std::vector<double> sq(n + 1, 0.0);  // prefix sums of x^2
  for (std::size_t i = 0; i < n; ++i) sq[i + 1] = sq[i] + x[i] * x[i];
  const double r0 = sq[n];
  if (r0 <= 0.0) return {};

  // Lag choice uses the normalized cross-correlation of the overlapping parts,
  // which does not decay with lag, minus a small cost per octave so that
  // period multiples lose ties. The voicing peak is the plain r(lag)/r(0).
  constexpr double kOctaveCost = 0.01;
  const std::size_t lo = min_lag - 1, hi = std::min(max_lag + 1, n - 1);
  std::vector<double> raw(hi + 1, 0.0), nccf(hi + 1, 0.0);
  // linear autocorrelation via a zero-padded FFT
  std::vector<std::complex<double>> spec(std::bit_ceil(2 * n));
  for (std::size_t i = 0; i < n; ++i) spec[i] = x[i];
  dsp::fft(spec);
  for (auto& c : spec) c = std::norm(c);
  dsp::fft(spec);  // power spectrum is real and even, so a forward pass inverts it
  const double scale = 1.0 / static_cast<double>(spec.size());
  for (std::size_t lag = lo; lag <= hi; ++lag) {
    const double acc = spec[lag].real() * scale;
    raw[lag] = acc / r0;
    const double e = std::sqrt(sq[n - lag] * (sq[n] - sq[lag]));
    nccf[lag] = e > 0.0 ? acc / e : 0.0;
  }
  std::size_t best = min_lag;
  double best_score = -INFINITY;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    const double score = nccf[lag] - kOctaveCost * std::log2(static_cast<double>(lag) / static_cast<double>(min_lag));
    if (score > best_score) {
      best_score = score;
      best = lag;
    }
  }
  // Parabolic refinement of the peak position.
  double lag = static_cast<double>(best);
  if (best + 1 <= hi) {
    const double a = nccf[best - 1], b = nccf[best], c = nccf[best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) lag += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  }
  const double f0 = std::clamp(sample_rate / lag, kF0MinHz, kF0MaxHz);
  return {f0, raw[best]};
}

FrameLLD frame_lld(const Frame& frame) {
  FrameLLD lld;
  const auto& s = frame.samples;
  for (float v : s) lld.energy += static_cast<double>(v) * v;

  if (lld.energy > 1e-4 * full_scale_energy(s.size())) {
    const auto pitch = estimate_pitch(s);
    if (pitch.peak >= kVoicingThreshold) lld.f0_hz = pitch.f0_hz;
  }

  thread_local std::vector<double> window;
  if (window.size() != s.size()) window = dsp::hamming(s.size());
  std::vector<double> xw(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) xw[i] = s[i] * window[i];
  const std::size_t n_fft = std::max(kFftSize, std::bit_ceil(s.size()));
  auto power = dsp::power_spectrum(xw, n_fft);
  std::vector<double> mel;
  if (n_fft == kFftSize) {
    mel = filterbank().apply(power);
  } else {
    mel = dsp::MelFilterbank(kMelBands, n_fft, kSampleRate, 0.0, kSampleRate / 2.0).apply(power);
  }
  for (double& m : mel) m = std::log(std::max(m, kMfccLogFloor));
  const auto cep = dsp::dct2(mel, kMfccCount);
  std::copy(cep.begin(), cep.end(), lld.mfcc.begin());
  return lld;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = build_names();
  return names;
}

std::string schema_id_for(std::span<const std::string> names) {
  std::string joined;
  for (const auto& n : names) {
    joined += n;
    joined += '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(joined)));
  return std::string("bcfeat-") + std::to_string(names.size()) + "-" + buf;
}

const std::string& feature_schema_id() {
  static const std::string id = schema_id_for(feature_names());
  return id;
}

FeatureVector utterance_functionals(std::span<const FrameLLD> llds, std::int64_t duration_ms) {
  if (llds.empty()) throw Error(Errc::EmptyUtterance, "no frames");
  FeatureVector fv;
  fv.schema_id = feature_schema_id();
  fv.values.reserve(kFeatureDim);

  std::vector<double> energy, f0;
  for (const auto& l : llds) {
    energy.push_back(l.energy);
    if (l.f0_hz) f0.push_back(*l.f0_hz);
  }
  append_functionals(fv.values, energy, mean_crossing_rate(energy));

  const double voiced_ratio = static_cast<double>(f0.size()) / static_cast<double>(llds.size());
  if (f0.empty()) {
    fv.values.insert(fv.values.end(), kFunctionals, 0.0);
  } else {
    append_functionals(fv.values, f0, voiced_ratio);
  }

  for (int c = 0; c < kMfccCount; ++c) {
    std::vector<double> series;
    series.reserve(llds.size());
    for (const auto& l : llds) series.push_back(l.mfcc[static_cast<std::size_t>(c)]);
    append_functionals(fv.values, series, mean_crossing_rate(series));
  }
  fv.values.push_back(static_cast<double>(duration_ms));
  fv.values.push_back(static_cast<double>(f0.size()));
  return fv;
}

FeatureVector extract_utterance_features(const AudioBuffer& audio, std::int64_t start_ms, std::int64_t end_ms) {
  const auto n = static_cast<std::int64_t>(audio.samples.size());
  const auto begin = std::clamp<std::int64_t>(start_ms * kSampleRate / 1000, 0, n);
  const auto end = std::clamp<std::int64_t>(end_ms * kSampleRate / 1000, begin, n);
  AudioBuffer slice;
  slice.samples.assign(audio.samples.begin() + begin, audio.samples.begin() + end);
  std::vector<FrameLLD> llds;
  for (const auto& f : frame_iter(slice)) llds.push_back(frame_lld(f));
  return utterance_functionals(llds, end_ms - start_ms);
}

}  // namespace bc
