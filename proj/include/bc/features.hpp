#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bc/audio_io.hpp"

namespace bc {

inline constexpr int kMfccCount = 13;
inline constexpr int kMelBands = 26;
inline constexpr double kMfccLogFloor = 1e-10;
inline constexpr double kF0MinHz = 50.0;
inline constexpr double kF0MaxHz = 500.0;
inline constexpr double kVoicingThreshold = 0.3;

/// Energy of a full-scale (constant +-1) frame of n samples.
inline double full_scale_energy(std::size_t n) { return static_cast<double>(n); }

/// Frame-level low-level descriptors.
struct FrameLLD {
  double energy = 0.0;            // sum of squares
  std::optional<double> f0_hz;    // nullopt when unvoiced
  std::array<double, kMfccCount> mfcc{};
};

struct PitchEstimate {
  double f0_hz = 0.0;
  double peak = 0.0;  // normalized autocorrelation at the chosen lag
};

/// Autocorrelation pitch search over lags covering [kF0MinHz, kF0MaxHz].
/// The lag maximizes the overlap-normalized correlation with a small octave cost;
/// the reported peak is r(lag)/r(0) on the mean-removed frame.
PitchEstimate estimate_pitch(std::span<const float> samples, int sample_rate = kSampleRate);

FrameLLD frame_lld(const Frame& frame);

inline constexpr int kLldChannels = 2 + kMfccCount;  // energy, f0, mfcc0..12
inline constexpr int kFunctionals = 12;
inline constexpr int kFeatureDim = kLldChannels * kFunctionals + 2;

/// Ordered feature names; index i of every FeatureVector is names()[i].
const std::vector<std::string>& feature_names();
/// Identifier derived from the name list; changes iff the list changes.
std::string schema_id_for(std::span<const std::string> names);
const std::string& feature_schema_id();

struct FeatureVector {
  std::vector<double> values;
  std::string schema_id;
};

/// Statistical functionals over an utterance's frames. F0 statistics use only
/// voiced frames and are all zero (with voiced ratio 0) if none are voiced.
FeatureVector utterance_functionals(std::span<const FrameLLD> llds, std::int64_t duration_ms);

/// Convenience: frames the span [start_ms, end_ms) of `audio` and computes functionals.
FeatureVector extract_utterance_features(const AudioBuffer& audio, std::int64_t start_ms, std::int64_t end_ms);

}  // namespace bc
