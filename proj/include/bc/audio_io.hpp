#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace bc {

inline constexpr int kSampleRate = 16000;

/// Mono PCM audio at the canonical 16 kHz rate, samples in [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  std::int64_t duration_ms() const {
    return static_cast<std::int64_t>(samples.size()) * 1000 / sample_rate;
  }
};

/// A fixed-length analysis window. Trailing windows are zero-padded.
struct Frame {
  std::vector<float> samples;
  std::int64_t start_ms = 0;
  int frame_ms = 25;
  int hop_ms = 10;
};

inline constexpr int samples_per_ms(int ms) { return ms * kSampleRate / 1000; }

float pcm16_to_float(std::int16_t v);
std::int16_t float_to_pcm16(float v);

/// Decodes a RIFF/WAVE PCM16 mono 16 kHz file. No resampling or downmixing:
/// anything else is UnsupportedFormat, a non-RIFF file is NotWav.
AudioBuffer read_wav(const std::filesystem::path& path);
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);

void write_wav(const std::filesystem::path& path, const AudioBuffer& buf);
std::vector<std::uint8_t> encode_wav(const AudioBuffer& buf);

AudioBuffer from_pcm16(std::span<const std::int16_t> pcm);

/// Frames start at k*hop; count = ceil(len / hop_samples).
std::vector<Frame> frame_iter(const AudioBuffer& buf, int frame_ms = 25, int hop_ms = 10);

/// Incremental framer producing exactly the frames frame_iter would produce
/// for the concatenation of everything pushed, once finish() is called.
class StreamingFramer {
 public:
  StreamingFramer(int frame_ms = 25, int hop_ms = 10);

  /// Appends samples and returns every frame whose window is now complete.
  std::vector<Frame> push(std::span<const float> samples);
  /// Emits the remaining zero-padded frames.
  std::vector<Frame> finish();

  std::int64_t samples_seen() const { return total_; }

 private:
  Frame make_frame(std::int64_t index) const;

  int frame_ms_;
  int hop_ms_;
  int frame_len_;
  int hop_len_;
  std::vector<float> pending_;    // samples from offset_ onwards
  std::int64_t offset_ = 0;       // absolute index of pending_[0]
  std::int64_t next_frame_ = 0;
  std::int64_t total_ = 0;
};

}  // namespace bc
