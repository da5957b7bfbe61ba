#include "bc/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bc/error.hpp"

namespace bc {

namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint16_t le16(const std::uint8_t* p) { return std::uint16_t(p[0] | p[1] << 8); }

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
}

}  // namespace

float pcm16_to_float(std::int16_t v) { return static_cast<float>(v) / 32768.0f; }

std::int16_t float_to_pcm16(float v) {
  const double scaled = std::nearbyint(static_cast<double>(v) * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

AudioBuffer from_pcm16(std::span<const std::int16_t> pcm) {
  AudioBuffer buf;
  buf.samples.reserve(pcm.size());
  for (auto v : pcm) buf.samples.push_back(pcm16_to_float(v));
  return buf;
}

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(Errc::NotWav, "missing RIFF/WAVE header");
  }
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::uint32_t size = le32(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw Error(Errc::NotWav, "truncated chunk");
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) throw Error(Errc::NotWav, "short fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      const auto format = le16(f);
      const auto channels = le16(f + 2);
      const auto rate = le32(f + 4);
      const auto bits = le16(f + 14);
      if (format != 1) throw Error(Errc::UnsupportedFormat, "not PCM (format tag " + std::to_string(format) + ")");
      if (channels != 1) throw Error(Errc::UnsupportedFormat, std::to_string(channels) + " channels");
      if (bits != 16) throw Error(Errc::UnsupportedFormat, std::to_string(bits) + "-bit samples");
      if (rate != kSampleRate) throw Error(Errc::UnsupportedFormat, std::to_string(rate) + " Hz");
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw Error(Errc::NotWav, "data chunk before fmt chunk");
      const std::size_t n = size / 2;
      AudioBuffer buf;
      buf.samples.resize(n);
      const std::uint8_t* d = bytes.data() + body;
      for (std::size_t i = 0; i < n; ++i) {
        buf.samples[i] = pcm16_to_float(static_cast<std::int16_t>(le16(d + 2 * i)));
      }
      return buf;
    }
    pos = body + size + (size & 1);
  }
  throw Error(Errc::NotWav, "no data chunk");
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buf) {
  if (buf.sample_rate != kSampleRate) {
    throw Error(Errc::UnsupportedFormat, "only 16 kHz buffers can be written");
  }
  const auto data_bytes = static_cast<std::uint32_t>(buf.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, kSampleRate);
  put32(out, kSampleRate * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_bytes);
  for (float s : buf.samples) put16(out, static_cast<std::uint16_t>(float_to_pcm16(s)));
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buf) {
  const auto bytes = encode_wav(buf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

static void check_window(int frame_ms, int hop_ms) {
  if (hop_ms < 1 || frame_ms < hop_ms) {
    throw Error(Errc::InvalidWindow,
                "frame_ms=" + std::to_string(frame_ms) + " hop_ms=" + std::to_string(hop_ms));
  }
}

std::vector<Frame> frame_iter(const AudioBuffer& buf, int frame_ms, int hop_ms) {
  check_window(frame_ms, hop_ms);
  StreamingFramer framer(frame_ms, hop_ms);
  auto frames = framer.push(buf.samples);
  auto rest = framer.finish();
  frames.insert(frames.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
  return frames;
}

StreamingFramer::StreamingFramer(int frame_ms, int hop_ms)
    : frame_ms_(frame_ms),
      hop_ms_(hop_ms),
      frame_len_(samples_per_ms(frame_ms)),
      hop_len_(samples_per_ms(hop_ms)) {
  check_window(frame_ms, hop_ms);
}

Frame StreamingFramer::make_frame(std::int64_t index) const {
  Frame f;
  f.frame_ms = frame_ms_;
  f.hop_ms = hop_ms_;
  f.start_ms = index * hop_ms_;
  f.samples.assign(static_cast<std::size_t>(frame_len_), 0.0f);
  const std::int64_t begin = index * hop_len_ - offset_;
  const std::int64_t avail = static_cast<std::int64_t>(pending_.size()) - begin;
  const std::int64_t n = std::clamp<std::int64_t>(avail, 0, frame_len_);
  std::copy_n(pending_.begin() + begin, n, f.samples.begin());
  return f;
}

std::vector<Frame> StreamingFramer::push(std::span<const float> samples) {
  pending_.insert(pending_.end(), samples.begin(), samples.end());
  total_ += static_cast<std::int64_t>(samples.size());
  std::vector<Frame> out;
  while (next_frame_ * hop_len_ + frame_len_ <= total_) {
    out.push_back(make_frame(next_frame_));
    ++next_frame_;
  }
  const std::int64_t keep_from = next_frame_ * hop_len_;
  if (keep_from > offset_) {
    const auto drop = std::min<std::int64_t>(keep_from - offset_, static_cast<std::int64_t>(pending_.size()));
    pending_.erase(pending_.begin(), pending_.begin() + drop);
    offset_ += drop;
  }
  return out;
}

std::vector<Frame> StreamingFramer::finish() {
  std::vector<Frame> out;
  while (next_frame_ * hop_len_ < total_) {
    out.push_back(make_frame(next_frame_));
    ++next_frame_;
  }
  return out;
}

}  // namespace bc
