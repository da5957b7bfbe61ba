#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "bc/sid.hpp"

/// Wire format. Every message is one frame:
///
///   tag:u8 | length:u32 big-endian | payload[length]
///
/// tag 0x01 carries a UTF-8 JSON object with a "type" field; tag 0x02 carries
/// an audio chunk: seq:u32 big-endian followed by PCM16 little-endian mono
/// 16 kHz samples.
namespace bc::wire {

inline constexpr std::uint8_t kTagControl = 0x01;
inline constexpr std::uint8_t kTagAudio = 0x02;
inline constexpr std::uint32_t kMaxPayload = 1u << 24;

struct Frame {
  std::uint8_t tag = kTagControl;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& f);

/// Incremental decoder for a byte stream. Throws ProtocolError on an unknown
/// tag or oversized payload.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  std::optional<Frame> next();
  std::size_t buffered() const { return buf_.size(); }

 private:
  std::deque<std::uint8_t> buf_;
};

// inbound (client -> server)
struct Hello {
  std::string session_id;
  std::string config_ref = "default";
  nlohmann::json metadata = nlohmann::json::object();
  bool operator==(const Hello&) const = default;
};
struct StartTask {
  std::string task_id;
  bool operator==(const StartTask&) const = default;
};
struct AudioChunk {
  std::uint32_t seq = 0;
  std::vector<std::int16_t> samples;
  bool operator==(const AudioChunk&) const = default;
};
struct EndTask {
  bool operator==(const EndTask&) const = default;
};
struct PlaybackDone {
  std::string clip_id;
  bool operator==(const PlaybackDone&) const = default;
};
struct Bye {
  bool operator==(const Bye&) const = default;
};

using Inbound = std::variant<Hello, StartTask, AudioChunk, EndTask, PlaybackDone, Bye>;

// outbound (server -> client)
struct Ready {
  std::string session_id;
  bool operator==(const Ready&) const = default;
};
struct Event {
  SpeechEvent event;
  bool operator==(const Event&) const = default;
};
struct Backchannel {
  std::string category;  // "RBC" | "PBC"
  std::string clip_id;
  std::int64_t t_ms = 0;
  bool operator==(const Backchannel&) const = default;
};
struct TaskState {
  std::string task_id;
  std::int64_t remaining_ms = 0;
  std::string phase;  // "in_progress" | "done"
  bool operator==(const TaskState&) const = default;
};
struct ErrorMsg {
  std::string code;
  std::string detail;
  bool operator==(const ErrorMsg&) const = default;
};

using Outbound = std::variant<Ready, Event, Backchannel, TaskState, ErrorMsg>;

Frame encode(const Inbound& m);
Frame encode(const Outbound& m);
/// Throw ProtocolError on malformed frames.
Inbound decode_inbound(const Frame& f);
Outbound decode_outbound(const Frame& f);

}  // namespace bc::wire
