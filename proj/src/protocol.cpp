#include "bc/protocol.hpp"

#include "bc/error.hpp"
#include "bc/serialization.hpp"

namespace bc::wire {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

Frame control(const Json& j) {
  const std::string s = j.dump();
  return {kTagControl, std::vector<std::uint8_t>(s.begin(), s.end())};
}

Json parse_control(const Frame& f) {
  if (f.tag != kTagControl) throw Error(Errc::ProtocolError, "expected a control frame");
  try {
    Json j = Json::parse(f.payload.begin(), f.payload.end());
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
      throw Error(Errc::ProtocolError, "control message without a type");
    }
    return j;
  } catch (const Json::exception& e) {
    throw Error(Errc::ProtocolError, std::string("bad control payload: ") + e.what());
  }
}

template <typename T>
T field(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(Errc::ProtocolError, std::string("missing or invalid field '") + key + "'");
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  if (f.payload.size() > kMaxPayload) throw Error(Errc::ProtocolError, "payload too large");
  std::vector<std::uint8_t> out;
  out.reserve(5 + f.payload.size());
  out.push_back(f.tag);
  put_u32(out, static_cast<std::uint32_t>(f.payload.size()));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

std::optional<Frame> FrameReader::next() {
  if (buf_.size() < 5) return std::nullopt;
  const std::uint8_t tag = buf_[0];
  if (tag != kTagControl && tag != kTagAudio) throw Error(Errc::ProtocolError, "unknown frame tag " + std::to_string(tag));
  const std::uint8_t hdr[4] = {buf_[1], buf_[2], buf_[3], buf_[4]};
  const std::uint32_t len = get_u32(hdr);
  if (len > kMaxPayload) throw Error(Errc::ProtocolError, "payload too large");
  if (buf_.size() < 5 + static_cast<std::size_t>(len)) return std::nullopt;
  Frame f;
  f.tag = tag;
  f.payload.assign(buf_.begin() + 5, buf_.begin() + 5 + len);
  buf_.erase(buf_.begin(), buf_.begin() + 5 + len);
  return f;
}

Frame encode(const Inbound& m) {
  return std::visit(
      Overloaded{
          [](const Hello& h) {
            return control({{"type", "hello"},
                            {"session_id", h.session_id},
                            {"config_ref", h.config_ref},
                            {"metadata", h.metadata}});
          },
          [](const StartTask& s) { return control({{"type", "start_task"}, {"task_id", s.task_id}}); },
          [](const AudioChunk& a) {
            Frame f;
            f.tag = kTagAudio;
            put_u32(f.payload, a.seq);
            for (std::int16_t s : a.samples) {
              const auto u = static_cast<std::uint16_t>(s);
              f.payload.push_back(static_cast<std::uint8_t>(u & 0xff));
              f.payload.push_back(static_cast<std::uint8_t>(u >> 8));
            }
            return f;
          },
          [](const EndTask&) { return control({{"type", "end_task"}}); },
          [](const PlaybackDone& p) { return control({{"type", "playback_done"}, {"clip_id", p.clip_id}}); },
          [](const Bye&) { return control({{"type", "bye"}}); },
      },
      m);
}

Frame encode(const Outbound& m) {
  return std::visit(
      Overloaded{
          [](const Ready& r) { return control({{"type", "ready"}, {"session_id", r.session_id}}); },
          [](const Event& e) {
            Json j = to_json(e.event);
            j["type"] = "event";
            return control(j);
          },
          [](const Backchannel& b) {
            return control({{"type", "backchannel"}, {"category", b.category}, {"clip_id", b.clip_id}, {"t_ms", b.t_ms}});
          },
          [](const TaskState& t) {
            return control(
                {{"type", "task_state"}, {"task_id", t.task_id}, {"remaining_ms", t.remaining_ms}, {"phase", t.phase}});
          },
          [](const ErrorMsg& e) { return control({{"type", "error"}, {"code", e.code}, {"detail", e.detail}}); },
      },
      m);
}

Inbound decode_inbound(const Frame& f) {
  if (f.tag == kTagAudio) {
    if (f.payload.size() < 4) throw Error(Errc::ProtocolError, "audio frame without seq");
    if ((f.payload.size() - 4) % 2 != 0) throw Error(Errc::ProtocolError, "audio chunk is not whole 16-bit samples");
    AudioChunk a;
    a.seq = get_u32(f.payload.data());
    a.samples.resize((f.payload.size() - 4) / 2);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      const std::uint16_t u = static_cast<std::uint16_t>(f.payload[4 + 2 * i] | (f.payload[5 + 2 * i] << 8));
      a.samples[i] = static_cast<std::int16_t>(u);
    }
    return a;
  }
  const Json j = parse_control(f);
  const auto type = j["type"].get<std::string>();
  if (type == "hello") {
    Hello h;
    h.session_id = field<std::string>(j, "session_id");
    h.config_ref = j.contains("config_ref") ? field<std::string>(j, "config_ref") : "default";
    if (j.contains("metadata")) h.metadata = j["metadata"];
    return h;
  }
  if (type == "start_task") return StartTask{field<std::string>(j, "task_id")};
  if (type == "end_task") return EndTask{};
  if (type == "playback_done") return PlaybackDone{j.contains("clip_id") ? field<std::string>(j, "clip_id") : ""};
  if (type == "bye") return Bye{};
  throw Error(Errc::ProtocolError, "unknown inbound message type '" + type + "'");
}

Outbound decode_outbound(const Frame& f) {
  const Json j = parse_control(f);
  const auto type = j["type"].get<std::string>();
  if (type == "ready") return Ready{field<std::string>(j, "session_id")};
  if (type == "event") {
    try {
      return Event{speech_event_from_json(j)};
    } catch (const Error& e) {
      throw Error(Errc::ProtocolError, e.what());
    }
  }
  if (type == "backchannel") {
    return Backchannel{field<std::string>(j, "category"), field<std::string>(j, "clip_id"), field<std::int64_t>(j, "t_ms")};
  }
  if (type == "task_state") {
    return TaskState{field<std::string>(j, "task_id"), field<std::int64_t>(j, "remaining_ms"),
                     field<std::string>(j, "phase")};
  }
  if (type == "error") return ErrorMsg{field<std::string>(j, "code"), field<std::string>(j, "detail")};
  throw Error(Errc::ProtocolError, "unknown outbound message type '" + type + "'");
}

}  // namespace bc::wire
