#include "bc/sid.hpp"

#include "bc/error.hpp"

namespace bc {

void SidConfig::validate() const {
  if (enter_speech_frames < 1 || enter_interval_frames < 1 || tick_ms < 1) {
    throw Error(Errc::InvalidArgument, "SID frame counts and tick_ms must be >= 1");
  }
  if (hop_ms < 1 || frame_ms < hop_ms) throw Error(Errc::InvalidWindow, "bad SID window");
  if (tick_ms % hop_ms != 0) throw Error(Errc::InvalidArgument, "tick_ms must be a multiple of hop_ms");
}

std::string to_string(SpeechEventKind k) {
  switch (k) {
    case SpeechEventKind::UtteranceStart: return "utterance_start";
    case SpeechEventKind::UtteranceEnd: return "utterance_end";
    case SpeechEventKind::IntervalTick: return "interval_tick";
  }
  return "?";
}

SpeechEventKind speech_event_kind_from_string(const std::string& s) {
  if (s == "utterance_start") return SpeechEventKind::UtteranceStart;
  if (s == "utterance_end") return SpeechEventKind::UtteranceEnd;
  if (s == "interval_tick") return SpeechEventKind::IntervalTick;
  throw Error(Errc::Parse, "unknown event kind '" + s + "'");
}

bool vad_classify(const Frame& frame, const SidConfig& cfg) {
  double energy = 0.0;
  for (float v : frame.samples) energy += static_cast<double>(v) * v;
  return energy > cfg.energy_floor;
}

SidState sid_initial_state(const SidConfig& cfg) {
  cfg.validate();
  SidState s;
  s.next_tick_ms = cfg.tick_ms;
  return s;
}

std::vector<SpeechEvent> sid_step(SidState& st, bool voiced, std::int64_t t_ms, const SidConfig& cfg) {
  if (t_ms != st.next_t_ms) {
    throw Error(Errc::NonMonotonicTime,
                "expected frame at " + std::to_string(st.next_t_ms) + " ms, got " + std::to_string(t_ms));
  }
  st.next_t_ms = t_ms + cfg.hop_ms;
  std::vector<SpeechEvent> events;

  if (voiced) {
    if (st.voiced_run == 0) st.run_start_ms = t_ms;
    ++st.voiced_run;
    st.unvoiced_run = 0;
    st.last_voiced_end_ms = t_ms + cfg.hop_ms;
    if (st.phase != SidPhase::InUtterance) {
      if (st.voiced_run >= cfg.enter_speech_frames) {
        st.phase = SidPhase::InUtterance;
        st.utterance_start_ms = st.run_start_ms;
        SpeechEvent ev;
        ev.kind = SpeechEventKind::UtteranceStart;
        ev.t_ms = st.run_start_ms;
        events.push_back(ev);
      } else {
        // a tick due now is skipped: the pause may be ending
        while (st.next_tick_ms <= t_ms) st.next_tick_ms += cfg.tick_ms;
      }
    }
    return events;
  }

  ++st.unvoiced_run;
  st.voiced_run = 0;
  if (st.phase == SidPhase::InUtterance) {
    if (st.unvoiced_run >= cfg.enter_interval_frames) {
      st.phase = SidPhase::InInterval;
      SpeechEvent ev;
      ev.kind = SpeechEventKind::UtteranceEnd;
      ev.t_ms = st.last_voiced_end_ms;
      ev.span_start_ms = st.utterance_start_ms;
      ev.span_end_ms = st.last_voiced_end_ms;
      events.push_back(ev);
      st.pause_origin_ms = st.last_voiced_end_ms;
      st.next_tick_ms = t_ms + cfg.hop_ms;
    }
    return events;
  }

  if (t_ms >= st.next_tick_ms) {
    SpeechEvent ev;
    ev.kind = SpeechEventKind::IntervalTick;
    ev.t_ms = t_ms;
    ev.pause_ms = t_ms - st.pause_origin_ms;
    events.push_back(ev);
    while (st.next_tick_ms <= t_ms) st.next_tick_ms += cfg.tick_ms;
  }
  return events;
}

std::vector<UtteranceSpan> detect_utterances(const AudioBuffer& audio, const SidConfig& cfg) {
  auto st = sid_initial_state(cfg);
  std::vector<UtteranceSpan> spans;
  for (const auto& f : frame_iter(audio, cfg.frame_ms, cfg.hop_ms)) {
    for (const auto& ev : sid_step(st, vad_classify(f, cfg), f.start_ms, cfg)) {
      if (ev.kind == SpeechEventKind::UtteranceEnd) spans.push_back({ev.span_start_ms, ev.span_end_ms, true});
    }
  }
  if (st.phase == SidPhase::InUtterance) spans.push_back({st.utterance_start_ms, st.last_voiced_end_ms, false});
  return spans;
}

}  // namespace bc
