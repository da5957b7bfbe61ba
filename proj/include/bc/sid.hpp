#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bc/audio_io.hpp"

namespace bc {

/// Speaking-interval detection settings. Frame counts are consecutive runs.
struct SidConfig {
  double energy_floor = 1e-4 * samples_per_ms(25);  // 1e-4 of full-scale energy of a 25 ms frame
  int enter_speech_frames = 20;
  int enter_interval_frames = 70;
  int tick_ms = 100;
  int frame_ms = 25;
  int hop_ms = 10;

  void validate() const;
};

enum class SpeechEventKind { UtteranceStart, UtteranceEnd, IntervalTick };

std::string to_string(SpeechEventKind k);
SpeechEventKind speech_event_kind_from_string(const std::string& s);

struct SpeechEvent {
  SpeechEventKind kind = SpeechEventKind::IntervalTick;
  std::int64_t t_ms = 0;  // boundary time (back-dated) or tick time
  std::int64_t span_start_ms = 0;  // UtteranceEnd only
  std::int64_t span_end_ms = 0;    // UtteranceEnd only
  std::int64_t pause_ms = 0;       // IntervalTick only

  bool operator==(const SpeechEvent&) const = default;
};

bool vad_classify(const Frame& frame, const SidConfig& cfg);

enum class SidPhase { Idle, InUtterance, InInterval };

/// Delay-trigger state. Plain value; one per session.
struct SidState {
  SidPhase phase = SidPhase::Idle;
  std::int64_t next_t_ms = 0;        // expected start of the next frame
  int voiced_run = 0;
  int unvoiced_run = 0;
  std::int64_t run_start_ms = 0;     // start of the current voiced run
  std::int64_t last_voiced_end_ms = 0;
  std::int64_t utterance_start_ms = 0;
  std::int64_t pause_origin_ms = 0;  // end of the last utterance, or stream start
  std::int64_t next_tick_ms = 0;
};

SidState sid_initial_state(const SidConfig& cfg);

/// Advances the state machine by one frame starting at `t_ms`.
///
/// An utterance opens after enter_speech_frames consecutive voiced frames and
/// its UtteranceStart is back-dated to the first frame of that run. It closes
/// after enter_interval_frames consecutive unvoiced frames, back-dated to the
/// end of the last voiced frame. Outside utterances an IntervalTick is due
/// every tick_ms; a due tick is emitted when the frame starting at the tick
/// time is unvoiced, otherwise it is skipped. Throws NonMonotonicTime unless
/// t_ms is exactly one hop after the previous call.
std::vector<SpeechEvent> sid_step(SidState& state, bool voiced, std::int64_t t_ms, const SidConfig& cfg);

/// Closed or still-open utterance spans found in a whole buffer.
struct UtteranceSpan {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  bool closed = true;
};

std::vector<UtteranceSpan> detect_utterances(const AudioBuffer& audio, const SidConfig& cfg);

}  // namespace bc
