#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bc/audio_io.hpp"
#include "bc/engine.hpp"
#include "bc/sid.hpp"

namespace bc {

/// Everything needed to run sessions; immutable once loaded.
struct SessionConfig {
  std::uint64_t seed = 1;
  EngineConfig engine;
  SidConfig sid;
  std::vector<TaskSpec> tasks;
  std::shared_ptr<const EngineModels> models;
  std::shared_ptr<const ClipLibrary> clips;
  std::optional<double> participant_score;
  std::optional<std::filesystem::path> trial_wav;

  const TaskSpec& task(const std::string& task_id) const;  // throws UnknownTask
};

/// New session with the participant score resolved (fixed value, trial
/// recording, or the engine default).
Session make_session(const SessionConfig& cfg, std::uint64_t seed);

struct TimelineEntry {
  enum class Type { Event, Trace, Backchannel };
  Type type = Type::Event;
  std::string task_id;
  SpeechEvent event;
  PbcTrace trace;
  BackchannelDecision decision;
};

/// audio -> framer -> VAD -> SID -> engine for one task. Used unchanged by the
/// offline simulator and the live service, so both see identical frames.
class TaskPipeline {
 public:
  TaskPipeline(Session& session, const SidConfig& sid, const TaskSpec& task);

  std::vector<TimelineEntry> push(std::span<const float> samples);
  /// Flushes the zero-padded tail frames and ends the task.
  std::vector<TimelineEntry> finish();

  std::int64_t audio_ms() const { return framer_.samples_seen() * 1000 / kSampleRate; }

 private:
  void process(const std::vector<Frame>& frames, std::vector<TimelineEntry>& out);

  Session& session_;
  SidConfig sid_;
  std::string task_id_;
  StreamingFramer framer_;
  SidState state_;
  // raw samples from history_start_ onwards; enough to cover any utterance
  // that may still be reported
  std::vector<float> history_;
  std::int64_t history_start_ = 0;
  std::int64_t keep_from_ = 0;  // history before this sample is no longer needed
  bool finished_ = false;
};

/// Runs each (task, audio) pair in order through one session.
std::vector<TimelineEntry> simulate(const SessionConfig& cfg, std::span<const std::pair<TaskSpec, AudioBuffer>> tasks,
                                    std::uint64_t seed);

std::vector<BackchannelDecision> decisions_of(std::span<const TimelineEntry> timeline);

}  // namespace bc
