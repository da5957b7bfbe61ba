#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bc/features.hpp"
#include "bc/models.hpp"
#include "bc/rng.hpp"
#include "bc/scoring.hpp"
#include "bc/sid.hpp"

namespace bc {

/// I: one-off response, II: series of responses in a given time,
/// III: open-ended self-disclosure.
enum class TaskType { I, II, III };

std::string to_string(TaskType t);
TaskType task_type_from_string(const std::string& s);

struct TaskSpec {
  std::string task_id;
  TaskType task_type = TaskType::II;
  std::int64_t duration_ms = 60000;
  std::string prompt_clip;

  bool pbc_enabled() const { return task_type != TaskType::I; }
};

enum class BackchannelCategory { Rbc, Pbc };

std::string to_string(BackchannelCategory c);
BackchannelCategory category_from_string(const std::string& s);

struct ClipRef {
  std::string clip_id;
  std::string path;
  std::string transcript;
  std::int64_t duration_ms = 0;
};

struct ClipLibrary {
  std::map<BackchannelCategory, std::vector<ClipRef>> clips;

  bool has(BackchannelCategory c) const;
};

/// Uniform draw from the category. Throws EmptyCategory.
const ClipRef& select_clip(const ClipLibrary& lib, BackchannelCategory category, Rng& rng);

struct PbcTrace {
  std::int64_t t_ms = 0;
  std::int64_t pause_ms = 0;
  double s_pau = 0.0;
  double s_pg = 0.0;
  double s_pt = 0.0;
  double score = 0.0;
  double threshold = 0.0;
  bool decision = false;
};

struct BackchannelDecision {
  BackchannelCategory category = BackchannelCategory::Rbc;
  ClipRef clip;
  std::int64_t t_ms = 0;
  // cause
  std::int64_t span_start_ms = 0;  // RBC
  std::int64_t span_end_ms = 0;    // RBC
  double rbc_decision_value = 0.0;
  std::optional<PbcTrace> scores;  // PBC
};

struct EngineConfig {
  std::int64_t cooldown_ms = 1500;
  bool pbc_reset_pause = true;
  std::int64_t rbc_min_utterance_ms = 300;
  bool rbc_enabled = true;
  double type3_threshold_offset = 0.15;
  double default_participant_score = 0.5;

  void validate(const SidConfig& sid) const;
};

/// Trained models shared read-only by every session.
struct EngineModels {
  std::optional<SvmModel> rbc;
  std::optional<SvmModel> participant;
  std::optional<PlattParams> participant_platt;
  TriplePConfig triple_p;
};

struct StepResult {
  std::optional<BackchannelDecision> decision;
  std::optional<PbcTrace> trace;
};

/// Per-session orchestrator. Consumes SpeechEvents of the active task in
/// timestamp order; decisions are only ever emitted on IntervalTicks.
///
/// On UtteranceEnd (span >= rbc_min_utterance_ms) the RBC classifier runs on
/// the utterance features and a positive result is held for the next tick.
/// On a tick a held RBC takes precedence; otherwise, in PBC-enabled tasks,
/// the Triple-P score is compared to the (task-adjusted) threshold. Any
/// decision requires cooldown_ms since the previous one and no clip playing.
class Session {
 public:
  Session(EngineConfig cfg, std::shared_ptr<const EngineModels> models, std::shared_ptr<const ClipLibrary> clips,
          std::uint64_t seed);

  /// Throws ModelMissing / EmptyCategory if the task cannot run.
  void start_task(const TaskSpec& task);
  void end_task();
  bool task_active() const { return task_.has_value(); }
  const std::optional<TaskSpec>& task() const { return task_; }

  StepResult step(const SpeechEvent& ev, const FeatureVector* utterance_features = nullptr);

  /// Participant score from the trial-task recording; cached for the session.
  double participant_score_from_trial(const AudioBuffer& trial, const SidConfig& sid);
  /// Platt-calibrated score for decision value d; cached per session.
  double participant_score_for(double d);
  void set_participant_score(double s) { participant_score_ = s; }
  double participant_score() const { return participant_score_.value_or(cfg_.default_participant_score); }

  /// While set, decisions are suppressed (client-side playback in progress).
  void set_external_playback(bool open) { external_playback_ = open; }

  const EngineConfig& config() const { return cfg_; }

 private:
  bool may_emit(std::int64_t t) const;
  BackchannelDecision emit(BackchannelCategory c, std::int64_t t);

  EngineConfig cfg_;
  std::shared_ptr<const EngineModels> models_;
  std::shared_ptr<const ClipLibrary> clips_;
  Rng rng_;
  std::optional<TaskSpec> task_;
  std::optional<double> participant_score_;
  std::optional<std::pair<double, double>> participant_cache_;  // (d, score)
  bool external_playback_ = false;

  // per task
  std::int64_t last_event_ms_ = -1;
  bool in_utterance_ = false;
  std::optional<std::int64_t> last_decision_ms_;
  std::int64_t playback_until_ms_ = 0;
  std::optional<std::int64_t> pbc_rebase_ms_;
  struct PendingRbc {
    std::int64_t span_start_ms;
    std::int64_t span_end_ms;
    double d;
  };
  std::optional<PendingRbc> pending_rbc_;
};

}  // namespace bc
