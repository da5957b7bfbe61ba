#include "bc/engine.hpp"

#include <algorithm>

#include "bc/error.hpp"

namespace bc {

std::string to_string(TaskType t) {
  switch (t) {
    case TaskType::I: return "I";
    case TaskType::II: return "II";
    case TaskType::III: return "III";
  }
  return "?";
}

TaskType task_type_from_string(const std::string& s) {
  if (s == "I") return TaskType::I;
  if (s == "II") return TaskType::II;
  if (s == "III") return TaskType::III;
  throw Error(Errc::Parse, "unknown task type '" + s + "'");
}

std::string to_string(BackchannelCategory c) { return c == BackchannelCategory::Rbc ? "RBC" : "PBC"; }

BackchannelCategory category_from_string(const std::string& s) {
  if (s == "RBC") return BackchannelCategory::Rbc;
  if (s == "PBC") return BackchannelCategory::Pbc;
  throw Error(Errc::Parse, "unknown backchannel category '" + s + "'");
}

bool ClipLibrary::has(BackchannelCategory c) const {
  auto it = clips.find(c);
  return it != clips.end() && !it->second.empty();
}

const ClipRef& select_clip(const ClipLibrary& lib, BackchannelCategory category, Rng& rng) {
  auto it = lib.clips.find(category);
  if (it == lib.clips.end() || it->second.empty()) {
    throw Error(Errc::EmptyCategory, "no clips for category " + to_string(category));
  }
  return it->second[rng.index(it->second.size())];
}

void EngineConfig::validate(const SidConfig& sid) const {
  if (cooldown_ms < sid.tick_ms) throw Error(Errc::InvalidArgument, "cooldown_ms must be >= tick_ms");
  if (rbc_min_utterance_ms < 0) throw Error(Errc::InvalidArgument, "rbc_min_utterance_ms must be >= 0");
  if (!(default_participant_score >= 0.0 && default_participant_score <= 1.0)) {
    throw Error(Errc::InvalidArgument, "default_participant_score must be in [0, 1]");
  }
  if (!(type3_threshold_offset >= 0.0)) throw Error(Errc::InvalidArgument, "type3_threshold_offset must be >= 0");
}

Session::Session(EngineConfig cfg, std::shared_ptr<const EngineModels> models, std::shared_ptr<const ClipLibrary> clips,
                 std::uint64_t seed)
    : cfg_(cfg), models_(std::move(models)), clips_(std::move(clips)), rng_(seed) {
  if (!models_) throw Error(Errc::ModelMissing, "no engine models");
  if (!clips_) throw Error(Errc::EmptyCategory, "no clip library");
}

void Session::start_task(const TaskSpec& task) {
  if (cfg_.rbc_enabled) {
    if (!models_->rbc) throw Error(Errc::ModelMissing, "RBC classifier enabled but not loaded");
    if (!clips_->has(BackchannelCategory::Rbc)) throw Error(Errc::EmptyCategory, "no RBC clips");
  }
  if (task.pbc_enabled()) {
    if (!models_->triple_p.tasks.count(task.task_id)) {
      throw Error(Errc::ModelMissing, "no scoring parameters for task '" + task.task_id + "'");
    }
    if (!clips_->has(BackchannelCategory::Pbc)) throw Error(Errc::EmptyCategory, "no PBC clips");
  }
  if (task.duration_ms <= 0) throw Error(Errc::InvalidArgument, "task duration must be positive");
  task_ = task;
  last_event_ms_ = -1;
  in_utterance_ = false;
  last_decision_ms_.reset();
  playback_until_ms_ = 0;
  pbc_rebase_ms_.reset();
  pending_rbc_.reset();
}

void Session::end_task() { task_.reset(); }

bool Session::may_emit(std::int64_t t) const {
  if (external_playback_ || t < playback_until_ms_) return false;
  return !last_decision_ms_ || t - *last_decision_ms_ >= cfg_.cooldown_ms;
}

BackchannelDecision Session::emit(BackchannelCategory c, std::int64_t t) {
  BackchannelDecision d;
  d.category = c;
  d.clip = select_clip(*clips_, c, rng_);
  d.t_ms = t;
  last_decision_ms_ = t;
  playback_until_ms_ = t + d.clip.duration_ms;
  return d;
}

StepResult Session::step(const SpeechEvent& ev, const FeatureVector* utterance_features) {
  if (!task_) throw Error(Errc::EventOutOfOrder, "event with no active task");
  if (ev.t_ms < last_event_ms_) {
    throw Error(Errc::EventOutOfOrder,
                "event at " + std::to_string(ev.t_ms) + " ms after " + std::to_string(last_event_ms_) + " ms");
  }
  last_event_ms_ = ev.t_ms;
  StepResult out;

  switch (ev.kind) {
    case SpeechEventKind::UtteranceStart:
      if (in_utterance_) throw Error(Errc::EventOutOfOrder, "utterance start inside an utterance");
      in_utterance_ = true;
      pending_rbc_.reset();
      return out;

    case SpeechEventKind::UtteranceEnd: {
      if (!in_utterance_) throw Error(Errc::EventOutOfOrder, "utterance end without start");
      in_utterance_ = false;
      pbc_rebase_ms_.reset();
      const std::int64_t span = ev.span_end_ms - ev.span_start_ms;
      if (cfg_.rbc_enabled && span >= cfg_.rbc_min_utterance_ms) {
        if (!models_->rbc) throw Error(Errc::ModelMissing, "RBC classifier enabled but not loaded");
        if (!utterance_features) throw Error(Errc::InvalidArgument, "utterance end without features");
        const double d = svm_decision(*models_->rbc, *utterance_features);
        if (sign_with_tie(d) > 0) pending_rbc_ = PendingRbc{ev.span_start_ms, ev.span_end_ms, d};
      }
      return out;
    }

    case SpeechEventKind::IntervalTick:
      break;
  }

  if (in_utterance_) throw Error(Errc::EventOutOfOrder, "tick inside an utterance");
  const std::int64_t t = ev.t_ms;

  if (pending_rbc_) {
    const PendingRbc p = *pending_rbc_;
    pending_rbc_.reset();
    if (may_emit(t)) {
      auto d = emit(BackchannelCategory::Rbc, t);
      d.span_start_ms = p.span_start_ms;
      d.span_end_ms = p.span_end_ms;
      d.rbc_decision_value = p.d;
      out.decision = std::move(d);
      return out;
    }
  }

  if (!task_->pbc_enabled()) return out;

  const auto& tp = models_->triple_p;
  const auto& model = tp.tasks.at(task_->task_id);
  std::int64_t origin = t - ev.pause_ms;
  if (pbc_rebase_ms_) origin = std::max(origin, *pbc_rebase_ms_);

  PbcTrace tr;
  tr.t_ms = t;
  tr.pause_ms = t - origin;
  tr.s_pau = pause_score(static_cast<double>(tr.pause_ms), model.pause);
  tr.s_pg = progress_score(static_cast<double>(t), model.progress);
  tr.s_pt = participant_score();
  tr.score = pbc_score(tr.s_pau, tr.s_pg, tr.s_pt, tp.weights);
  tr.threshold = tp.thr_pbc + (task_->task_type == TaskType::III ? cfg_.type3_threshold_offset : 0.0);
  tr.decision = pbc_decision(tr.score, tr.threshold) && may_emit(t);
  out.trace = tr;
  if (tr.decision) {
    auto d = emit(BackchannelCategory::Pbc, t);
    d.scores = tr;
    if (cfg_.pbc_reset_pause) pbc_rebase_ms_ = t;
    out.decision = std::move(d);
  }
  return out;
}

double Session::participant_score_for(double d) {
  if (participant_cache_ && participant_cache_->first == d) return participant_cache_->second;
  if (!models_->participant_platt) throw Error(Errc::ModelMissing, "participant calibration not loaded");
  const double s = bc::participant_score(d, *models_->participant_platt);
  participant_cache_ = {d, s};
  participant_score_ = s;
  return s;
}

double Session::participant_score_from_trial(const AudioBuffer& trial, const SidConfig& sid) {
  if (!models_->participant) throw Error(Errc::ModelMissing, "participant model not loaded");
  const auto spans = detect_utterances(trial, sid);
  if (spans.empty()) throw Error(Errc::NoSpeechDetected, "no utterance in trial audio");
  const auto longest = std::max_element(spans.begin(), spans.end(), [](const auto& a, const auto& b) {
    return a.end_ms - a.start_ms < b.end_ms - b.start_ms;
  });
  const auto fv = extract_utterance_features(trial, longest->start_ms, longest->end_ms);
  return participant_score_for(svm_decision(*models_->participant, fv));
}

}  // namespace bc
