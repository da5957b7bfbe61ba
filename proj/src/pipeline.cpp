#include "bc/pipeline.hpp"

#include <algorithm>

#include "bc/error.hpp"
#include "bc/features.hpp"

namespace bc {

const TaskSpec& SessionConfig::task(const std::string& task_id) const {
  for (const auto& t : tasks) {
    if (t.task_id == task_id) return t;
  }
  throw Error(Errc::UnknownTask, "unknown task '" + task_id + "'");
}

Session make_session(const SessionConfig& cfg, std::uint64_t seed) {
  cfg.engine.validate(cfg.sid);
  Session s(cfg.engine, cfg.models, cfg.clips, seed);
  if (cfg.participant_score) {
    s.set_participant_score(*cfg.participant_score);
  } else if (cfg.trial_wav) {
    s.participant_score_from_trial(read_wav(*cfg.trial_wav), cfg.sid);
  }
  return s;
}

TaskPipeline::TaskPipeline(Session& session, const SidConfig& sid, const TaskSpec& task)
    : session_(session), sid_(sid), task_id_(task.task_id), framer_(sid.frame_ms, sid.hop_ms),
      state_(sid_initial_state(sid)) {
  sid_.validate();
  session_.start_task(task);
}

std::vector<TimelineEntry> TaskPipeline::push(std::span<const float> samples) {
  if (finished_) throw Error(Errc::EventOutOfOrder, "audio after task end");
  history_.insert(history_.end(), samples.begin(), samples.end());
  std::vector<TimelineEntry> out;
  process(framer_.push(samples), out);
  return out;
}

std::vector<TimelineEntry> TaskPipeline::finish() {
  std::vector<TimelineEntry> out;
  if (finished_) return out;
  process(framer_.finish(), out);
  finished_ = true;
  session_.end_task();
  return out;
}

void TaskPipeline::process(const std::vector<Frame>& frames, std::vector<TimelineEntry>& out) {
  for (const auto& f : frames) {
    for (const auto& ev : sid_step(state_, vad_classify(f, sid_), f.start_ms, sid_)) {
      TimelineEntry e;
      e.task_id = task_id_;
      e.event = ev;
      out.push_back(e);

      std::optional<FeatureVector> fv;
      if (ev.kind == SpeechEventKind::UtteranceEnd) {
        // copy just the utterance; span boundaries fall on whole milliseconds
        const auto n = static_cast<std::int64_t>(history_.size());
        const auto a = std::clamp<std::int64_t>(samples_per_ms(1) * ev.span_start_ms - history_start_, 0, n);
        const auto b = std::clamp<std::int64_t>(samples_per_ms(1) * ev.span_end_ms - history_start_, a, n);
        AudioBuffer buf;
        buf.samples.assign(history_.begin() + a, history_.begin() + b);
        fv = extract_utterance_features(buf, 0, ev.span_end_ms - ev.span_start_ms);
      }
      auto r = session_.step(ev, fv ? &*fv : nullptr);
      if (r.trace) {
        TimelineEntry t;
        t.type = TimelineEntry::Type::Trace;
        t.task_id = task_id_;
        t.trace = *r.trace;
        out.push_back(t);
      }
      if (r.decision) {
        TimelineEntry d;
        d.type = TimelineEntry::Type::Backchannel;
        d.task_id = task_id_;
        d.decision = *r.decision;
        out.push_back(d);
      }
    }
    // no utterance can start before the next voiced frame
    if (state_.phase != SidPhase::InUtterance && state_.voiced_run == 0) {
      keep_from_ = samples_per_ms(1) * state_.next_t_ms;
    }
  }
  // compact once the dead prefix dominates, so the erase cost stays amortized
  const std::int64_t drop =
      std::clamp<std::int64_t>(keep_from_ - history_start_, 0, static_cast<std::int64_t>(history_.size()));
  if (drop > 0 && 2 * drop >= static_cast<std::int64_t>(history_.size())) {
    history_.erase(history_.begin(), history_.begin() + drop);
    history_start_ += drop;
  }
}

std::vector<TimelineEntry> simulate(const SessionConfig& cfg, std::span<const std::pair<TaskSpec, AudioBuffer>> tasks,
                                    std::uint64_t seed) {
  Session session = make_session(cfg, seed);
  std::vector<TimelineEntry> timeline;
  for (const auto& [spec, audio] : tasks) {
    if (audio.sample_rate != kSampleRate) throw Error(Errc::UnsupportedFormat, "audio must be 16 kHz");
    TaskPipeline p(session, cfg.sid, spec);
    auto a = p.push(audio.samples);
    auto b = p.finish();
    timeline.insert(timeline.end(), a.begin(), a.end());
    timeline.insert(timeline.end(), b.begin(), b.end());
  }
  return timeline;
}

std::vector<BackchannelDecision> decisions_of(std::span<const TimelineEntry> timeline) {
  std::vector<BackchannelDecision> out;
  for (const auto& e : timeline) {
    if (e.type == TimelineEntry::Type::Backchannel) out.push_back(e.decision);
  }
  return out;
}

}  // namespace bc
