#include "bc/serialization.hpp"

#include <fstream>
#include <sstream>

#include "bc/error.hpp"
#include "bc/features.hpp"

namespace bc {

namespace fs = std::filesystem;

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(Errc::Parse, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(Errc::Io, "write failed: " + path.string());
}

namespace {

template <typename T>
T get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(Errc::Parse, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(Errc::Parse, std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return get<T>(j, key);
}

void check_version(const Json& j) {
  if (j.contains("version") && j.at("version") != kFormatVersion) {
    throw Error(Errc::Parse, "unsupported format version " + j.at("version").dump());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

}  // namespace

// ---------------------------------------------------------------------------

Json to_json(const ModelFile& m) {
  Json j;
  j["version"] = kFormatVersion;
  j["schema_id"] = m.model.schema_id;
  j["feature_indices"] = m.model.feature_indices;
  j["weights"] = m.model.weights;
  j["bias"] = m.model.bias;
  j["standardizer"] = {{"mean", m.model.standardizer.mean}, {"std", m.model.standardizer.stddev}};
  if (m.platt) j["platt"] = {{"alpha", m.platt->alpha}, {"beta", m.platt->beta}};
  j["metadata"] = m.metadata;
  return j;
}

ModelFile model_from_json(const Json& j) {
  check_version(j);
  ModelFile m;
  m.model.schema_id = get<std::string>(j, "schema_id");
  m.model.feature_indices = get<std::vector<int>>(j, "feature_indices");
  m.model.weights = get<std::vector<double>>(j, "weights");
  m.model.bias = get<double>(j, "bias");
  const auto& st = j.at("standardizer");
  m.model.standardizer.mean = get<std::vector<double>>(st, "mean");
  m.model.standardizer.stddev = get<std::vector<double>>(st, "std");
  const auto n = m.model.feature_indices.size();
  if (m.model.weights.size() != n || m.model.standardizer.mean.size() != n || m.model.standardizer.stddev.size() != n) {
    throw Error(Errc::Parse, "model vectors disagree in length");
  }
  for (double s : m.model.standardizer.stddev) {
    if (!(s > 0.0)) throw Error(Errc::Parse, "standardizer std must be positive");
  }
  if (j.contains("platt")) m.platt = PlattParams{get<double>(j["platt"], "alpha"), get<double>(j["platt"], "beta")};
  if (j.contains("metadata")) m.metadata = j["metadata"];
  return m;
}

ModelFile load_model(const fs::path& path) {
  try {
    return model_from_json(read_json(path));
  } catch (const Error& e) {
    if (e.code() == Errc::Io) throw Error(Errc::ModelMissing, e.what());
    throw;
  }
}

void save_model(const fs::path& path, const ModelFile& m) { write_json(path, to_json(m)); }

// ---------------------------------------------------------------------------

Json to_json(const TriplePConfig& cfg) {
  Json j;
  j["version"] = kFormatVersion;
  j["weights"] = {{"pause", cfg.weights.pause},
                  {"progress", cfg.weights.progress},
                  {"participant", cfg.weights.participant}};
  j["thr_pbc"] = cfg.thr_pbc;
  j["tasks"] = Json::object();
  for (const auto& [id, m] : cfg.tasks) {
    j["tasks"][id] = {
        {"lognormal", {{"mu", m.pause.mu}, {"sigma", m.pause.sigma}, {"s", m.pause.s}}},
        {"skewnormal",
         {{"xi", m.progress.xi},
          {"omega", m.progress.omega},
          {"a", m.progress.a},
          {"k", m.progress.k},
          {"bin_ms", m.progress.bin_ms},
          {"duration_ms", m.progress.task_duration_ms}}},
    };
  }
  return j;
}

TriplePConfig triple_p_from_json(const Json& j) {
  check_version(j);
  TriplePConfig cfg;
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    cfg.weights = {get<double>(w, "pause"), get<double>(w, "progress"), get<double>(w, "participant")};
  }
  cfg.thr_pbc = get_or<double>(j, "thr_pbc", cfg.thr_pbc);
  if (j.contains("tasks")) {
    for (const auto& [id, t] : j["tasks"].items()) {
      TaskScoringModel m;
      const auto& ln = t.at("lognormal");
      m.pause = {get<double>(ln, "mu"), get<double>(ln, "sigma"), get<double>(ln, "s"), id};
      const auto& sn = t.at("skewnormal");
      m.progress.xi = get<double>(sn, "xi");
      m.progress.omega = get<double>(sn, "omega");
      m.progress.a = get<double>(sn, "a");
      m.progress.bin_ms = get_or<std::int64_t>(sn, "bin_ms", 100);
      m.progress.task_duration_ms = get<std::int64_t>(sn, "duration_ms");
      // k is derived data; recompute so a hand-edited file cannot break max = 1
      m.progress.k = progress_scale(m.progress);
      cfg.tasks[id] = m;
    }
  }
  cfg.validate();
  return cfg;
}

TriplePConfig load_scoring(const fs::path& path) { return triple_p_from_json(read_json(path)); }

void save_scoring(const fs::path& path, const TriplePConfig& cfg) { write_json(path, to_json(cfg)); }

// ---------------------------------------------------------------------------

Json to_json(std::span<const TaskSamples> samples) {
  Json tasks = Json::array();
  for (const auto& s : samples) {
    tasks.push_back({{"task_id", s.task_id},
                     {"duration_ms", s.duration_ms},
                     {"pause_ms", s.pause_ms},
                     {"pbc_onset_ms", s.pbc_onset_ms}});
  }
  return {{"version", kFormatVersion}, {"tasks", tasks}};
}

std::vector<TaskSamples> samples_from_json(const Json& j) {
  check_version(j);
  std::vector<TaskSamples> out;
  for (const auto& t : get<Json>(j, "tasks")) {
    TaskSamples s;
    s.task_id = get<std::string>(t, "task_id");
    s.duration_ms = get_or<std::int64_t>(t, "duration_ms", 60000);
    s.pause_ms = get_or<std::vector<double>>(t, "pause_ms", {});
    s.pbc_onset_ms = get_or<std::vector<double>>(t, "pbc_onset_ms", {});
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

Json to_json(const CueRef& r) {
  return {{"utterance_id", r.utterance_id},
          {"participant_id", r.participant_id},
          {"task_id", r.task_id},
          {"start_ms", r.start_ms},
          {"end_ms", r.end_ms}};
}

CueRef cue_ref_from_json(const Json& j) {
  CueRef r;
  r.utterance_id = get<std::string>(j, "utterance_id");
  r.participant_id = get<std::string>(j, "participant_id");
  r.task_id = get<std::string>(j, "task_id");
  r.start_ms = get<std::int64_t>(j, "start_ms");
  r.end_ms = get<std::int64_t>(j, "end_ms");
  return r;
}

Json to_json(const TrainingSet& ts) {
  Json cues = Json::array();
  for (const auto& c : ts.cues) cues.push_back({{"ref", to_json(c.ref)}, {"label", c.rbc_cue ? 1 : -1}});
  return {{"version", kFormatVersion}, {"cues", cues}, {"warnings", ts.warnings}};
}

TrainingSet training_set_from_json(const Json& j) {
  check_version(j);
  TrainingSet ts;
  for (const auto& c : get<Json>(j, "cues")) ts.cues.push_back({cue_ref_from_json(c.at("ref")), get<int>(c, "label") > 0});
  ts.warnings = get_or<std::vector<std::string>>(j, "warnings", {});
  return ts;
}

Matrix Dataset::matrix() const {
  Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].x.size() != names.size()) throw Error(Errc::SchemaMismatch, "dataset row width differs from schema");
    for (std::size_t k = 0; k < names.size(); ++k) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i].x[k];
  }
  return X;
}

std::vector<int> Dataset::labels() const {
  std::vector<int> y;
  for (const auto& r : rows) y.push_back(r.label);
  return y;
}

Json to_json(const Dataset& d) {
  Json rows = Json::array();
  for (const auto& r : d.rows) rows.push_back({{"ref", to_json(r.ref)}, {"label", r.label}, {"x", r.x}});
  return {{"version", kFormatVersion}, {"schema_id", d.schema_id}, {"names", d.names}, {"rows", rows}};
}

Dataset dataset_from_json(const Json& j) {
  check_version(j);
  Dataset d;
  d.schema_id = get<std::string>(j, "schema_id");
  d.names = get<std::vector<std::string>>(j, "names");
  for (const auto& r : get<Json>(j, "rows")) {
    DatasetRow row;
    row.ref = cue_ref_from_json(r.at("ref"));
    row.label = get<int>(r, "label");
    if (row.label != 1 && row.label != -1) throw Error(Errc::Parse, "dataset labels must be +1 or -1");
    row.x = get<std::vector<double>>(r, "x");
    if (row.x.size() != d.names.size()) throw Error(Errc::SchemaMismatch, "dataset row width differs from schema");
    d.rows.push_back(std::move(row));
  }
  return d;
}

Json feature_schema_json() {
  return {{"version", kFormatVersion}, {"schema_id", feature_schema_id()}, {"names", feature_names()}};
}

// ---------------------------------------------------------------------------

ClipLibrary load_clip_library(const fs::path& path) {
  const Json j = read_json(path);
  check_version(j);
  ClipLibrary lib;
  for (const auto& c : get<Json>(j, "clips")) {
    ClipRef r;
    r.clip_id = get<std::string>(c, "clip_id");
    r.path = resolve(path.parent_path(), get<std::string>(c, "path")).lexically_normal().string();
    r.transcript = get_or<std::string>(c, "transcript", "");
    r.duration_ms = get_or<std::int64_t>(c, "duration_ms", 0);
    if (r.duration_ms < 0) throw Error(Errc::Parse, "clip duration must be >= 0");
    lib.clips[category_from_string(get<std::string>(c, "category"))].push_back(std::move(r));
  }
  return lib;
}

Json to_json(const ClipLibrary& lib) {
  Json clips = Json::array();
  for (const auto& [cat, list] : lib.clips) {
    for (const auto& c : list) {
      clips.push_back({{"category", to_string(cat)},
                       {"clip_id", c.clip_id},
                       {"path", c.path},
                       {"transcript", c.transcript},
                       {"duration_ms", c.duration_ms}});
    }
  }
  return {{"version", kFormatVersion}, {"clips", clips}};
}

Json to_json(const TaskSpec& t) {
  return {{"task_id", t.task_id},
          {"task_type", to_string(t.task_type)},
          {"duration_ms", t.duration_ms},
          {"prompt_clip", t.prompt_clip}};
}

TaskSpec task_spec_from_json(const Json& j) {
  TaskSpec t;
  t.task_id = get<std::string>(j, "task_id");
  t.task_type = task_type_from_string(get<std::string>(j, "task_type"));
  t.duration_ms = get_or<std::int64_t>(j, "duration_ms", 60000);
  t.prompt_clip = get_or<std::string>(j, "prompt_clip", "");
  return t;
}

SessionConfig session_config_from_json(const Json& j, const fs::path& base) {
  check_version(j);
  SessionConfig cfg;
  cfg.seed = get_or<std::uint64_t>(j, "seed", 1);

  if (j.contains("engine")) {
    const auto& e = j["engine"];
    cfg.engine.cooldown_ms = get_or<std::int64_t>(e, "cooldown_ms", cfg.engine.cooldown_ms);
    cfg.engine.pbc_reset_pause = get_or<bool>(e, "pbc_reset_pause", cfg.engine.pbc_reset_pause);
    cfg.engine.rbc_min_utterance_ms = get_or<std::int64_t>(e, "rbc_min_utterance_ms", cfg.engine.rbc_min_utterance_ms);
    cfg.engine.rbc_enabled = get_or<bool>(e, "rbc_enabled", cfg.engine.rbc_enabled);
    cfg.engine.type3_threshold_offset = get_or<double>(e, "type3_threshold_offset", cfg.engine.type3_threshold_offset);
    cfg.engine.default_participant_score =
        get_or<double>(e, "default_participant_score", cfg.engine.default_participant_score);
  }
  if (j.contains("sid")) {
    const auto& s = j["sid"];
    cfg.sid.energy_floor = get_or<double>(s, "energy_floor", cfg.sid.energy_floor);
    cfg.sid.enter_speech_frames = get_or<int>(s, "enter_speech_frames", cfg.sid.enter_speech_frames);
    cfg.sid.enter_interval_frames = get_or<int>(s, "enter_interval_frames", cfg.sid.enter_interval_frames);
    cfg.sid.tick_ms = get_or<int>(s, "tick_ms", cfg.sid.tick_ms);
    cfg.sid.frame_ms = get_or<int>(s, "frame_ms", cfg.sid.frame_ms);
    cfg.sid.hop_ms = get_or<int>(s, "hop_ms", cfg.sid.hop_ms);
  }
  cfg.sid.validate();
  for (const auto& t : get<Json>(j, "tasks")) cfg.tasks.push_back(task_spec_from_json(t));

  auto models = std::make_shared<EngineModels>();
  const Json mj = get_or<Json>(j, "models", Json::object());
  if (mj.contains("rbc") && cfg.engine.rbc_enabled) {
    models->rbc = load_model(resolve(base, get<std::string>(mj, "rbc"))).model;
  }
  if (mj.contains("participant")) {
    auto pm = load_model(resolve(base, get<std::string>(mj, "participant")));
    models->participant = pm.model;
    models->participant_platt = pm.platt;
  }
  if (mj.contains("scoring")) models->triple_p = load_scoring(resolve(base, get<std::string>(mj, "scoring")));
  cfg.models = models;

  cfg.clips = std::make_shared<ClipLibrary>(
      j.contains("clips") ? load_clip_library(resolve(base, get<std::string>(j, "clips"))) : ClipLibrary{});

  if (j.contains("participant")) {
    const auto& p = j["participant"];
    if (p.contains("score")) cfg.participant_score = get<double>(p, "score");
    if (p.contains("trial_wav")) cfg.trial_wav = resolve(base, get<std::string>(p, "trial_wav"));
  }
  cfg.engine.validate(cfg.sid);
  return cfg;
}

SessionConfig load_session_config(const fs::path& path) {
  return session_config_from_json(read_json(path), path.parent_path());
}

// ---------------------------------------------------------------------------

Json to_json(const SpeechEvent& ev) {
  Json j = {{"kind", to_string(ev.kind)}, {"t_ms", ev.t_ms}};
  if (ev.kind == SpeechEventKind::UtteranceEnd) j["span"] = {ev.span_start_ms, ev.span_end_ms};
  if (ev.kind == SpeechEventKind::IntervalTick) j["pause_ms"] = ev.pause_ms;
  return j;
}

SpeechEvent speech_event_from_json(const Json& j) {
  SpeechEvent ev;
  ev.kind = speech_event_kind_from_string(get<std::string>(j, "kind"));
  ev.t_ms = get<std::int64_t>(j, "t_ms");
  if (j.contains("span")) {
    ev.span_start_ms = j["span"].at(0).get<std::int64_t>();
    ev.span_end_ms = j["span"].at(1).get<std::int64_t>();
  }
  ev.pause_ms = get_or<std::int64_t>(j, "pause_ms", 0);
  return ev;
}

Json to_json(const PbcTrace& t) {
  return {{"t_ms", t.t_ms},   {"pause_ms", t.pause_ms}, {"s_pau", t.s_pau},         {"s_pg", t.s_pg},
          {"s_pt", t.s_pt},   {"score", t.score},       {"threshold", t.threshold}, {"decision", t.decision}};
}

Json to_json(const BackchannelDecision& d) {
  Json j = {{"category", to_string(d.category)}, {"clip_id", d.clip.clip_id}, {"t_ms", d.t_ms}};
  if (d.category == BackchannelCategory::Rbc) {
    j["cause"] = {{"utterance_span", {d.span_start_ms, d.span_end_ms}}, {"d", d.rbc_decision_value}};
  } else if (d.scores) {
    j["cause"] = {{"pause_ms", d.scores->pause_ms}, {"scores", to_json(*d.scores)}};
  }
  return j;
}

Json to_json(const TimelineEntry& e) {
  Json j;
  switch (e.type) {
    case TimelineEntry::Type::Event:
      j = to_json(e.event);
      j["type"] = "event";
      break;
    case TimelineEntry::Type::Trace:
      j = to_json(e.trace);
      j["type"] = "trace";
      break;
    case TimelineEntry::Type::Backchannel:
      j = to_json(e.decision);
      j["type"] = "backchannel";
      break;
  }
  j["task_id"] = e.task_id;
  return j;
}

void write_timeline(std::ostream& os, std::span<const TimelineEntry> timeline) {
  for (const auto& e : timeline) os << to_json(e).dump() << '\n';
}

std::string timeline_jsonl(std::span<const TimelineEntry> timeline) {
  std::ostringstream os;
  write_timeline(os, timeline);
  return os.str();
}

}  // namespace bc
