#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bc/coder.hpp"
#include "bc/engine.hpp"
#include "bc/models.hpp"
#include "bc/pipeline.hpp"
#include "bc/scoring.hpp"

namespace bc {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

// ---------------------------------------------------------------------------
// Models

struct ModelFile {
  SvmModel model;
  std::optional<PlattParams> platt;
  Json metadata = Json::object();
};

Json to_json(const ModelFile& m);
ModelFile model_from_json(const Json& j);
ModelFile load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const ModelFile& m);

// ---------------------------------------------------------------------------
// Scoring parameters: {version, weights, thr_pbc, tasks: {id: {lognormal, skewnormal}}}

Json to_json(const TriplePConfig& cfg);
TriplePConfig triple_p_from_json(const Json& j);
TriplePConfig load_scoring(const std::filesystem::path& path);
void save_scoring(const std::filesystem::path& path, const TriplePConfig& cfg);

// ---------------------------------------------------------------------------
// Samples for distribution fitting: {tasks: [{task_id, duration_ms, pause_ms[], pbc_onset_ms[]}]}

struct TaskSamples {
  std::string task_id;
  std::int64_t duration_ms = 60000;
  std::vector<double> pause_ms;
  std::vector<double> pbc_onset_ms;
};

Json to_json(std::span<const TaskSamples> samples);
std::vector<TaskSamples> samples_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Training data

Json to_json(const CueRef& r);
CueRef cue_ref_from_json(const Json& j);

Json to_json(const TrainingSet& ts);
TrainingSet training_set_from_json(const Json& j);

struct DatasetRow {
  CueRef ref;
  int label = 1;  // +1 / -1
  std::vector<double> x;
};

struct Dataset {
  std::string schema_id;
  std::vector<std::string> names;
  std::vector<DatasetRow> rows;

  Matrix matrix() const;
  std::vector<int> labels() const;
};

Json to_json(const Dataset& d);
Dataset dataset_from_json(const Json& j);

Json feature_schema_json();

// ---------------------------------------------------------------------------
// Session configuration and clips

/// Manifest {version, clips: [{category, clip_id, path, transcript, duration_ms}]};
/// relative paths resolve against the manifest's directory.
ClipLibrary load_clip_library(const std::filesystem::path& path);
Json to_json(const ClipLibrary& lib);

/// Loads the session config and every file it references. Relative
/// references resolve against the config file's directory.
SessionConfig load_session_config(const std::filesystem::path& path);
SessionConfig session_config_from_json(const Json& j, const std::filesystem::path& base_dir);

Json to_json(const TaskSpec& t);
TaskSpec task_spec_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Timeline

Json to_json(const SpeechEvent& ev);
SpeechEvent speech_event_from_json(const Json& j);
Json to_json(const PbcTrace& t);
Json to_json(const BackchannelDecision& d);
Json to_json(const TimelineEntry& e);

/// One compact JSON object per line.
void write_timeline(std::ostream& os, std::span<const TimelineEntry> timeline);
std::string timeline_jsonl(std::span<const TimelineEntry> timeline);

}  // namespace bc
