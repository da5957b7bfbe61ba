#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bc/audio_io.hpp"
#include "bc/coder.hpp"
#include "bc/models.hpp"
#include "bc/rng.hpp"
#include "bc/scoring.hpp"

/// Generators with planted ground truth, used by tests and `gen-synthetic`.
namespace bc::synth {

/// Harmonic "vowel": f0 and amplitude glide linearly across the segment,
/// 10 ms raised-cosine ramps at both ends.
std::vector<float> voiced(std::int64_t dur_ms, double f0_start, double f0_end, double amp_start, double amp_end);

/// Low-level noise, far below the default VAD floor.
std::vector<float> quiet(std::int64_t dur_ms, Rng& rng, double amp = 1e-3);

/// Utterance carrying (positive) or lacking the backchannel-inviting cue:
/// positive = falling pitch and fading energy, negative = rising pitch at
/// steady energy.
std::vector<float> cue_utterance(bool positive, std::int64_t dur_ms, Rng& rng);

/// `tone_ms` of a steady 200 Hz voice followed by `silence_ms` of quiet.
AudioBuffer tone_then_silence(std::int64_t tone_ms, std::int64_t silence_ms);

struct ScriptedSession {
  AudioBuffer audio;
  std::vector<std::pair<std::int64_t, std::int64_t>> speech_ms;  // generated speech extents
};

/// Random alternation of cue utterances (150 ms - 4 s) and pauses
/// (100 ms - 8 s) filling `duration_ms`.
ScriptedSession random_session(std::int64_t duration_ms, Rng& rng);

std::vector<double> sample_lognormal(const LogNormalParams& p, std::size_t n, Rng& rng);
std::vector<double> sample_skewnormal(const SkewNormalParams& p, std::size_t n, Rng& rng);
/// Rejection-sampled to [0, task_duration_ms).
std::vector<double> sample_skewnormal_in_task(const SkewNormalParams& p, std::size_t n, Rng& rng);

struct PlantedRegression {
  Matrix X;
  Vector y;
  Vector w;
  std::vector<int> support;
};

/// X ~ N(0, 1), y = X w* + noise_sd * N(0, 1), `k` nonzero weights of
/// magnitude 1-2 with random signs at random positions.
PlantedRegression planted_sparse(int n, int p, int k, double noise_sd, Rng& rng);

struct Blobs {
  Matrix X;
  std::vector<int> y;
};

/// Two isotropic unit-variance Gaussian clouds whose means are `separation`
/// standard deviations apart along a random direction.
Blobs blobs(int n, int dim, double separation, Rng& rng);

struct Corpus {
  std::vector<TranscriptWord> words;
  std::map<std::string, AudioBuffer> audio;  // key participant_id + "_" + task_id
};

inline std::string audio_key(const std::string& participant, const std::string& task) {
  return participant + "_" + task;
}

/// Conversations in which the assessor answers every cue-positive participant
/// utterance with an RBC word, never a cue-negative one, and fills some long
/// pauses after cue-negative utterances with a PBC phrase. Participant audio is rendered with the
/// matching cue shapes.
Corpus corpus(int participants, const std::vector<std::string>& tasks, std::int64_t task_ms, const Lexicon& lex,
              Rng& rng);

struct TrialRecording {
  std::string participant_id;
  int label = 1;  // +1: needs encouragement, -1: talkative
  AudioBuffer audio;
};

/// Trial-task recordings: +1 participants speak quietly and slowly at low
/// pitch, -1 participants loudly at higher, lively pitch.
std::vector<TrialRecording> trial_recordings(int n, Rng& rng);

}  // namespace bc::synth
