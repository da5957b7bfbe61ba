#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace bc {

enum class Speaker { Assessor, Participant };

struct TranscriptWord {
  Speaker speaker = Speaker::Participant;
  std::string text;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::string utterance_id;
  std::string participant_id;
  std::string task_id;
};

struct Utterance {
  std::string utterance_id;
  std::string participant_id;
  std::string task_id;
  Speaker speaker = Speaker::Participant;
  std::vector<std::string> tokens;  // normalized
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
};

/// Assessor backchannel code: 0 none, 1 reactive, 2 proactive.
enum class BackchannelCode : int { None = 0, Rbc = 1, Pbc = 2 };

struct Lexicon {
  std::set<std::string> rbc_words;
  std::vector<std::vector<std::string>> pbc_phrases;

  void validate() const;
};

/// English/romanized placeholders for the RBC words and PBC phrases.
Lexicon default_lexicon();
Lexicon load_lexicon(const std::filesystem::path& path);
void save_lexicon(const std::filesystem::path& path, const Lexicon& lex);

/// Lowercases and strips surrounding punctuation.
std::string normalize_token(std::string_view raw);
std::vector<std::string> tokenize(std::string_view text);

inline constexpr std::int64_t kMinBackchannelGapMs = 1000;
inline constexpr std::size_t kMaxPbcWords = 8;

/// Rubric coding of one assessor utterance. Gaps are to the assessor's
/// previous and next utterances; RBC wins when both rubrics match.
BackchannelCode code_utterance(const std::vector<std::string>& tokens, std::int64_t gap_prev_ms,
                               std::int64_t gap_next_ms, const Lexicon& lex);

/// Groups words into utterances ordered by (participant_id, start_ms).
/// Validates word timing and single-speaker utterances.
std::vector<Utterance> group_utterances(const std::vector<TranscriptWord>& words);

struct CodedUtterance {
  std::string utterance_id;
  BackchannelCode code = BackchannelCode::None;
};

/// Codes every assessor utterance. Gaps are measured within one task
/// recording (same participant_id and task_id); a missing neighbour counts as
/// an unbounded gap.
std::vector<CodedUtterance> code_transcript(const std::vector<Utterance>& utterances, const Lexicon& lex);

struct CueRef {
  std::string utterance_id;
  std::string participant_id;
  std::string task_id;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
};

struct Cue {
  CueRef ref;
  bool rbc_cue = false;
};

struct TrainingSet {
  std::vector<Cue> cues;
  std::vector<std::string> warnings;  // InsufficientNegatives reports
};

/// Balanced RBC-cue / non-RBC-cue set: n negatives drawn per (participant,
/// task) cell holding n positives. Deterministic in `seed`.
TrainingSet build_training_set(const std::vector<Utterance>& utterances, const Lexicon& lex, std::uint64_t seed);

double cohen_kappa(const std::vector<int>& codes_a, const std::vector<int>& codes_b);

std::vector<TranscriptWord> read_transcript_jsonl(const std::filesystem::path& path);
void write_transcript_jsonl(const std::filesystem::path& path, const std::vector<TranscriptWord>& words);

}  // namespace bc
