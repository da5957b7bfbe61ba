#include "bc/coder.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <nlohmann/json.hpp>

#include "bc/error.hpp"
#include "bc/rng.hpp"

namespace bc {

using nlohmann::json;

void Lexicon::validate() const {
  if (rbc_words.empty() || pbc_phrases.empty()) throw Error(Errc::InvalidArgument, "lexicon lists must be non-empty");
  for (const auto& w : rbc_words) {
    if (w.empty() || tokenize(w).size() != 1) throw Error(Errc::InvalidArgument, "RBC entry '" + w + "' is not one token");
  }
  for (const auto& p : pbc_phrases) {
    if (p.empty() || p.size() > 3) throw Error(Errc::InvalidArgument, "PBC phrases must have 1-3 words");
  }
}

Lexicon default_lexicon() {
  Lexicon lex;
  lex.rbc_words = {"hmm", "oh", "uh", "ah", "huh", "mm", "mhm", "uh-huh", "yeah", "right", "ok"};
  for (const char* p : {"keep going", "next", "understand", "great", "awesome", "no rush", "anything else",
                        "go on", "take your time", "what else", "good", "continue"}) {
    lex.pbc_phrases.push_back(tokenize(p));
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  Lexicon lex;
  try {
    const json j = json::parse(in);
    for (const auto& w : j.at("rbc_words")) lex.rbc_words.insert(normalize_token(w.get<std::string>()));
    for (const auto& p : j.at("pbc_phrases")) lex.pbc_phrases.push_back(tokenize(p.get<std::string>()));
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, path.string() + ": " + e.what());
  }
  lex.validate();
  return lex;
}

void save_lexicon(const std::filesystem::path& path, const Lexicon& lex) {
  json j;
  j["rbc_words"] = json::array();
  for (const auto& w : lex.rbc_words) j["rbc_words"].push_back(w);
  j["pbc_phrases"] = json::array();
  for (const auto& p : lex.pbc_phrases) {
    std::string s;
    for (const auto& t : p) s += (s.empty() ? "" : " ") + t;
    j["pbc_phrases"].push_back(s);
  }
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

std::string normalize_token(std::string_view raw) {
  auto is_punct = [](unsigned char c) { return c < 0x80 && std::ispunct(c) && c != '-' && c != '\''; };
  std::size_t b = 0, e = raw.size();
  while (b < e && is_punct(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && is_punct(static_cast<unsigned char>(raw[e - 1]))) --e;
  std::string out(raw.substr(b, e - b));
  for (char& c : out) {
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      auto tok = normalize_token(text.substr(i, j - i));
      if (!tok.empty()) out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

static bool contains_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  return std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end();
}

BackchannelCode code_utterance(const std::vector<std::string>& tokens, std::int64_t gap_prev_ms,
                               std::int64_t gap_next_ms, const Lexicon& lex) {
  if (tokens.empty()) throw Error(Errc::EmptyUtterance, "assessor utterance has no tokens");
  const bool isolated = gap_prev_ms >= kMinBackchannelGapMs && gap_next_ms >= kMinBackchannelGapMs;
  if (!isolated) return BackchannelCode::None;
  if (tokens.size() == 1 && lex.rbc_words.contains(tokens.front())) return BackchannelCode::Rbc;
  if (tokens.size() <= kMaxPbcWords) {
    for (const auto& p : lex.pbc_phrases) {
      if (contains_phrase(tokens, p)) return BackchannelCode::Pbc;
    }
  }
  return BackchannelCode::None;
}

std::vector<Utterance> group_utterances(const std::vector<TranscriptWord>& words) {
  std::map<std::string, Utterance> by_id;
  std::vector<std::string> order;
  for (const auto& w : words) {
    if (w.start_ms >= w.end_ms) {
      throw Error(Errc::Parse, "word '" + w.text + "' in " + w.utterance_id + " has start_ms >= end_ms");
    }
    auto [it, inserted] = by_id.try_emplace(w.utterance_id);
    Utterance& u = it->second;
    if (inserted) {
      order.push_back(w.utterance_id);
      u.utterance_id = w.utterance_id;
      u.participant_id = w.participant_id;
      u.task_id = w.task_id;
      u.speaker = w.speaker;
      u.start_ms = w.start_ms;
    } else {
      if (u.speaker != w.speaker) throw Error(Errc::Parse, "utterance " + w.utterance_id + " mixes speakers");
      if (w.start_ms < u.end_ms) throw Error(Errc::Parse, "utterance " + w.utterance_id + " words out of order");
    }
    u.end_ms = w.end_ms;
    for (auto& t : tokenize(w.text)) u.tokens.push_back(std::move(t));
  }
  std::vector<Utterance> out;
  out.reserve(order.size());
  for (const auto& id : order) out.push_back(std::move(by_id[id]));
  std::stable_sort(out.begin(), out.end(), [](const Utterance& a, const Utterance& b) {
    if (a.participant_id != b.participant_id) return a.participant_id < b.participant_id;
    return a.start_ms < b.start_ms;
  });
  return out;
}

namespace {

constexpr std::int64_t kUnbounded = INT64_MAX / 4;

// Assessor utterance indices per recording (participant, task), time-ordered.
// Each task recording has its own clock.
std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> assessor_index(
    const std::vector<Utterance>& utts) {
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> conv;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    if (utts[i].speaker == Speaker::Assessor) conv[{utts[i].participant_id, utts[i].task_id}].push_back(i);
  }
  for (auto& [_, idx] : conv) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return utts[a].start_ms < utts[b].start_ms; });
  }
  return conv;
}

std::map<std::string, BackchannelCode> code_map(const std::vector<Utterance>& utts, const Lexicon& lex) {
  std::map<std::string, BackchannelCode> codes;
  for (const auto& [_, idx] : assessor_index(utts)) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Utterance& u = utts[idx[k]];
      const std::int64_t gap_prev = k == 0 ? kUnbounded : u.start_ms - utts[idx[k - 1]].end_ms;
      const std::int64_t gap_next = k + 1 == idx.size() ? kUnbounded : utts[idx[k + 1]].start_ms - u.end_ms;
      codes[u.utterance_id] = u.tokens.empty() ? BackchannelCode::None : code_utterance(u.tokens, gap_prev, gap_next, lex);
    }
  }
  return codes;
}

}  // namespace

std::vector<CodedUtterance> code_transcript(const std::vector<Utterance>& utterances, const Lexicon& lex) {
  const auto codes = code_map(utterances, lex);
  std::vector<CodedUtterance> out;
  for (const auto& u : utterances) {
    if (u.speaker == Speaker::Assessor) out.push_back({u.utterance_id, codes.at(u.utterance_id)});
  }
  return out;
}

TrainingSet build_training_set(const std::vector<Utterance>& utterances, const Lexicon& lex, std::uint64_t seed) {
  const auto codes = code_map(utterances, lex);

  // Participant utterances per (participant, task), time-ordered.
  using Key = std::pair<std::string, std::string>;
  std::map<Key, std::vector<std::size_t>> participant_utts;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const auto& u = utterances[i];
    if (u.speaker == Speaker::Participant) participant_utts[{u.participant_id, u.task_id}].push_back(i);
  }
  for (auto& [_, idx] : participant_utts) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return utterances[a].start_ms < utterances[b].start_ms;
    });
  }

  // The participant utterance immediately preceding each assessor backchannel.
  std::map<Key, std::set<std::size_t>> positives, backchanneled;
  for (const auto& bc_utt : utterances) {
    if (bc_utt.speaker != Speaker::Assessor) continue;
    const auto code = codes.at(bc_utt.utterance_id);
    if (code == BackchannelCode::None) continue;
    const Key key{bc_utt.participant_id, bc_utt.task_id};
    auto it = participant_utts.find(key);
    if (it == participant_utts.end()) continue;
    std::optional<std::size_t> prev;
    for (std::size_t i : it->second) {
      if (utterances[i].end_ms <= bc_utt.start_ms) prev = i;
      else break;
    }
    if (!prev) continue;
    backchanneled[key].insert(*prev);
    if (code == BackchannelCode::Rbc) positives[key].insert(*prev);
  }

  auto ref_of = [&](std::size_t i) {
    const auto& u = utterances[i];
    return CueRef{u.utterance_id, u.participant_id, u.task_id, u.start_ms, u.end_ms};
  };

  TrainingSet ts;
  Rng rng(seed);
  for (const auto& [key, pos] : positives) {
    std::vector<std::size_t> candidates;
    for (std::size_t i : participant_utts[key]) {
      if (!backchanneled[key].contains(i)) candidates.push_back(i);
    }
    const std::size_t n = pos.size();
    const std::string cell = "(" + key.first + ", " + key.second + ")";
    if (candidates.empty()) {
      ts.warnings.push_back("InsufficientNegatives" + cell + ": no candidates, " + std::to_string(n) +
                            " positives dropped");
      continue;
    }
    std::vector<std::size_t> negatives;
    if (candidates.size() >= n) {
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = k + rng.index(candidates.size() - k);
        std::swap(candidates[k], candidates[j]);
        negatives.push_back(candidates[k]);
      }
    } else {
      ts.warnings.push_back("InsufficientNegatives" + cell + ": " + std::to_string(candidates.size()) +
                            " candidates for " + std::to_string(n) + " positives, sampled with replacement");
      for (std::size_t k = 0; k < n; ++k) negatives.push_back(candidates[rng.index(candidates.size())]);
    }
    for (std::size_t i : participant_utts[key]) {
      if (pos.contains(i)) ts.cues.push_back({ref_of(i), true});
    }
    for (std::size_t i : negatives) ts.cues.push_back({ref_of(i), false});
  }
  return ts;
}

double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(Errc::LengthMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " codes");
  }
  std::map<int, double> pa, pb;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const auto n = static_cast<double>(a.size());
  const double po = agree / n;
  double pe = 0.0;
  for (const auto& [code, ca] : pa) {
    if (auto it = pb.find(code); it != pb.end()) pe += (ca / n) * (it->second / n);
  }
  if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

static std::string speaker_name(Speaker s) { return s == Speaker::Assessor ? "assessor" : "participant"; }

std::vector<TranscriptWord> read_transcript_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::vector<TranscriptWord> words;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      TranscriptWord w;
      const auto spk = j.at("speaker").get<std::string>();
      if (spk == "assessor") w.speaker = Speaker::Assessor;
      else if (spk == "participant") w.speaker = Speaker::Participant;
      else throw Error(Errc::Parse, "unknown speaker '" + spk + "'");
      w.text = j.at("text").get<std::string>();
      w.start_ms = j.at("start_ms").get<std::int64_t>();
      w.end_ms = j.at("end_ms").get<std::int64_t>();
      w.utterance_id = j.at("utterance_id").get<std::string>();
      w.participant_id = j.at("participant_id").get<std::string>();
      w.task_id = j.at("task_id").get<std::string>();
      words.push_back(std::move(w));
    } catch (const json::exception& e) {
      throw Error(Errc::Parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return words;
}

void write_transcript_jsonl(const std::filesystem::path& path, const std::vector<TranscriptWord>& words) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  for (const auto& w : words) {
    json j = {{"speaker", speaker_name(w.speaker)}, {"text", w.text},           {"start_ms", w.start_ms},
              {"end_ms", w.end_ms},                 {"utterance_id", w.utterance_id},
              {"participant_id", w.participant_id}, {"task_id", w.task_id}};
    out << j.dump() << "\n";
  }
}

}  // namespace bc
