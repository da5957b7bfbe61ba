#include "bc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bc/error.hpp"

namespace bc::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void append(std::vector<float>& dst, const std::vector<float>& src) { dst.insert(dst.end(), src.begin(), src.end()); }

const std::vector<std::string> kFillerWords = {"the",  "cat",   "went",   "over", "apple", "river", "seven",
                                               "house", "green", "market", "then", "maybe", "dog",   "blue"};

}  // namespace

std::vector<float> voiced(std::int64_t dur_ms, double f0_start, double f0_end, double amp_start, double amp_end) {
  const auto n = static_cast<std::size_t>(samples_per_ms(1) * dur_ms);
  const std::size_t ramp = std::min<std::size_t>(samples_per_ms(10), n / 2);
  std::vector<float> out(n);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    const double f0 = f0_start + (f0_end - f0_start) * u;
    double amp = amp_start + (amp_end - amp_start) * u;
    if (i < ramp) amp *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / ramp);
    if (n - 1 - i < ramp) amp *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n - 1 - i) / ramp);
    phase += kTwoPi * f0 / kSampleRate;
    double v = 0.0;
    for (int h = 1; h <= 5; ++h) v += std::sin(h * phase) / h;
    out[i] = static_cast<float>(amp * v / 1.5);
  }
  return out;
}

std::vector<float> quiet(std::int64_t dur_ms, Rng& rng, double amp) {
  std::vector<float> out(static_cast<std::size_t>(samples_per_ms(1) * dur_ms));
  for (auto& s : out) s = static_cast<float>(amp * rng.uniform(-1.0, 1.0));
  return out;
}

std::vector<float> cue_utterance(bool positive, std::int64_t dur_ms, Rng& rng) {
  const double f0 = rng.uniform(140.0, 240.0);
  const double amp = rng.uniform(0.2, 0.5);
  if (positive) return voiced(dur_ms, f0, f0 * rng.uniform(0.6, 0.75), amp, amp * rng.uniform(0.15, 0.3));
  return voiced(dur_ms, f0, f0 * rng.uniform(1.15, 1.35), amp, amp * rng.uniform(0.9, 1.1));
}

AudioBuffer tone_then_silence(std::int64_t tone_ms, std::int64_t silence_ms) {
  AudioBuffer b;
  b.samples = voiced(tone_ms, 200.0, 200.0, 0.3, 0.3);
  b.samples.resize(b.samples.size() + static_cast<std::size_t>(samples_per_ms(1) * silence_ms), 0.0f);
  return b;
}

ScriptedSession random_session(std::int64_t duration_ms, Rng& rng) {
  ScriptedSession s;
  std::int64_t t = static_cast<std::int64_t>(rng.uniform(0.0, 3000.0));
  append(s.audio.samples, quiet(t, rng));
  while (t < duration_ms) {
    const auto dur = std::min<std::int64_t>(static_cast<std::int64_t>(rng.uniform(150.0, 4000.0)), duration_ms - t);
    append(s.audio.samples, cue_utterance(rng.uniform() < 0.5, dur, rng));
    s.speech_ms.emplace_back(t, t + dur);
    t += dur;
    if (t >= duration_ms) break;
    const auto gap = std::min<std::int64_t>(static_cast<std::int64_t>(rng.uniform(100.0, 8000.0)), duration_ms - t);
    append(s.audio.samples, quiet(gap, rng));
    t += gap;
  }
  return s;
}

std::vector<double> sample_lognormal(const LogNormalParams& p, std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (auto& v : out) v = p.mu + p.sigma * std::exp(p.s * rng.normal());
  return out;
}

std::vector<double> sample_skewnormal(const SkewNormalParams& p, std::size_t n, Rng& rng) {
  const double delta = p.a / std::sqrt(1.0 + p.a * p.a);
  std::vector<double> out(n);
  for (auto& v : out) {
    const double u0 = rng.normal();
    const double u1 = rng.normal();
    v = p.xi + p.omega * (delta * std::abs(u0) + std::sqrt(1.0 - delta * delta) * u1);
  }
  return out;
}

std::vector<double> sample_skewnormal_in_task(const SkewNormalParams& p, std::size_t n, Rng& rng) {
  std::vector<double> out;
  out.reserve(n);
  std::size_t tries = 0;
  while (out.size() < n) {
    for (double v : sample_skewnormal(p, 1, rng)) {
      if (v >= 0.0 && v < static_cast<double>(p.task_duration_ms)) out.push_back(v);
    }
    if (++tries > 1000 * (n + 10)) throw Error(Errc::InvalidArgument, "skew-normal has almost no mass inside the task");
  }
  return out;
}

PlantedRegression planted_sparse(int n, int p, int k, double noise_sd, Rng& rng) {
  if (k > p) throw Error(Errc::InvalidArgument, "support larger than dimension");
  PlantedRegression r;
  r.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) r.X(i, j) = rng.normal();
  std::vector<int> idx(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) idx[static_cast<std::size_t>(j)] = j;
  for (int j = 0; j < k; ++j) std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(j) + rng.index(static_cast<std::size_t>(p - j))]);
  r.support.assign(idx.begin(), idx.begin() + k);
  std::sort(r.support.begin(), r.support.end());
  r.w = Vector::Zero(p);
  for (int j : r.support) r.w(j) = rng.uniform(1.0, 2.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  r.y = r.X * r.w;
  for (int i = 0; i < n; ++i) r.y(i) += noise_sd * rng.normal();
  return r;
}

Blobs blobs(int n, int dim, double separation, Rng& rng) {
  Vector dir(dim);
  for (int j = 0; j < dim; ++j) dir(j) = rng.normal();
  dir.normalize();
  Blobs b;
  b.X.resize(n, dim);
  b.y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int label = i % 2 == 0 ? 1 : -1;
    b.y[static_cast<std::size_t>(i)] = label;
    for (int j = 0; j < dim; ++j) b.X(i, j) = rng.normal() + label * 0.5 * separation * dir(j);
  }
  return b;
}

Corpus corpus(int participants, const std::vector<std::string>& tasks, std::int64_t task_ms, const Lexicon& lex,
              Rng& rng) {
  Corpus c;
  const std::vector<std::string> rbc(lex.rbc_words.begin(), lex.rbc_words.end());
  int utt_counter = 0;
  for (int pi = 0; pi < participants; ++pi) {
    const std::string pid = "P" + std::to_string(pi + 1);
    for (const auto& task : tasks) {
      AudioBuffer audio;
      std::int64_t t = 500;
      append(audio.samples, quiet(t, rng));
      std::int64_t last_assessor_end = -100000;
      while (t < task_ms - 3000) {
        const bool cue = rng.uniform() < 0.3;
        const auto dur = static_cast<std::int64_t>(rng.uniform(600.0, 2500.0));
        append(audio.samples, cue_utterance(cue, dur, rng));

        const std::string uid = "u" + std::to_string(++utt_counter);
        const int nwords = 1 + static_cast<int>(rng.index(6));
        for (int w = 0; w < nwords; ++w) {
          TranscriptWord word;
          word.speaker = Speaker::Participant;
          word.text = kFillerWords[rng.index(kFillerWords.size())];
          word.start_ms = t + dur * w / nwords;
          word.end_ms = t + dur * (w + 1) / nwords;
          word.utterance_id = uid;
          word.participant_id = pid;
          word.task_id = task;
          c.words.push_back(word);
        }
        t += dur;

        const auto pause = static_cast<std::int64_t>(rng.uniform(2000.0, 6000.0));
        const std::int64_t bc_start = t + static_cast<std::int64_t>(rng.uniform(200.0, 500.0));
        if (cue && bc_start - last_assessor_end >= kMinBackchannelGapMs) {
          TranscriptWord word;
          word.speaker = Speaker::Assessor;
          word.text = rbc[rng.index(rbc.size())];
          word.start_ms = bc_start;
          word.end_ms = bc_start + 350;
          word.utterance_id = "a" + std::to_string(++utt_counter);
          word.participant_id = pid;
          word.task_id = task;
          c.words.push_back(word);
          last_assessor_end = word.end_ms;
        } else if (!cue && pause > 4500 && rng.uniform() < 0.5) {
          // proactive encouragement late in a long pause
          const auto& phrase = lex.pbc_phrases[rng.index(lex.pbc_phrases.size())];
          const std::int64_t start = t + pause - 1500;
          const std::string aid = "a" + std::to_string(++utt_counter);
          for (std::size_t w = 0; w < phrase.size(); ++w) {
            TranscriptWord word;
            word.speaker = Speaker::Assessor;
            word.text = phrase[w];
            word.start_ms = start + static_cast<std::int64_t>(w) * 300;
            word.end_ms = word.start_ms + 250;
            word.utterance_id = aid;
            word.participant_id = pid;
            word.task_id = task;
            c.words.push_back(word);
            last_assessor_end = word.end_ms;
          }
        }
        append(audio.samples, quiet(pause, rng));
        t += pause;
      }
      append(audio.samples, quiet(task_ms - t > 0 ? task_ms - t : 0, rng));
      c.audio[audio_key(pid, task)] = std::move(audio);
    }
  }
  return c;
}

std::vector<TrialRecording> trial_recordings(int n, Rng& rng) {
  std::vector<TrialRecording> out;
  for (int i = 0; i < n; ++i) {
    TrialRecording r;
    r.participant_id = "T" + std::to_string(i + 1);
    r.label = i % 2 == 0 ? 1 : -1;
    append(r.audio.samples, quiet(400, rng));
    const auto dur = static_cast<std::int64_t>(rng.uniform(1500.0, 3000.0));
    if (r.label > 0) {
      const double f0 = rng.uniform(95.0, 130.0);
      const double amp = rng.uniform(0.05, 0.12);
      append(r.audio.samples, voiced(dur, f0, f0 * rng.uniform(0.9, 1.0), amp, amp));
    } else {
      const double f0 = rng.uniform(190.0, 260.0);
      const double amp = rng.uniform(0.35, 0.6);
      append(r.audio.samples, voiced(dur, f0, f0 * rng.uniform(1.1, 1.3), amp, amp));
    }
    append(r.audio.samples, quiet(1000, rng));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace bc::synth
