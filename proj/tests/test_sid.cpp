#include <doctest.h>

#include "bc/error.hpp"
#include "bc/sid.hpp"
#include "support.hpp"

using namespace bc;

namespace {

struct Emitted {
  std::int64_t at_frame_ms;
  SpeechEvent ev;
  bool operator==(const Emitted&) const = default;
};

std::vector<Emitted> run_sid(const std::vector<bool>& voiced, const SidConfig& cfg = {}) {
  auto st = sid_initial_state(cfg);
  std::vector<Emitted> out;
  for (std::size_t k = 0; k < voiced.size(); ++k) {
    const auto t = static_cast<std::int64_t>(k) * cfg.hop_ms;
    for (const auto& ev : sid_step(st, voiced[k], t, cfg)) out.push_back({t, ev});
  }
  return out;
}

// Whole-sequence reference: scans for runs directly instead of stepping a state machine.
std::vector<Emitted> reference(const std::vector<bool>& v, const SidConfig& cfg = {}) {
  const auto hop = cfg.hop_ms;
  const std::size_t n = v.size();
  auto all = [&](std::size_t from, std::size_t len, bool want) {
    if (from + len > n) return false;
    for (std::size_t i = from; i < from + len; ++i) {
      if (v[i] != want) return false;
    }
    return true;
  };
  std::vector<Emitted> out;
  std::int64_t origin = 0;
  std::int64_t anchor = cfg.tick_ms;
  std::size_t k = 0;
  const auto S = static_cast<std::size_t>(cfg.enter_speech_frames);
  const auto U = static_cast<std::size_t>(cfg.enter_interval_frames);
  while (k < n) {
    // outside an utterance: find the next frame that completes a voiced run of S
    std::size_t open = n;
    for (std::size_t i = k; i < n; ++i) {
      if (i + 1 >= k + S && all(i + 1 - S, S, true)) {
        open = i;
        break;
      }
    }
    for (std::size_t i = k; i < std::min(open, n); ++i) {
      const auto t = static_cast<std::int64_t>(i) * hop;
      if (!v[i] && t >= anchor && (t - anchor) % cfg.tick_ms == 0) {
        SpeechEvent ev;
        ev.kind = SpeechEventKind::IntervalTick;
        ev.t_ms = t;
        ev.pause_ms = t - origin;
        out.push_back({t, ev});
      }
    }
    if (open == n) break;
    const std::size_t start = open + 1 - S;
    SpeechEvent s;
    s.kind = SpeechEventKind::UtteranceStart;
    s.t_ms = static_cast<std::int64_t>(start) * hop;
    out.push_back({static_cast<std::int64_t>(open) * hop, s});
    // inside: first unvoiced run of length U after the opening
    std::size_t close = n;
    for (std::size_t j = open + 1; j < n; ++j) {
      if (v[j - 1] && all(j, U, false)) {
        close = j;
        break;
      }
    }
    if (close == n) break;
    SpeechEvent e;
    e.kind = SpeechEventKind::UtteranceEnd;
    e.t_ms = static_cast<std::int64_t>(close) * hop;
    e.span_start_ms = s.t_ms;
    e.span_end_ms = e.t_ms;
    const std::size_t emit = close + U - 1;
    out.push_back({static_cast<std::int64_t>(emit) * hop, e});
    origin = e.t_ms;
    anchor = static_cast<std::int64_t>(emit + 1) * hop;
    k = emit + 1;
  }
  return out;
}

std::vector<bool> pattern(std::initializer_list<std::pair<bool, int>> runs) {
  std::vector<bool> v;
  for (auto [b, n] : runs) v.insert(v.end(), static_cast<std::size_t>(n), b);
  return v;
}

int count_kind(const std::vector<Emitted>& e, SpeechEventKind k) {
  int c = 0;
  for (const auto& x : e) c += x.ev.kind == k;
  return c;
}

}  // namespace

TEST_CASE("vad boundary is strict") {
  SidConfig cfg;
  Frame zero;
  zero.samples.assign(400, 0.0f);
  CHECK_FALSE(vad_classify(zero, cfg));
  Frame loud;
  loud.samples = test::sine(200, 25, 1.0).samples;
  CHECK(vad_classify(loud, cfg));

  cfg.energy_floor = 0.25;
  Frame edge = zero;
  edge.samples[7] = 0.5f;  // energy exactly 0.25
  CHECK_FALSE(vad_classify(edge, cfg));
  edge.samples[8] = 1e-3f;
  CHECK(vad_classify(edge, cfg));
}

TEST_CASE("30 voiced then 100 unvoiced frames") {
  const auto e = run_sid(pattern({{true, 30}, {false, 100}}));
  REQUIRE(e.size() >= 3);
  CHECK(e[0].ev.kind == SpeechEventKind::UtteranceStart);
  CHECK(e[0].ev.t_ms == 0);
  CHECK(e[0].at_frame_ms + 10 == 200);  // detected once the 20th frame completes
  CHECK(e[1].ev.kind == SpeechEventKind::UtteranceEnd);
  CHECK(e[1].ev.span_start_ms == 0);
  CHECK(e[1].ev.span_end_ms == 300);
  CHECK(e[1].at_frame_ms + 10 == 1000);
  std::int64_t t = 1000;
  for (std::size_t i = 2; i < e.size(); ++i, t += 100) {
    CHECK(e[i].ev.kind == SpeechEventKind::IntervalTick);
    CHECK(e[i].ev.t_ms == t);
    CHECK(e[i].ev.pause_ms == t - 300);
  }
  CHECK(e[2].ev.pause_ms == 700);
  CHECK(e == reference(pattern({{true, 30}, {false, 100}})));
}

TEST_CASE("short voiced run opens nothing and ticks continue") {
  const auto e = run_sid(pattern({{true, 10}, {false, 100}}));
  CHECK(count_kind(e, SpeechEventKind::UtteranceStart) == 0);
  CHECK(count_kind(e, SpeechEventKind::UtteranceEnd) == 0);
  CHECK(count_kind(e, SpeechEventKind::IntervalTick) == 10);  // 100 .. 1000 ms
  CHECK(e.front().ev.t_ms == 100);
  CHECK(e.front().ev.pause_ms == 100);
}

TEST_CASE("alternating frames never open an utterance") {
  std::vector<bool> v(5000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 2 == 0;
  const auto e = run_sid(v);
  CHECK(count_kind(e, SpeechEventKind::UtteranceStart) == 0);
  for (const auto& x : e) CHECK(x.ev.kind == SpeechEventKind::IntervalTick);
}

TEST_CASE("state machine agrees with the reference on random sequences") {
  Rng rng(44);
  for (int trial = 0; trial < 300; ++trial) {
    const auto v = test::random_runs(rng, 200 + rng.index(2000), 1 + static_cast<int>(rng.index(150)));
    const auto got = run_sid(v);
    const auto want = reference(v);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      INFO("trial " << trial << " event " << i);
      REQUIRE(got[i] == want[i]);
    }
  }
}

TEST_CASE("event stream invariants") {
  Rng rng(45);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = test::random_runs(rng, 3000, 120);
    const auto e = run_sid(v);
    bool open = false;
    std::int64_t last_t = -1;
    std::int64_t last_pause = -1;
    for (const auto& x : e) {
      CHECK(x.ev.t_ms > last_t);
      last_t = x.ev.t_ms;
      switch (x.ev.kind) {
        case SpeechEventKind::UtteranceStart:
          REQUIRE_FALSE(open);
          open = true;
          break;
        case SpeechEventKind::UtteranceEnd:
          REQUIRE(open);
          open = false;
          last_pause = -1;
          CHECK(x.ev.span_end_ms > x.ev.span_start_ms);
          break;
        case SpeechEventKind::IntervalTick:
          REQUIRE_FALSE(open);
          CHECK(x.ev.pause_ms > last_pause);
          last_pause = x.ev.pause_ms;
          break;
      }
    }
  }
}

TEST_CASE("silence shorter than the close threshold never splits") {
  Rng rng(46);
  for (int trial = 0; trial < 400; ++trial) {
    const int gap = static_cast<int>(rng.index(140));
    const int lead = static_cast<int>(rng.index(100));
    const int a = 20 + static_cast<int>(rng.index(80));
    const int b = 20 + static_cast<int>(rng.index(80));
    const auto v = pattern({{false, lead}, {true, a}, {false, gap}, {true, b}, {false, 200}});
    const auto e = run_sid(v);
    const int utterances = count_kind(e, SpeechEventKind::UtteranceEnd);
    INFO("gap " << gap);
    CHECK(utterances == (gap < 70 ? 1 : 2));
    CHECK(e == reference(v));
  }
}

TEST_CASE("non-monotonic time") {
  SidConfig cfg;
  auto st = sid_initial_state(cfg);
  sid_step(st, false, 0, cfg);
  sid_step(st, false, 10, cfg);
  for (std::int64_t bad : {10, 0, 30, 15}) {
    auto copy = st;
    try {
      sid_step(copy, false, bad, cfg);
      FAIL("expected NonMonotonicTime");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NonMonotonicTime);
    }
  }
}

TEST_CASE("config validation") {
  SidConfig cfg;
  cfg.tick_ms = 105;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.enter_speech_frames = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.enter_interval_frames = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("detect_utterances on audio") {
  const auto audio = test::concat({test::silence(500), test::sine(150, 800), test::silence(1000),
                                   test::sine(150, 400), test::silence(200)});
  const auto spans = detect_utterances(audio, {});
  REQUIRE(spans.size() == 2);
  // the frame at 480 ms already overlaps the tone by 5 ms
  CHECK(spans[0].start_ms == 480);
  CHECK(spans[0].end_ms == 1300);
  CHECK(spans[0].closed);
  CHECK_FALSE(spans[1].closed);
  CHECK(spans[1].start_ms == 2280);
}

TEST_CASE("event kind names round trip") {
  for (auto k : {SpeechEventKind::UtteranceStart, SpeechEventKind::UtteranceEnd, SpeechEventKind::IntervalTick}) {
    CHECK(speech_event_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(speech_event_kind_from_string("nope"), Error);
}
