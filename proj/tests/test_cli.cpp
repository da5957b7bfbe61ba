#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Run {
  int rc = -1;
  std::string out;
};

// Runs the CLI with stdout captured; stderr goes to a side file.
Run run(const std::string& args) {
  const std::string cmd = std::string(BCENGINE_EXE) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(p);
  r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("bc_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

Json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return Json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool within(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

// The demo session config with every relative path made absolute, so it can
// live outside the data directory.
Json absolute_demo_config() {
  const fs::path data(BC_DATA_DIR);
  Json j = read_json_file(data / "session_demo.json");
  for (auto& [k, v] : j["models"].items()) v = (data / v.get<std::string>()).string();
  j["clips"] = (data / j["clips"].get<std::string>()).string();
  for (auto& t : j["tasks"]) {
    const auto clip = t.value("prompt_clip", std::string());
    if (!clip.empty()) t["prompt_clip"] = (data / clip).string();
  }
  return j;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("gen-synthetic distributions then fit-distributions recovers the planted parameters") {
  TempDir dir("fit");
  REQUIRE(run("gen-synthetic distributions --seed 7 --out " + q(dir.path)).rc == 0);
  const auto r = run("fit-distributions --samples " + q(dir.path / "samples.json") + " --out " + q(dir.path / "scoring.json"));
  REQUIRE(r.rc == 0);
  const Json fitted = Json::parse(r.out);
  const Json planted = read_json_file(dir.path / "planted.json");
  REQUIRE(planted.size() == 2);
  for (const auto& [task, truth] : planted.items()) {
    INFO(task);
    REQUIRE(fitted.contains(task));
    const auto& ln = fitted[task]["lognormal"];
    const auto& sn = fitted[task]["skewnormal"];
    CHECK(within(ln["sigma"].get<double>(), truth["lognormal"]["sigma"].get<double>(), 0.05));
    CHECK(within(ln["s"].get<double>(), truth["lognormal"]["s"].get<double>(), 0.05));
    CHECK(within(sn["xi"].get<double>(), truth["skewnormal"]["xi"].get<double>(), 0.10));
    CHECK(within(sn["omega"].get<double>(), truth["skewnormal"]["omega"].get<double>(), 0.10));
    CHECK(within(sn["a"].get<double>(), truth["skewnormal"]["a"].get<double>(), 0.10));
  }
  const Json scoring = read_json_file(dir.path / "scoring.json");
  CHECK(scoring.contains("tasks"));
}

TEST_CASE("corpus pipeline trains an RBC model that generalizes") {
  TempDir dir("pipe");
  const fs::path d = dir.path;
  REQUIRE(run("gen-synthetic corpus --seed 5 --count 10 --out " + q(d / "corpus")).rc == 0);
  REQUIRE(run("code-transcripts --transcripts " + q(d / "corpus/transcripts.jsonl") + " --out " + q(d / "coded.jsonl")).rc == 0);
  CHECK(fs::file_size(d / "coded.jsonl") > 0);
  REQUIRE(run("build-dataset --transcripts " + q(d / "corpus/transcripts.jsonl") + " --seed 5 --out " + q(d / "cues.json")).rc == 0);
  REQUIRE(run("extract-features --cues " + q(d / "cues.json") + " --audio-dir " + q(d / "corpus/audio") + " --out " +
              q(d / "dataset.json"))
              .rc == 0);
  REQUIRE(run("select-features --dataset " + q(d / "dataset.json") + " --seed 5 --out " + q(d / "selection.json")).rc == 0);
  const auto tr = run("train-rbc --dataset " + q(d / "dataset.json") + " --selection " + q(d / "selection.json") +
                      " --holdout 0.25 --seed 5 --out " + q(d / "rbc.json"));
  REQUIRE(tr.rc == 0);
  const Json report = Json::parse(tr.out);
  REQUIRE(report.contains("holdout"));
  CHECK(report["holdout_rows"].get<int>() > 0);
  CHECK(report["holdout"]["accuracy"].get<double>() >= 0.95);
  REQUIRE(report.contains("cv"));
  CHECK(report["cv"]["folds"].get<int>() == 5);
  CHECK(report["cv"]["accuracy"].get<double>() >= 0.9);
  CHECK(read_json_file(d / "rbc.json")["metadata"]["cfg"]["folds"].get<int>() == 5);
  CHECK(run("train-rbc --dataset " + q(d / "dataset.json") + " --folds 1 --out " + q(d / "x.json")).rc == 2);

  const auto ev = run("evaluate --model " + q(d / "rbc.json") + " --dataset " + q(d / "dataset.json"));
  CHECK(ev.rc == 0);
  CHECK_FALSE(ev.out.empty());
}

TEST_CASE("simulate is reproducible") {
  TempDir dir("sim");
  const fs::path cfg = fs::path(BC_DATA_DIR) / "session_demo.json";
  const fs::path wav = fs::path(BC_FIXTURE_DIR) / "fluency.wav";
  const std::string base = "simulate --config " + q(cfg) + " --wav " + q(wav) + " --task fluency --out ";
  REQUIRE(run(base + q(dir.path / "a.jsonl")).rc == 0);
  REQUIRE(run(base + q(dir.path / "b.jsonl")).rc == 0);
  const auto a = slurp(dir.path / "a.jsonl");
  CHECK_FALSE(a.empty());
  CHECK(a == slurp(dir.path / "b.jsonl"));
  CHECK(a.find("\"category\":\"PBC\"") != std::string::npos);
}

TEST_CASE("exit codes") {
  TempDir dir("codes");
  SUBCASE("usage") {
    CHECK(run("").rc == 2);
    CHECK(run("no-such-command").rc == 2);
    CHECK(run("simulate --wav x.wav").rc == 2);
    CHECK(run("gen-synthetic bogus --out " + q(dir.path)).rc == 2);
  }
  SUBCASE("help is success") { CHECK(run("--help").rc == 0); }
  SUBCASE("data") {
    const fs::path cfg = fs::path(BC_DATA_DIR) / "session_demo.json";
    CHECK(run("simulate --config " + q(cfg) + " --wav " + q(dir.path / "missing.wav")).rc == 3);
    write(dir.path / "bad.json", "{ not json");
    CHECK(run("fit-distributions --samples " + q(dir.path / "bad.json") + " --out " + q(dir.path / "o.json")).rc == 3);
    write(dir.path / "not.wav", "RIFF....nope");
    CHECK(run("simulate --config " + q(cfg) + " --wav " + q(dir.path / "not.wav")).rc == 3);
  }
  SUBCASE("model") {
    Json j = absolute_demo_config();
    j["models"]["rbc"] = (dir.path / "absent_model.json").string();
    write(dir.path / "cfg.json", j.dump());
    const fs::path wav = fs::path(BC_FIXTURE_DIR) / "fluency.wav";
    CHECK(run("simulate --config " + q(dir.path / "cfg.json") + " --wav " + q(wav)).rc == 4);
  }
}
