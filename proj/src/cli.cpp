#include "bc/cli.hpp"

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "bc/coder.hpp"
#include "bc/error.hpp"
#include "bc/features.hpp"
#include "bc/models.hpp"
#include "bc/pipeline.hpp"
#include "bc/scoring.hpp"
#include "bc/serialization.hpp"
#include "bc/service.hpp"
#include "bc/synthetic.hpp"

namespace bc::cli {

namespace fs = std::filesystem;

namespace {

int exit_code_for(Errc c) {
  switch (c) {
    case Errc::InvalidArgument:
      return kExitUsage;
    case Errc::ModelMissing:
    case Errc::DidNotConverge:
    case Errc::SingleClass:
    case Errc::SchemaMismatch:
    case Errc::FitDiverged:
    case Errc::WeightsNotNormalized:
      return kExitModel;
    default:
      return kExitData;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << text;
}

Lexicon lexicon_or_default(const std::string& path) { return path.empty() ? default_lexicon() : load_lexicon(path); }

std::vector<Utterance> load_utterances(const std::string& path) { return group_utterances(read_transcript_jsonl(path)); }

// --------------------------------------------------------------------------

struct CodeOpts {
  std::string transcripts, lexicon, out, against;
};

int cmd_code(const CodeOpts& o) {
  const auto coded = code_transcript(load_utterances(o.transcripts), lexicon_or_default(o.lexicon));
  std::ostringstream os;
  std::vector<int> codes;
  for (const auto& c : coded) {
    os << Json{{"utterance_id", c.utterance_id}, {"code", static_cast<int>(c.code)}}.dump() << '\n';
    codes.push_back(static_cast<int>(c.code));
  }
  write_text(o.out, os.str());
  std::map<int, int> counts;
  for (int c : codes) ++counts[c];
  std::cout << "coded " << codes.size() << " assessor utterances: " << counts[1] << " RBC, " << counts[2] << " PBC, "
            << counts[0] << " none\n";
  if (!o.against.empty()) {
    std::map<std::string, int> other;
    std::ifstream in(o.against);
    if (!in) throw Error(Errc::Io, "cannot open " + o.against);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      other[j.at("utterance_id").get<std::string>()] = j.at("code").get<int>();
    }
    std::vector<int> a, b;
    for (const auto& c : coded) {
      auto it = other.find(c.utterance_id);
      if (it == other.end()) continue;
      a.push_back(static_cast<int>(c.code));
      b.push_back(it->second);
    }
    std::cout << "cohen_kappa " << cohen_kappa(a, b) << " over " << a.size() << " utterances\n";
  }
  return kExitOk;
}

struct BuildOpts {
  std::string transcripts, lexicon, out;
  std::uint64_t seed = 1;
};

int cmd_build(const BuildOpts& o) {
  const auto ts = build_training_set(load_utterances(o.transcripts), lexicon_or_default(o.lexicon), o.seed);
  for (const auto& w : ts.warnings) std::cerr << "warning: " << w << '\n';
  write_json(o.out, to_json(ts));
  std::cout << "cues " << ts.cues.size() << '\n';
  return kExitOk;
}

struct ExtractOpts {
  std::string cues, audio_dir, out;
};

int cmd_extract(const ExtractOpts& o) {
  const auto ts = training_set_from_json(read_json(o.cues));
  Dataset ds;
  ds.schema_id = feature_schema_id();
  ds.names = feature_names();
  std::map<std::string, AudioBuffer> cache;
  for (const auto& cue : ts.cues) {
    const auto key = synth::audio_key(cue.ref.participant_id, cue.ref.task_id);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, read_wav(fs::path(o.audio_dir) / (key + ".wav"))).first;
    DatasetRow row;
    row.ref = cue.ref;
    row.label = cue.rbc_cue ? 1 : -1;
    row.x = extract_utterance_features(it->second, cue.ref.start_ms, cue.ref.end_ms).values;
    ds.rows.push_back(std::move(row));
  }
  write_json(o.out, to_json(ds));
  std::cout << "rows " << ds.rows.size() << " dim " << ds.names.size() << '\n';
  return kExitOk;
}

struct SelectOpts {
  std::string dataset, out;
  LassoConfig lasso;
  std::uint64_t seed = 1;
  int threads = 1;
};

int cmd_select(const SelectOpts& o) {
  const auto ds = dataset_from_json(read_json(o.dataset));
  Vector y(static_cast<Eigen::Index>(ds.rows.size()));
  for (std::size_t i = 0; i < ds.rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = ds.rows[i].label;
  const auto sel = stability_select(ds.matrix(), y, o.lasso, o.seed, o.threads);
  for (const auto& w : sel.warnings) std::cerr << "warning: " << w << '\n';
  std::vector<std::string> names;
  for (int j : sel.selected) names.push_back(ds.names[static_cast<std::size_t>(j)]);
  write_json(o.out, {{"version", kFormatVersion},
                     {"schema_id", ds.schema_id},
                     {"selected", sel.selected},
                     {"selected_names", names},
                     {"frequencies", sel.frequencies},
                     {"rounds_run", sel.rounds_run},
                     {"lambda", o.lasso.lambda},
                     {"threshold", o.lasso.select_threshold},
                     {"seed", o.seed}});
  std::cout << "selected " << sel.selected.size() << " of " << ds.names.size() << " features\n";
  return kExitOk;
}

struct TrainOpts {
  std::string dataset, selection, out;
  SvmConfig svm;
  double holdout = 0.25;
  int folds = 5;
  std::uint64_t seed = 1;
};

int cmd_train_rbc(const TrainOpts& o) {
  if (!(o.holdout >= 0.0 && o.holdout < 1.0)) throw Error(Errc::InvalidArgument, "--holdout must be in [0, 1)");
  if (o.folds == 1 || o.folds < 0) throw Error(Errc::InvalidArgument, "--folds must be 0 (off) or at least 2");
  const auto ds = dataset_from_json(read_json(o.dataset));
  std::vector<int> cols;
  if (!o.selection.empty()) {
    const Json sel = read_json(o.selection);
    if (sel.at("schema_id") != ds.schema_id) throw Error(Errc::SchemaMismatch, "selection and dataset schemas differ");
    cols = sel.at("selected").get<std::vector<int>>();
    if (cols.empty()) std::cerr << "warning: empty feature selection, training on all features\n";
  }
  const auto n = ds.rows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(o.seed, 1));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  const auto n_test = static_cast<std::size_t>(o.holdout * static_cast<double>(n));
  const Matrix X = ds.matrix();
  const auto labels = ds.labels();
  auto take = [&](std::size_t from, std::size_t to, Matrix& Xs, std::vector<int>& ys) {
    Xs.resize(static_cast<Eigen::Index>(to - from), X.cols());
    ys.clear();
    for (std::size_t k = from; k < to; ++k) {
      Xs.row(static_cast<Eigen::Index>(k - from)) = X.row(static_cast<Eigen::Index>(order[k]));
      ys.push_back(labels[order[k]]);
    }
  };
  Matrix Xtr, Xte;
  std::vector<int> ytr, yte;
  take(n_test, n, Xtr, ytr);
  take(0, n_test, Xte, yte);

  // k-fold cross-validation inside the training split
  Json cv = nullptr;
  if (o.folds >= 2) {
    if (Xtr.rows() < o.folds) throw Error(Errc::InvalidArgument, "fewer training rows than folds");
    double acc_sum = 0.0;
    for (int f = 0; f < o.folds; ++f) {
      Matrix Xa, Xb;
      std::vector<int> ya, yb;
      std::vector<Eigen::Index> in_a, in_b;
      for (Eigen::Index i = 0; i < Xtr.rows(); ++i) (i % o.folds == f ? in_b : in_a).push_back(i);
      Xa.resize(static_cast<Eigen::Index>(in_a.size()), X.cols());
      Xb.resize(static_cast<Eigen::Index>(in_b.size()), X.cols());
      for (std::size_t k = 0; k < in_a.size(); ++k) {
        Xa.row(static_cast<Eigen::Index>(k)) = Xtr.row(in_a[k]);
        ya.push_back(ytr[static_cast<std::size_t>(in_a[k])]);
      }
      for (std::size_t k = 0; k < in_b.size(); ++k) {
        Xb.row(static_cast<Eigen::Index>(k)) = Xtr.row(in_b[k]);
        yb.push_back(ytr[static_cast<std::size_t>(in_b[k])]);
      }
      const auto m = svm_train(Xa, ya, o.svm, o.seed, cols, ds.schema_id);
      std::vector<int> pred;
      for (Eigen::Index i = 0; i < Xb.rows(); ++i) {
        const Vector row = Xb.row(i);
        pred.push_back(sign_with_tie(svm_decision_row(m, {row.data(), static_cast<std::size_t>(row.size())})));
      }
      acc_sum += eval_metrics(pred, yb).accuracy;
    }
    cv = {{"folds", o.folds}, {"accuracy", acc_sum / o.folds}};
  }

  ModelFile mf;
  mf.model = svm_train(Xtr, ytr, o.svm, o.seed, cols, ds.schema_id);
  std::vector<double> dtr;
  std::vector<int> y01;
  for (Eigen::Index i = 0; i < Xtr.rows(); ++i) {
    const Vector row = Xtr.row(i);
    dtr.push_back(svm_decision_row(mf.model, {row.data(), static_cast<std::size_t>(row.size())}));
    y01.push_back(ytr[static_cast<std::size_t>(i)] > 0 ? 1 : 0);
  }
  mf.platt = platt_fit(dtr, y01);

  Json report = {{"train_rows", Xtr.rows()}, {"holdout_rows", Xte.rows()}, {"features", mf.model.feature_indices.size()}};
  if (!cv.is_null()) report["cv"] = cv;
  if (Xte.rows() > 0) {
    std::vector<int> pred;
    for (Eigen::Index i = 0; i < Xte.rows(); ++i) {
      const Vector row = Xte.row(i);
      pred.push_back(sign_with_tie(svm_decision_row(mf.model, {row.data(), static_cast<std::size_t>(row.size())})));
    }
    const auto m = eval_metrics(pred, yte);
    report["holdout"] = {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  }
  mf.metadata = {{"seed", o.seed},
                 {"cfg", {{"c", o.svm.c}, {"epochs", o.svm.epochs}, {"holdout", o.holdout}, {"folds", o.folds}}},
                 {"report", report}};
  save_model(o.out, mf);
  std::cout << report.dump() << '\n';
  return kExitOk;
}

struct FitOpts {
  std::string samples, out;
  TriplePWeights weights;
  double thr = 0.75;
  std::int64_t bin_ms = 100;
};

int cmd_fit(const FitOpts& o) {
  TriplePConfig cfg;
  cfg.weights = o.weights;
  cfg.thr_pbc = o.thr;
  Json reports = Json::object();
  for (const auto& t : samples_from_json(read_json(o.samples))) {
    FitReport rp, rs;
    TaskScoringModel m;
    m.pause = fit_lognormal(t.pause_ms, &rp);
    m.pause.task_id = t.task_id;
    m.progress = fit_skewnormal(t.pbc_onset_ms, t.duration_ms, o.bin_ms, &rs);
    for (const auto& w : rp.warnings) std::cerr << "warning: " << t.task_id << " pause: " << w << '\n';
    for (const auto& w : rs.warnings) std::cerr << "warning: " << t.task_id << " progress: " << w << '\n';
    cfg.tasks[t.task_id] = m;
    reports[t.task_id] = {
        {"lognormal", {{"mu", m.pause.mu}, {"sigma", m.pause.sigma}, {"s", m.pause.s}, {"ks", rp.ks_statistic}}},
        {"skewnormal",
         {{"xi", m.progress.xi}, {"omega", m.progress.omega}, {"a", m.progress.a}, {"ks", rs.ks_statistic}}}};
  }
  cfg.validate();
  save_scoring(o.out, cfg);
  std::cout << reports.dump(2) << '\n';
  return kExitOk;
}

struct TrialOpts {
  std::string trials, out;
  SvmConfig svm;
  std::uint64_t seed = 1;
};

int cmd_train_participant(const TrialOpts& o) {
  const Json j = read_json(o.trials);
  const fs::path base = fs::path(o.trials).parent_path();
  const SidConfig sid;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (const auto& t : j.at("trials")) {
    fs::path wav = t.at("wav").get<std::string>();
    if (wav.is_relative()) wav = base / wav;
    const auto audio = read_wav(wav);
    const auto spans = detect_utterances(audio, sid);
    if (spans.empty()) {
      std::cerr << "warning: no speech in " << wav.string() << ", skipped\n";
      continue;
    }
    const auto longest = std::max_element(spans.begin(), spans.end(), [](const auto& a, const auto& b) {
      return a.end_ms - a.start_ms < b.end_ms - b.start_ms;
    });
    rows.push_back(extract_utterance_features(audio, longest->start_ms, longest->end_ms).values);
    labels.push_back(t.at("label").get<int>() > 0 ? 1 : -1);
  }
  Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kFeatureDim));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  ModelFile mf;
  mf.model = svm_train(X, labels, o.svm, o.seed, {}, feature_schema_id());
  std::vector<double> ds;
  std::vector<int> y01;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.push_back(svm_decision_row(mf.model, rows[i]));
    y01.push_back(labels[i] > 0 ? 1 : 0);
  }
  mf.platt = platt_fit(ds, y01);
  mf.metadata = {{"seed", o.seed}, {"cfg", {{"c", o.svm.c}, {"epochs", o.svm.epochs}}}, {"trials", rows.size()}};
  save_model(o.out, mf);
  std::cout << "participant model on " << rows.size() << " trials, platt alpha " << mf.platt->alpha << " beta "
            << mf.platt->beta << '\n';
  return kExitOk;
}

std::vector<std::pair<TaskSpec, AudioBuffer>> load_task_audio(const SessionConfig& cfg,
                                                              const std::vector<std::string>& wavs,
                                                              const std::vector<std::string>& task_ids) {
  if (wavs.empty()) throw Error(Errc::InvalidArgument, "at least one --wav is required");
  if (!task_ids.empty() && task_ids.size() != wavs.size()) {
    throw Error(Errc::InvalidArgument, "give one --task per --wav or none");
  }
  if (task_ids.empty() && wavs.size() > cfg.tasks.size()) {
    throw Error(Errc::InvalidArgument, "more WAV files than configured tasks");
  }
  std::vector<std::pair<TaskSpec, AudioBuffer>> out;
  for (std::size_t i = 0; i < wavs.size(); ++i) {
    const TaskSpec& spec = task_ids.empty() ? cfg.tasks[i] : cfg.task(task_ids[i]);
    out.emplace_back(spec, read_wav(wavs[i]));
  }
  return out;
}

struct SimOpts {
  std::string config, out;
  std::vector<std::string> wavs, tasks;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimOpts& o) {
  const auto cfg = load_session_config(o.config);
  const auto inputs = load_task_audio(cfg, o.wavs, o.tasks);
  const auto timeline = simulate(cfg, inputs, o.seed.value_or(cfg.seed));
  const auto text = timeline_jsonl(timeline);
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_text(o.out, text);
    std::size_t rbc = 0, pbc = 0;
    for (const auto& d : decisions_of(timeline)) (d.category == BackchannelCategory::Rbc ? rbc : pbc)++;
    std::cout << "timeline " << timeline.size() << " records, " << rbc << " RBC, " << pbc << " PBC\n";
  }
  return kExitOk;
}

struct TuneOpts {
  std::string config, wav, task, out;
  std::vector<double> thresholds;
  std::vector<double> w_pause, w_progress;
};

int cmd_tune(const TuneOpts& o) {
  const auto base = load_session_config(o.config);
  const auto inputs = load_task_audio(base, {o.wav}, o.task.empty() ? std::vector<std::string>{} : std::vector{o.task});
  const auto& bw = base.models->triple_p.weights;
  const auto thrs = o.thresholds.empty() ? std::vector{base.models->triple_p.thr_pbc} : o.thresholds;
  const auto wps = o.w_pause.empty() ? std::vector{bw.pause} : o.w_pause;
  const auto wgs = o.w_progress.empty() ? std::vector{bw.progress} : o.w_progress;

  std::ostringstream csv;
  csv << "thr_pbc,w_pause,w_progress,w_participant,t_ms,s_pau,s_pg,s_pt,score,decision\n";
  for (double wp : wps) {
    for (double wg : wgs) {
      const double wt = 1.0 - wp - wg;
      if (wt < -1e-12) {
        std::cerr << "skipping w_pause=" << wp << " w_progress=" << wg << ": weights exceed 1\n";
        continue;
      }
      for (double thr : thrs) {
        auto models = std::make_shared<EngineModels>(*base.models);
        models->triple_p.weights = {wp, wg, std::max(0.0, wt)};
        models->triple_p.thr_pbc = thr;
        models->triple_p.validate();
        SessionConfig cfg = base;
        cfg.models = models;
        std::size_t pbcs = 0;
        for (const auto& e : simulate(cfg, inputs, cfg.seed)) {
          if (e.type == TimelineEntry::Type::Backchannel && e.decision.category == BackchannelCategory::Pbc) ++pbcs;
          if (e.type != TimelineEntry::Type::Trace) continue;
          const auto& t = e.trace;
          csv << thr << ',' << wp << ',' << wg << ',' << std::max(0.0, wt) << ',' << t.t_ms << ',' << t.s_pau << ','
              << t.s_pg << ',' << t.s_pt << ',' << t.score << ',' << (t.decision ? 1 : 0) << '\n';
        }
        std::cerr << "thr_pbc=" << thr << " w=(" << wp << "," << wg << "," << std::max(0.0, wt) << ") -> " << pbcs
                  << " PBC\n";
      }
    }
  }
  if (o.out.empty()) {
    std::cout << csv.str();
  } else {
    write_text(o.out, csv.str());
  }
  return kExitOk;
}

struct EvalOpts {
  std::string model, dataset;
};

int cmd_evaluate(const EvalOpts& o) {
  const auto mf = load_model(o.model);
  const auto ds = dataset_from_json(read_json(o.dataset));
  if (ds.schema_id != mf.model.schema_id) throw Error(Errc::SchemaMismatch, "model and dataset schemas differ");
  std::vector<int> pred, truth;
  for (const auto& r : ds.rows) {
    pred.push_back(sign_with_tie(svm_decision_row(mf.model, r.x)));
    truth.push_back(r.label);
  }
  const auto m = eval_metrics(pred, truth);
  std::cout << Json{{"rows", ds.rows.size()},
                    {"accuracy", m.accuracy},
                    {"precision", m.precision},
                    {"recall", m.recall},
                    {"f1", m.f1}}
                   .dump()
            << '\n';
  return kExitOk;
}

struct ServeOpts {
  std::string config, addr;
};

TcpServer* g_server = nullptr;

int cmd_serve(const ServeOpts& o) {
  auto registry = std::make_shared<ConfigRegistry>();
  (*registry)["default"] = std::make_shared<const SessionConfig>(load_session_config(o.config));
  TcpServer server(registry, o.addr.empty() ? default_listen_address() : o.addr);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "listening on port " << server.port() << std::endl;
  server.run();
  g_server = nullptr;
  return kExitOk;
}

struct GenOpts {
  std::string kind, out;
  std::uint64_t seed = 7;
  int count = 0;
  std::int64_t duration_ms = 60000;
};

int cmd_gen(const GenOpts& o) {
  Rng rng(o.seed);
  const fs::path out(o.out);
  fs::create_directories(out);
  if (o.kind == "distributions") {
    // planted ground truth written next to the samples
    const std::size_t n = o.count > 0 ? static_cast<std::size_t>(o.count) : 10000;
    struct Planted {
      std::string task;
      LogNormalParams pause;
      SkewNormalParams progress;
    };
    std::vector<Planted> planted = {
        {"serial7", {0.0, 700.0, 0.8, "serial7"}, {20000.0, 9000.0, 2.0, 1.0, 100, 60000}},
        {"fluency", {0.0, 2500.0, 0.9, "fluency"}, {35000.0, 8000.0, -2.0, 1.0, 100, 60000}},
    };
    std::vector<TaskSamples> samples;
    Json truth = Json::object();
    for (const auto& p : planted) {
      TaskSamples s;
      s.task_id = p.task;
      s.duration_ms = p.progress.task_duration_ms;
      s.pause_ms = synth::sample_lognormal(p.pause, n, rng);
      s.pbc_onset_ms = synth::sample_skewnormal_in_task(p.progress, n, rng);
      samples.push_back(std::move(s));
      truth[p.task] = {{"lognormal", {{"mu", p.pause.mu}, {"sigma", p.pause.sigma}, {"s", p.pause.s}}},
                       {"skewnormal", {{"xi", p.progress.xi}, {"omega", p.progress.omega}, {"a", p.progress.a}}}};
    }
    write_json(out / "samples.json", to_json(samples));
    write_json(out / "planted.json", truth);
  } else if (o.kind == "corpus") {
    const int participants = o.count > 0 ? o.count : 8;
    const auto c = synth::corpus(participants, {"fluency", "serial7"}, o.duration_ms, default_lexicon(), rng);
    write_transcript_jsonl(out / "transcripts.jsonl", c.words);
    fs::create_directories(out / "audio");
    for (const auto& [key, audio] : c.audio) write_wav(out / "audio" / (key + ".wav"), audio);
  } else if (o.kind == "participants") {
    const int n = o.count > 0 ? o.count : 40;
    Json trials = Json::array();
    fs::create_directories(out / "trials");
    for (const auto& t : synth::trial_recordings(n, rng)) {
      const std::string name = "trials/" + t.participant_id + ".wav";
      write_wav(out / name, t.audio);
      trials.push_back({{"participant_id", t.participant_id}, {"wav", name}, {"label", t.label}});
    }
    write_json(out / "trials.json", {{"version", kFormatVersion}, {"trials", trials}});
  } else if (o.kind == "session-wav") {
    const auto s = synth::random_session(o.duration_ms, rng);
    write_wav(out / "session.wav", s.audio);
    Json spans = Json::array();
    for (const auto& [a, b] : s.speech_ms) spans.push_back({a, b});
    write_json(out / "session_speech.json", {{"speech_ms", spans}});
  } else if (o.kind == "fluency-fixture") {
    write_wav(out / "fluency.wav", synth::tone_then_silence(3000, 12000));
  } else {
    throw Error(Errc::InvalidArgument, "unknown kind '" + o.kind + "'");
  }
  std::cout << "wrote " << o.kind << " to " << out.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Real-time backchannel engine: training, simulation and session service."};
  app.require_subcommand(1);
  std::function<int()> action;

  CodeOpts code;
  auto* c = app.add_subcommand("code-transcripts", "Rubric-code assessor utterances in a word-aligned transcript");
  c->add_option("--transcripts", code.transcripts, "Transcript JSONL")->required();
  c->add_option("--lexicon", code.lexicon, "Lexicon JSON (default: built-in placeholders)");
  c->add_option("--out", code.out, "Coded JSONL output")->required();
  c->add_option("--against", code.against, "Second coding (JSONL) to report Cohen's kappa against");
  c->callback([&] { action = [&] { return cmd_code(code); }; });

  BuildOpts build;
  auto* b = app.add_subcommand("build-dataset", "Assemble balanced RBC-cue training references");
  b->add_option("--transcripts", build.transcripts, "Transcript JSONL")->required();
  b->add_option("--lexicon", build.lexicon, "Lexicon JSON");
  b->add_option("--seed", build.seed, "Negative sampling seed");
  b->add_option("--out", build.out, "Cue list JSON")->required();
  b->callback([&] { action = [&] { return cmd_build(build); }; });

  ExtractOpts ext;
  auto* e = app.add_subcommand("extract-features", "Compute utterance functionals for a cue list");
  e->add_option("--cues", ext.cues, "Cue list JSON")->required();
  e->add_option("--audio-dir", ext.audio_dir, "Directory of <participant>_<task>.wav")->required();
  e->add_option("--out", ext.out, "Dataset JSON")->required();
  e->callback([&] { action = [&] { return cmd_extract(ext); }; });

  SelectOpts sel;
  auto* s = app.add_subcommand("select-features", "LASSO stability selection");
  s->add_option("--dataset", sel.dataset, "Dataset JSON")->required();
  s->add_option("--lambda", sel.lasso.lambda, "L1 strength")->capture_default_str();
  s->add_option("--rounds", sel.lasso.rounds, "Subsample rounds")->capture_default_str();
  s->add_option("--threshold", sel.lasso.select_threshold, "Selection frequency cutoff")->capture_default_str();
  s->add_option("--fraction", sel.lasso.subsample_fraction, "Subsample fraction")->capture_default_str();
  s->add_option("--seed", sel.seed, "Seed");
  s->add_option("--threads", sel.threads, "Worker threads");
  s->add_option("--out", sel.out, "Selection JSON")->required();
  s->callback([&] { action = [&] { return cmd_select(sel); }; });

  TrainOpts tr;
  auto* t = app.add_subcommand("train-rbc", "Train the RBC-cue classifier");
  t->add_option("--dataset", tr.dataset, "Dataset JSON")->required();
  t->add_option("--selection", tr.selection, "Selection JSON from select-features");
  t->add_option("--c", tr.svm.c, "Hinge loss weight")->capture_default_str();
  t->add_option("--epochs", tr.svm.epochs, "Epochs")->capture_default_str();
  t->add_option("--holdout", tr.holdout, "Held-out fraction")->capture_default_str();
  t->add_option("--folds", tr.folds, "Cross-validation folds on the training split (0: off)")->capture_default_str();
  t->add_option("--seed", tr.seed, "Seed");
  t->add_option("--out", tr.out, "Model JSON")->required();
  t->callback([&] { action = [&] { return cmd_train_rbc(tr); }; });

  FitOpts fit;
  auto* f = app.add_subcommand("fit-distributions", "Fit pause and progress distributions per task");
  f->add_option("--samples", fit.samples, "Samples JSON")->required();
  f->add_option("--w-pause", fit.weights.pause, "Pause weight")->capture_default_str();
  f->add_option("--w-progress", fit.weights.progress, "Progress weight")->capture_default_str();
  f->add_option("--w-participant", fit.weights.participant, "Participant weight")->capture_default_str();
  f->add_option("--thr", fit.thr, "PBC threshold")->capture_default_str();
  f->add_option("--bin-ms", fit.bin_ms, "Progress bin width")->capture_default_str();
  f->add_option("--out", fit.out, "Scoring JSON")->required();
  f->callback([&] { action = [&] { return cmd_fit(fit); }; });

  TrialOpts trial;
  auto* p = app.add_subcommand("train-participant", "Train the participant score model and its calibration");
  p->add_option("--trials", trial.trials, "Trials JSON {trials:[{participant_id, wav, label}]}")->required();
  p->add_option("--c", trial.svm.c, "Hinge loss weight")->capture_default_str();
  p->add_option("--epochs", trial.svm.epochs, "Epochs")->capture_default_str();
  p->add_option("--seed", trial.seed, "Seed");
  p->add_option("--out", trial.out, "Model JSON")->required();
  p->callback([&] { action = [&] { return cmd_train_participant(trial); }; });

  TuneOpts tune;
  auto* u = app.add_subcommand("tune", "Sweep weights and threshold, print score traces as CSV");
  u->add_option("--config", tune.config, "Session config JSON")->required();
  u->add_option("--wav", tune.wav, "Task recording")->required();
  u->add_option("--task", tune.task, "Task id (default: first configured)");
  u->add_option("--thr", tune.thresholds, "Thresholds to sweep");
  u->add_option("--w-pause", tune.w_pause, "Pause weights to sweep");
  u->add_option("--w-progress", tune.w_progress, "Progress weights to sweep");
  u->add_option("--out", tune.out, "CSV output (default: stdout)");
  u->callback([&] { action = [&] { return cmd_tune(tune); }; });

  SimOpts sim;
  auto* m = app.add_subcommand("simulate", "Run recordings through the engine offline, write a JSONL timeline");
  m->add_option("--config", sim.config, "Session config JSON")->required();
  m->add_option("--wav", sim.wavs, "Task recording (repeatable)")->required();
  m->add_option("--task", sim.tasks, "Task id per --wav (default: configured order)");
  m->add_option("--seed", sim.seed, "Session seed (default: from config)");
  m->add_option("--out", sim.out, "Timeline output (default: stdout)");
  m->callback([&] { action = [&] { return cmd_simulate(sim); }; });

  EvalOpts ev;
  auto* v = app.add_subcommand("evaluate", "Accuracy, precision, recall and F1 of a model on a dataset");
  v->add_option("--model", ev.model, "Model JSON")->required();
  v->add_option("--dataset", ev.dataset, "Dataset JSON")->required();
  v->callback([&] { action = [&] { return cmd_evaluate(ev); }; });

  ServeOpts srv;
  auto* r = app.add_subcommand("serve", "Run the streaming session service");
  r->add_option("--config", srv.config, "Session config JSON")->required();
  r->add_option("--addr", srv.addr, "host:port (default: $BC_ENGINE_ADDR or 127.0.0.1:7700)");
  r->callback([&] { action = [&] { return cmd_serve(srv); }; });

  GenOpts gen;
  auto* g = app.add_subcommand("gen-synthetic", "Generate synthetic data with planted parameters");
  g->add_option("kind", gen.kind, "distributions | corpus | participants | session-wav | fluency-fixture")
      ->required()
      ->check(CLI::IsMember({"distributions", "corpus", "participants", "session-wav", "fluency-fixture"}));
  g->add_option("--seed", gen.seed, "Seed")->capture_default_str();
  g->add_option("--count", gen.count, "Samples / participants / trials");
  g->add_option("--duration-ms", gen.duration_ms, "Task or session length")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->callback([&] { action = [&] { return cmd_gen(gen); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  try {
    return action();
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return exit_code_for(err.code());
  } catch (const Json::exception& err) {
    std::cerr << "error: malformed JSON: " << err.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  }
}

}  // namespace bc::cli
