// Copyright 2026 The kws-dtw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Criteria 5 to 10 share three desk-scale
// pipeline runs (configs/desk.json with seeds 1, 2 and 3) plus a repeat of
// seed 1.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dtw_oracle.h"
#include "eval_oracle.h"
#include "kws/baselines.h"
#include "kws/config.h"
#include "kws/dtw.h"
#include "kws/error.h"
#include "kws/eval.h"
#include "kws/features.h"
#include "kws/nn.h"
#include "kws/pipeline.h"
#include "kws/targets.h"
#include "kws/train.h"
#include "nn_oracle.h"
#include "test_util.h"

namespace kws {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string Fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

void Progress(const std::string& what) { std::fprintf(stderr, "... %s\n", what.c_str()); }

Outcome DtwOracle() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> len(1, 4);
  double worst = 0;
  const int pairs = 1000;
  for (int i = 0; i < pairs; ++i) {
    const FrameMatrix a = testing::RandomFrames(rng, len(rng), 2);
    const FrameMatrix b = testing::RandomFrames(rng, len(rng), 2);
    worst = std::max(worst, std::abs(DtwCost(a, b) - testing::OracleDtw(a, b)));
  }
  const double secs = Seconds(start);
  return {worst <= 1e-12 && secs < 10,
          Fmt("%.0f pairs, max |diff| %.2e, %.2f s", pairs, worst, secs)};
}

Outcome CostBounds() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> ex_len(1, 10), utt_len(1, 40), num(1, 4), kind(0, 3);
  int sweeps = 0;
  bool ok = NormalizeScore(0.0) == 1.0 && NormalizeScore(2.0) == 0.0;
  double lo = 2, hi = 0;
  for (int trial = 0; trial < 6000; ++trial) {
    ExemplarSet set;
    set.keyword_id = "k";
    const int dim = 1 + trial % 4;
    for (int e = num(rng); e > 0; --e) {
      set.exemplars.push_back(
          testing::RandomSequence(rng, "k/" + std::to_string(e), ex_len(rng), dim));
    }
    FrameMatrix utt = testing::RandomFrames(rng, utt_len(rng), dim);
    // Exact copies and sign flips drive costs to both ends of the range.
    const FrameMatrix& ex = set.exemplars[0].frames;
    if (kind(rng) == 0 && utt.rows() >= ex.rows()) utt.topRows(ex.rows()) = ex;
    if (kind(rng) == 1 && utt.rows() >= ex.rows()) utt.topRows(ex.rows()) = -ex;
    SweepConfig cfg;
    cfg.frame_skip = 1 + trial % 3;
    if (trial % 5 == 0) cfg.window_factors = {0.7, 1.0, 1.4};
    for (double c : {KeywordCost(set, utt, cfg), KeywordCostAvg(set, utt, cfg)}) {
      ok = ok && c >= 0 && c <= 2;
      lo = std::min(lo, c);
      hi = std::max(hi, c);
      const double y = NormalizeScore(c);
      ok = ok && y >= 0 && y <= 1;
    }
    sweeps += 2 * static_cast<int>(set.exemplars.size());
  }
  return {ok && sweeps >= 10000,
          Fmt("%.0f sweeps, costs in [%.3g, %.3g], anchors exact", sweeps, lo, hi)};
}

Outcome Gradients() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0;
  int unresolved = 0, checked = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    for (const auto& [name, layers] : testing::PerKindModels()) {
      const auto r = testing::CheckRandomModel(4, layers, 6, 1.0, seed);
      worst = std::max({worst, r.max_param_error, r.max_input_error});
      unresolved += r.unresolved;
      checked += r.checked;
    }
    const auto r = testing::CheckRandomModel(
        3, BuildLayerSpecs(testing::ToyDefaultArchitecture(), 2), 3, 0.5, seed);
    worst = std::max({worst, r.max_param_error, r.max_input_error});
    unresolved += r.unresolved;
    checked += r.checked;
  }
  const double secs = Seconds(start);
  return {worst < 1e-4 && unresolved == 0 && secs < 60,
          Fmt("20 seeds, %.0f coordinates, max rel err %.2e, %.0f on a kink, %.1f s", checked,
              worst, unresolved, secs)};
}

Outcome AucOracle() {
  std::mt19937_64 rng(404);
  double worst = 0;
  const int instances = 1000;
  for (int i = 0; i < instances; ++i) {
    const auto [scores, labels] = testing::RandomInstance(rng, 50);
    worst = std::max(
        worst, std::abs(ComputeRoc(scores, labels).auc - testing::MannWhitneyAuc(scores, labels)));
  }
  return {worst <= 1e-12, Fmt("%.0f instances, max |diff| %.2e", instances, worst)};
}

// ---------------------------------------------------------------------------
// Desk-scale runs.

struct DeskRun {
  uint64_t seed = 0;
  fs::path dir;
  int exit_code = -1;
  std::string message;
  double seconds = 0;
  std::map<std::string, double> auc;  // system -> macro test AUC
};

DeskRun RunDesk(const fs::path& work, uint64_t seed, int workers) {
  PipelineConfig cfg =
      LoadConfig<PipelineConfig>(std::string(KWS_SOURCE_DIR) + "/configs/desk.json");
  cfg.synth.seed = seed;
  cfg.work_dir = work.string();
  PipelineOptions opt;
  opt.workers = workers;
  DeskRun run;
  run.seed = seed;
  run.dir = work;
  const auto start = std::chrono::steady_clock::now();
  const PipelineResult r = RunPipeline(cfg, opt);
  run.seconds = Seconds(start);
  run.exit_code = r.exit_code;
  run.message = r.message;
  if (r.exit_code != 0) return run;
  for (const auto& system : cfg.systems) {
    run.auc[system] =
        ReadEvalReport((work / "report" / ("report_" + Slug(system) + ".json")).string()).macro.auc;
  }
  Progress(Fmt("desk seed %.0f: %.0f s, AUC ks %.4f qbye %.4f", seed, run.seconds,
               run.auc["dtw-ks"], run.auc["dtw-qbye"]) +
           Fmt(" cnn-dtw %.4f cnn %.4f", run.auc["cnn-dtw"], run.auc["cnn"]));
  return run;
}

Outcome SystemOrdering(const std::vector<DeskRun>& runs) {
  bool ok = true;
  double total = 0;
  std::string detail;
  for (const auto& r : runs) {
    total += r.seconds;
    if (r.exit_code != 0) return {false, "pipeline failed: " + r.message};
    const double ks = r.auc.at("dtw-ks"), qbye = r.auc.at("dtw-qbye");
    const double cnn_dtw = r.auc.at("cnn-dtw"), cnn = r.auc.at("cnn");
    const bool seed_ok = ks >= qbye && qbye >= cnn_dtw && cnn_dtw > cnn && cnn_dtw - cnn >= 0.05;
    ok = ok && seed_ok;
    detail += Fmt("seed %.0f: ", r.seed) +
              Fmt("%.3f >= %.3f >= %.3f > %.3f", ks, qbye, cnn_dtw, cnn) +
              (seed_ok ? "; " : " (violated); ");
  }
  ok = ok && total < 30 * 60;
  return {ok, detail + Fmt("%.0f s total", total)};
}

Outcome SpeedRatio(const std::vector<DeskRun>& runs) {
  bool ok = true;
  std::string detail = "cnn-dtw vs dtw-ks throughput:";
  for (const auto& r : runs) {
    if (r.exit_code != 0) return {false, "pipeline failed"};
    std::ifstream in(r.dir / "bench" / "bench.json");
    const json bench = json::parse(in);
    const double ratio = bench["speedup_vs_dtw_ks"]["cnn-dtw"].get<double>();
    ok = ok && ratio >= 10;
    detail += Fmt(" seed %.0f %.1fx", r.seed, ratio);
  }
  return {ok, detail};
}

Outcome MinMeanRelation(const std::vector<DeskRun>& runs) {
  int64_t pairs = 0, violations = 0;
  for (const auto& r : runs) {
    if (r.exit_code != 0) return {false, "pipeline failed"};
    const ScoreSet ks = ReadScores((r.dir / "scores" / "dtw_ks.ksc").string());
    const ScoreSet qbye = ReadScores((r.dir / "scores" / "dtw_qbye.ksc").string());
    if (ks.utterance_ids != qbye.utterance_ids || ks.keyword_ids != qbye.keyword_ids) {
      return {false, "score files cover different inputs"};
    }
    for (size_t u = 0; u < ks.scores.size(); ++u) {
      for (size_t k = 0; k < ks.keyword_ids.size(); ++k) {
        ++pairs;
        violations += ks.scores[u][k] < qbye.scores[u][k];
      }
    }
  }
  return {violations == 0 && pairs > 0,
          Fmt("%.0f (utterance, keyword) pairs over 3 runs, %.0f violations",
              static_cast<double>(pairs), static_cast<double>(violations))};
}

Outcome Determinism(const DeskRun& a, const DeskRun& b) {
  if (a.exit_code != 0 || b.exit_code != 0) return {false, "pipeline failed"};
  std::vector<std::string> files;
  for (const char* sub : {"targets", "scores", "report"}) {
    for (const auto& e : fs::directory_iterator(a.dir / sub)) {
      if (e.path().extension() != ".kwc") files.push_back(fs::relative(e.path(), a.dir).string());
    }
  }
  std::sort(files.begin(), files.end());
  int differ = 0;
  for (const auto& f : files) {
    if (!fs::exists(b.dir / f) ||
        testing::Slurp((a.dir / f).string()) != testing::Slurp((b.dir / f).string())) {
      ++differ;
      Progress("differs: " + f);
    }
  }
  return {differ == 0, Fmt("%.0f target/score/report files compared (second run with 2 workers), "
                           "%.0f differ",
                           static_cast<double>(files.size()), differ)};
}

// Expect `fn` to throw `code`.
bool Rejects(const std::function<void()>& fn, ErrorCode code) {
  return testing::CodeOf(fn) == code;
}

Outcome FormatRoundTrips(const DeskRun& run) {
  if (run.exit_code != 0) return {false, "pipeline failed"};
  testing::TempDir tmp;
  struct Format {
    std::string name;
    fs::path path;
    std::function<void(const std::string&, const std::string&)> copy;  // read, rewrite
    std::function<void(const std::string&)> read;
    ErrorCode corrupt;
  };
  const std::vector<Format> formats = {
      {"feature archive", run.dir / "data" / "test.kwf",
       [](const std::string& in, const std::string& out) { WriteArchive(ReadArchive(in), out); },
       [](const std::string& p) { ReadArchive(p); }, ErrorCode::kCorruptArchive},
      {"target set", run.dir / "targets" / "train.tgt",
       [](const std::string& in, const std::string& out) { WriteTargets(ReadTargets(in), out); },
       [](const std::string& p) { ReadTargets(p); }, ErrorCode::kCorruptArchive},
      {"score file", run.dir / "scores" / "cnn_dtw.ksc",
       [](const std::string& in, const std::string& out) { WriteScores(ReadScores(in), out); },
       [](const std::string& p) { ReadScores(p); }, ErrorCode::kCorruptArchive},
      {"model file", run.dir / "models" / "cnn_dtw.kwm",
       [](const std::string& in, const std::string& out) {
         LoadedModel m = LoadModel(in);
         SaveModel(m.model, m.optimizer ? &*m.optimizer : nullptr, out, m.config_tag);
       },
       [](const std::string& p) { LoadModel(p); }, ErrorCode::kCorruptModel},
  };
  bool ok = true;
  std::string detail;
  for (const auto& f : formats) {
    const std::string copy = tmp.File("copy");
    f.copy(f.path.string(), copy);
    const std::vector<uint8_t> good = testing::Slurp(f.path.string());
    bool fmt_ok = testing::Slurp(copy) == good;
    std::vector<uint8_t> bad = good;
    bad[bad.size() / 2] ^= 0x20;
    testing::Spill(tmp.File("flip"), bad);
    fmt_ok = fmt_ok && Rejects([&] { f.read(tmp.File("flip")); }, f.corrupt);
    bad.assign(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(good.size() * 2 / 3));
    testing::Spill(tmp.File("cut"), bad);
    fmt_ok = fmt_ok && Rejects([&] { f.read(tmp.File("cut")); }, f.corrupt);
    bad = good;
    bad[4] ^= 0x3;
    testing::Spill(tmp.File("ver"), bad);
    fmt_ok = fmt_ok && Rejects([&] { f.read(tmp.File("ver")); }, ErrorCode::kVersionError);
    ok = ok && fmt_ok;
    detail += f.name + (fmt_ok ? " ok; " : " FAILED; ");
  }
  return {ok, detail + "bit-exact rewrite, bit flip, truncation and version bump checked"};
}

Outcome EarlyStoppingAndSchedule(const DeskRun& run) {
  if (run.exit_code != 0) return {false, "pipeline failed"};
  // Logged losses.
  std::ifstream in(run.dir / "models" / "cnn_dtw_log.jsonl");
  std::string line;
  std::vector<double> dev_loss, lr;
  int best_epoch = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    if (j["type"] == "epoch") {
      dev_loss.push_back(j["dev_loss"].get<double>());
      lr.push_back(j["lr"].get<double>());
    } else {
      best_epoch = j["best_epoch"].get<int>();
    }
  }
  if (dev_loss.empty() || best_epoch < 1) return {false, "empty training log"};
  const double min_dev = *std::min_element(dev_loss.begin(), dev_loss.end());

  // Dev loss of the checkpoint that was actually saved.
  const LoadedModel model = LoadModel((run.dir / "models" / "cnn_dtw.kwm").string());
  const FeatureArchive dev = ReadArchive((run.dir / "data" / "dev.kwf").string());
  const TargetSet dev_targets = ReadTargets((run.dir / "targets" / "dev.tgt").string());
  std::vector<Sample> samples;
  for (const auto& utt : dev.entries) {
    if (utt.num_frames() < model.model.MinInputFrames()) continue;
    const TargetVector* row = dev_targets.Find(utt.source_id);
    if (row == nullptr) return {false, "dev target missing"};
    samples.push_back({utt.frames, std::vector<double>(row->y.begin(), row->y.end())});
  }
  const double checkpoint_loss = Trainer(model.model, LrSchedule(), 1, 1).Evaluate(samples);
  bool ok = dev_loss[best_epoch - 1] == min_dev && checkpoint_loss == min_dev;

  // Logged learning rates never increase.
  for (size_t i = 1; i < lr.size(); ++i) ok = ok && lr[i] <= lr[i - 1];

  // The default schedule runs linearly from 1e-4 down to exactly 1e-5.
  const TrainConfig defaults;
  LrSchedule s{defaults.lr_start, defaults.lr_end,
               defaults.epochs_max * StepsPerEpoch(400, defaults.batch_size)};
  bool schedule_ok = s.At(0) == 1e-4 && s.At(s.total_steps) == 1e-5;
  for (int64_t t = 1; t <= s.total_steps; ++t) schedule_ok = schedule_ok && s.At(t) <= s.At(t - 1);
  ok = ok && schedule_ok;
  return {ok, Fmt("best epoch %.0f of %.0f, min logged dev loss %.6f, checkpoint dev loss %.6f",
                  best_epoch, static_cast<double>(dev_loss.size()), min_dev, checkpoint_loss) +
                  Fmt("; lr(0)=%.0e, lr(end)=%.0e", s.At(0), s.At(s.total_steps))};
}

int Main() {
  int failures = 0;
  auto report = [&](int n, const char* name, const Outcome& o) {
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };
  auto guarded = [](const std::function<Outcome()>& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "DTW oracle equivalence", guarded(DtwOracle));
  report(2, "cost bounds and normalization", guarded(CostBounds));
  report(3, "gradient correctness", guarded(Gradients));
  report(4, "AUC oracle", guarded(AucOracle));

  testing::TempDir work;
  std::vector<DeskRun> runs;
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    runs.push_back(RunDesk(work.path() / ("seed" + std::to_string(seed)), seed, 1));
  }
  report(5, "system ordering at desk scale", guarded([&] { return SystemOrdering(runs); }));
  report(6, "speed ratio", guarded([&] { return SpeedRatio(runs); }));
  report(7, "min/mean relation", guarded([&] { return MinMeanRelation(runs); }));
  const DeskRun repeat = RunDesk(work.path() / "seed1_repeat", 1, 2);
  report(8, "determinism", guarded([&] { return Determinism(runs[0], repeat); }));
  report(9, "format round-trips", guarded([&] { return FormatRoundTrips(runs[0]); }));
  report(10, "early stopping and schedule",
         guarded([&] { return EarlyStoppingAndSchedule(runs[0]); }));
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace kws

int main() { return kws::Main(); }
