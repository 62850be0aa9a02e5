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

// Command-line entry point: kws <subcommand> [options].

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "kws/baselines.h"
#include "kws/config.h"
#include "kws/error.h"
#include "kws/eval.h"
#include "kws/parallel.h"
#include "kws/pipeline.h"
#include "kws/plots.h"
#include "kws/synth.h"
#include "kws/targets.h"
#include "kws/train.h"
#include "kws/wav.h"

namespace {

using namespace kws;

struct SweepFlags {
  std::string config;
  int frame_skip = 0;
  int band = -1;

  void Add(CLI::App* app) {
    app->add_option("--sweep-config", config, "sweep config (JSON)");
    app->add_option("--frame-skip", frame_skip, "segment start stride in frames");
    app->add_option("--band", band, "Sakoe-Chiba band radius");
  }

  SweepConfig Resolve() const {
    SweepConfig s = config.empty() ? SweepConfig() : LoadConfig<SweepConfig>(config);
    if (frame_skip > 0) s.frame_skip = frame_skip;
    if (band >= 0) s.band_width = band;
    s.Validate();
    return s;
  }
};

void Print(const std::string& line) { std::cout << line << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyword spotting with DTW-supervised CNNs"};
  app.require_subcommand(1);
  int workers = DefaultWorkers();
  app.add_option("--workers", workers, "worker threads (default: $KWS_NUM_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_config, synth_out;
  int64_t synth_seed = -1;
  synth->add_option("--config", synth_config, "synth config (JSON)");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "override the config seed");
  synth->callback([&] {
    action = [&] {
      SynthConfig c = synth_config.empty() ? SynthConfig() : LoadConfig<SynthConfig>(synth_config);
      if (synth_seed >= 0) c.seed = static_cast<uint64_t>(synth_seed);
      SynthCorpus corpus = GenerateSynth(c);
      WriteSynthCorpus(corpus, synth_out);
      Print("wrote " +
            std::to_string(corpus.train.entries.size() + corpus.dev.entries.size() +
                           corpus.test.entries.size()) +
            " utterances and " + std::to_string(corpus.keywords.size()) + " keywords to " +
            synth_out);
    };
  });

  // features extract
  auto* features = app.add_subcommand("features", "feature extraction");
  features->require_subcommand(1);
  auto* extract = features->add_subcommand("extract", "MFCC archive from a directory of WAVs");
  std::string wav_dir, features_out, mfcc_config;
  extract->add_option("--wav-dir", wav_dir, "input directory (searched recursively)")->required();
  extract->add_option("--out", features_out, "output archive")->required();
  extract->add_option("--config", mfcc_config, "MFCC config (JSON)");
  extract->callback([&] {
    action = [&] {
      const MfccConfig c = mfcc_config.empty() ? MfccConfig() : LoadConfig<MfccConfig>(mfcc_config);
      FeatureArchive a = ExtractWavDirectory(wav_dir, c, workers);
      WriteArchive(a, features_out);
      Print("wrote " + std::to_string(a.entries.size()) +
            " sequences (D=" + std::to_string(a.dimension) + ") to " + features_out);
    };
  });

  // dtw score
  auto* dtw = app.add_subcommand("dtw", "DTW sweeps");
  dtw->require_subcommand(1);
  auto* score = dtw->add_subcommand("score", "keyword costs of every utterance, as a cost cache");
  std::string dtw_keywords, dtw_corpus, dtw_out;
  SweepFlags dtw_sweep;
  score->add_option("--keywords", dtw_keywords, "exemplar archive or directory")->required();
  score->add_option("--corpus", dtw_corpus, "feature archive")->required();
  score->add_option("--out", dtw_out, "cost cache")->required();
  dtw_sweep.Add(score);
  score->callback([&] {
    action = [&] {
      const SweepConfig s = dtw_sweep.Resolve();
      const FeatureArchive corpus = ReadArchive(dtw_corpus);
      CostCache cache;
      BuildTargets(LoadExemplarSets(dtw_keywords), corpus, s, &cache, workers);
      cache.Write(dtw_out);
      Print("wrote " + std::to_string(cache.size()) + " costs to " + dtw_out);
    };
  });

  // targets build
  auto* targets = app.add_subcommand("targets", "CNN training targets");
  targets->require_subcommand(1);
  auto* build = targets->add_subcommand("build", "normalized DTW keyword scores per utterance");
  std::string tg_keywords, tg_corpus, tg_out, tg_cache;
  SweepFlags tg_sweep;
  build->add_option("--keywords", tg_keywords, "exemplar archive or directory")->required();
  build->add_option("--corpus", tg_corpus, "feature archive")->required();
  build->add_option("--out", tg_out, "target file")->required();
  build->add_option("--cache", tg_cache, "cost cache to resume from and update");
  tg_sweep.Add(build);
  build->callback([&] {
    action = [&] {
      const SweepConfig s = tg_sweep.Resolve();
      CostCache cache;
      if (!tg_cache.empty() && std::filesystem::exists(tg_cache)) cache = CostCache::Read(tg_cache);
      const TargetSet t =
          BuildTargets(LoadExemplarSets(tg_keywords), ReadArchive(tg_corpus), s, &cache, workers);
      if (!tg_cache.empty()) cache.Write(tg_cache);
      WriteTargets(t, tg_out);
      Print("wrote targets for " + std::to_string(t.rows.size()) + " utterances to " + tg_out);
    };
  });

  // train cnn-dtw / cnn-baseline
  auto* train = app.add_subcommand("train", "model training");
  train->require_subcommand(1);
  auto* cnn_dtw = train->add_subcommand("cnn-dtw", "CNN on DTW-derived soft targets");
  std::string tr_corpus, tr_targets, tr_dev_corpus, tr_dev_targets, tr_out, tr_config, tr_log;
  cnn_dtw->add_option("--corpus", tr_corpus, "training feature archive")->required();
  cnn_dtw->add_option("--targets", tr_targets, "training targets")->required();
  cnn_dtw->add_option("--dev-corpus", tr_dev_corpus, "development archive (default: split off)");
  cnn_dtw->add_option("--dev-targets", tr_dev_targets, "development targets");
  cnn_dtw->add_option("--out", tr_out, "model file")->required();
  cnn_dtw->add_option("--config", tr_config, "training config (JSON)");
  cnn_dtw->add_option("--log", tr_log, "TrainLog output (default: <out>.log.jsonl)");
  cnn_dtw->callback([&] {
    action = [&] {
      TrainConfig c = tr_config.empty() ? TrainConfig() : LoadConfig<TrainConfig>(tr_config);
      c.workers = workers;
      const FeatureArchive corpus = ReadArchive(tr_corpus);
      const TargetSet t = ReadTargets(tr_targets);
      TrainResult r;
      if (tr_dev_corpus.empty() != tr_dev_targets.empty()) {
        Fail(ErrorCode::kConfigError, "--dev-corpus and --dev-targets go together");
      }
      if (tr_dev_corpus.empty()) {
        const DevSplit split = SplitDev(corpus, t, c.dev_fraction, c.seed);
        r = TrainCnnDtw(split.train_corpus, split.train_targets, split.dev_corpus,
                        split.dev_targets, c);
      } else {
        r = TrainCnnDtw(corpus, t, ReadArchive(tr_dev_corpus), ReadTargets(tr_dev_targets), c);
      }
      SaveModel(r.model, &r.optimizer, tr_out, corpus.config_tag);
      r.log.WriteJsonLines(tr_log.empty() ? tr_out + ".log.jsonl" : tr_log);
      Print("best epoch " + std::to_string(r.log.best_epoch) + ", dev loss " +
            std::to_string(r.log.BestDevLoss()) + "; wrote " + tr_out);
    };
  });
  auto* cnn_base = train->add_subcommand("cnn-baseline", "keyword-only CNN classifier");
  std::string cb_keywords, cb_corpus, cb_out, cb_config;
  cnn_base->add_option("--keywords", cb_keywords, "exemplar archive or directory")->required();
  cnn_base->add_option("--corpus", cb_corpus, "untranscribed archive for negatives")->required();
  cnn_base->add_option("--out", cb_out, "model file")->required();
  cnn_base->add_option("--config", cb_config, "classifier config (JSON)");
  cnn_base->callback([&] {
    action = [&] {
      ClassifierConfig c =
          cb_config.empty() ? ClassifierConfig() : LoadConfig<ClassifierConfig>(cb_config);
      c.workers = workers;
      const FeatureArchive corpus = ReadArchive(cb_corpus);
      const ClassifierResult r = TrainCnnClassifier(LoadExemplarSets(cb_keywords), corpus, c);
      SaveModel(r.model, nullptr, cb_out, corpus.config_tag);
      Print("wrote " + cb_out);
    };
  });

  // detect
  auto* detect = app.add_subcommand("detect", "score every utterance for every keyword");
  std::string dt_system, dt_model, dt_keywords, dt_corpus, dt_out;
  int dt_window = 60, dt_stride = 3;
  SweepFlags dt_sweep;
  detect->add_option("--system", dt_system, "cnn, cnn-dtw, dtw-qbye or dtw-ks")->required();
  detect->add_option("--model", dt_model, "model file (cnn, cnn-dtw)");
  detect->add_option("--keywords", dt_keywords, "exemplar archive or directory (keyword ids)")
      ->required();
  detect->add_option("--corpus", dt_corpus, "feature archive")->required();
  detect->add_option("--out", dt_out, "score file")->required();
  detect->add_option("--window", dt_window, "cnn window in frames");
  detect->add_option("--stride", dt_stride, "cnn window stride in frames");
  dt_sweep.Add(detect);
  detect->callback([&] {
    action = [&] {
      DetectorInputs in;
      in.kind = ParseDetector(dt_system);
      const std::vector<ExemplarSet> keywords = LoadExemplarSets(dt_keywords);
      in.keywords = keywords;
      in.sweep = dt_sweep.Resolve();
      in.window_frames = dt_window;
      in.stride = dt_stride;
      std::optional<LoadedModel> model;
      if (in.kind == DetectorKind::kCnn || in.kind == DetectorKind::kCnnDtw) {
        if (dt_model.empty()) Fail(ErrorCode::kConfigError, "--model is required for " + dt_system);
        model = LoadModel(dt_model);
        in.model = &model->model;
      }
      const ScoreSet s = RunDetector(in, ReadArchive(dt_corpus), workers);
      WriteScores(s, dt_out);
      Print("wrote " + std::to_string(s.utterance_ids.size()) + " x " +
            std::to_string(s.keyword_ids.size()) + " scores to " + dt_out);
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "ROC, AUC, EER and confusion counts");
  std::vector<std::string> ev_scores;
  std::string ev_truth, ev_out;
  eval->add_option("--scores", ev_scores, "score file(s); all must share one config")->required();
  eval->add_option("--truth", ev_truth, "ground truth TSV")->required();
  eval->add_option("--out", ev_out, "report directory")->required();
  eval->callback([&] {
    action = [&] {
      std::vector<ScoreSet> sets;
      for (const auto& p : ev_scores) sets.push_back(ReadScores(p));
      CheckCompatible(sets);
      const GroundTruth truth = ReadGroundTruth(ev_truth);
      for (const auto& s : sets) {
        const EvalReport r = Evaluate(s, truth);
        WriteEvalReport(r, ev_out);
        char line[128];
        std::snprintf(line, sizeof(line), "%-9s macro AUC %.4f  EER %.4f", r.system.c_str(),
                      r.macro.auc, r.macro.eer);
        Print(line);
      }
    };
  });

  // bench
  auto* bench = app.add_subcommand("bench", "detector throughput on one corpus");
  std::vector<std::string> bn_systems = {"dtw-ks", "dtw-qbye"};
  std::string bn_keywords, bn_corpus, bn_cnn, bn_cnn_dtw, bn_out;
  int bn_window = 60, bn_stride = 3;
  SweepFlags bn_sweep;
  bench->add_option("--systems", bn_systems, "systems to time");
  bench->add_option("--keywords", bn_keywords, "exemplar archive or directory")->required();
  bench->add_option("--corpus", bn_corpus, "feature archive")->required();
  bench->add_option("--cnn-model", bn_cnn, "keyword-only CNN model");
  bench->add_option("--cnn-dtw-model", bn_cnn_dtw, "CNN-DTW model");
  bench->add_option("--window", bn_window, "cnn window in frames");
  bench->add_option("--stride", bn_stride, "cnn window stride in frames");
  bench->add_option("--out", bn_out, "timings JSON")->required();
  bn_sweep.Add(bench);
  bench->callback([&] {
    action = [&] {
      const std::vector<ExemplarSet> keywords = LoadExemplarSets(bn_keywords);
      const FeatureArchive corpus = ReadArchive(bn_corpus);
      std::vector<TimingRecord> timings;
      for (const auto& system : bn_systems) {
        DetectorInputs in;
        in.kind = ParseDetector(system);
        in.keywords = keywords;
        in.sweep = bn_sweep.Resolve();
        in.window_frames = bn_window;
        in.stride = bn_stride;
        std::optional<LoadedModel> model;
        if (in.kind == DetectorKind::kCnn || in.kind == DetectorKind::kCnnDtw) {
          const std::string& path = in.kind == DetectorKind::kCnn ? bn_cnn : bn_cnn_dtw;
          if (path.empty()) Fail(ErrorCode::kConfigError, "no model given for " + system);
          model = LoadModel(path);
          in.model = &model->model;
        }
        timings.push_back(BenchmarkDetector(
            system, [&](const FeatureSequence& u) { DetectUtterance(in, u.frames); }, corpus));
        char line[160];
        std::snprintf(line, sizeof(line), "%-9s %8.3f s  %9.1f utt/s  RTF %.5f", system.c_str(),
                      timings.back().seconds, timings.back().utterances_per_second,
                      timings.back().real_time_factor);
        Print(line);
      }
      WriteTimings(timings, bn_out);
    };
  });

  // pipeline run
  auto* pipeline = app.add_subcommand("pipeline", "end-to-end runs");
  pipeline->require_subcommand(1);
  auto* run = pipeline->add_subcommand("run", "run (or resume) every stage of a pipeline config");
  std::string pl_config;
  bool pl_force = false;
  run->add_option("--config", pl_config, "pipeline config (JSON)")->required();
  run->add_flag("--force", pl_force, "overwrite outputs made under a different config");
  int pipeline_exit = 0;
  run->callback([&] {
    action = [&] {
      PipelineOptions opt;
      opt.force = pl_force;
      opt.workers = app.count("--workers") > 0 || std::getenv("KWS_NUM_WORKERS") ? workers : 0;
      opt.log = &std::cout;
      const PipelineResult r = RunPipelineFile(pl_config, opt);
      if (r.exit_code != 0) std::cerr << "error: " << r.message << std::endl;
      pipeline_exit = r.exit_code;
    };
  });

  // plots
  auto* plots = app.add_subcommand("plots", "ROC and keyword-distribution SVG/CSV from reports");
  std::string pt_report, pt_out;
  plots->add_option("--report", pt_report, "report directory")->required();
  plots->add_option("--out", pt_out, "output directory")->required();
  plots->callback([&] {
    action = [&] {
      for (const auto& p : EmitPlots(pt_report, pt_out)) Print("wrote " + p);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return e.code() == ErrorCode::kConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return pipeline_exit;
}
