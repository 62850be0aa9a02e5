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

#include "kws/pipeline.h"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "kws/baselines.h"
#include "kws/binary_io.h"
#include "kws/error.h"
#include "kws/eval.h"
#include "kws/parallel.h"
#include "kws/plots.h"
#include "kws/targets.h"
#include "kws/wav.h"

namespace kws {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t HashOf(const std::string& name, int version, const json& inputs) {
  const std::string text = name + "/v" + std::to_string(version) + "/" + inputs.dump();
  return Crc64(
      std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

struct Stage {
  std::string name;
  int version = 1;
  uint64_t hash = 0;
  std::vector<std::string> outputs;
  std::function<void()> run;
};

class Pipeline {
 public:
  Pipeline(const PipelineConfig& config, const PipelineOptions& options)
      : cfg_(config), opt_(options), root_(config.work_dir) {
    workers_ = options.workers > 0 ? options.workers : config.workers;
  }

  PipelineResult Run();

 private:
  std::string Path(const std::string& rel) const { return (root_ / rel).string(); }
  void Log(const std::string& line) const {
    if (opt_.log != nullptr) *opt_.log << line << std::endl;
  }
  bool HasSystem(const std::string& s) const {
    return std::find(cfg_.systems.begin(), cfg_.systems.end(), s) != cfg_.systems.end();
  }

  void DefineStages();
  void RunData();
  void RunTargets();
  void RunTrainCnnDtw();
  void RunTrainCnn();
  void RunDetect();
  void RunEval();
  void RunBench();
  void RunPlots();

  // Loaded lazily so skipped stages cost nothing.
  const std::vector<ExemplarSet>& Keywords();
  const FeatureArchive& Archive(const std::string& split);

  json ReadManifest() const;
  void WriteManifest(const json& manifest) const;

  const PipelineConfig& cfg_;
  const PipelineOptions& opt_;
  fs::path root_;
  int workers_ = 1;
  uint64_t data_tag_ = 0;
  std::vector<Stage> stages_;
  std::optional<std::vector<ExemplarSet>> keywords_;
  std::map<std::string, FeatureArchive> archives_;
};

void Pipeline::DefineStages() {
  json data_in = {{"source", cfg_.source}};
  if (cfg_.source == "synth") {
    data_in["synth"] = cfg_.synth;
  } else {
    data_in["wav"] = cfg_.wav;
    data_in["mfcc"] = cfg_.mfcc;
  }
  const uint64_t data = HashOf("data", 1, data_in);
  data_tag_ = data;
  const uint64_t targets = HashOf("targets", 1, {Hex(data), cfg_.sweep});
  const uint64_t train = HashOf("train-cnn-dtw", 1, {Hex(targets), cfg_.train});
  const uint64_t cnn = HashOf("train-cnn", 1, {Hex(data), cfg_.classifier});
  const bool want_cnn = HasSystem("cnn");
  const bool want_cnn_dtw = HasSystem("cnn-dtw");
  const uint64_t detect = HashOf("detect", 1,
                                 {Hex(data), cfg_.sweep, cfg_.detect, cfg_.systems,
                                  want_cnn_dtw ? Hex(train) : "", want_cnn ? Hex(cnn) : ""});
  const uint64_t eval = HashOf("eval", 1, {Hex(detect)});
  const uint64_t bench = HashOf("bench", 1, {Hex(detect)});
  const uint64_t plots = HashOf("plots", 1, {Hex(eval)});

  stages_.push_back({"data",
                     1,
                     data,
                     {"data/keywords.kwf", "data/train.kwf", "data/dev.kwf", "data/test.kwf",
                      "data/test_truth.tsv"},
                     [this] { RunData(); }});
  stages_.push_back(
      {"targets", 1, targets, {"targets/train.tgt", "targets/dev.tgt"}, [this] { RunTargets(); }});
  if (want_cnn_dtw) {
    stages_.push_back(
        {"train-cnn-dtw", 1, train, {"models/cnn_dtw.kwm", "models/cnn_dtw_log.jsonl"}, [this] {
           RunTrainCnnDtw();
         }});
  }
  if (want_cnn) {
    stages_.push_back({"train-cnn", 1, cnn, {"models/cnn.kwm"}, [this] { RunTrainCnn(); }});
  }
  std::vector<std::string> scores, reports;
  for (const auto& s : cfg_.systems) {
    scores.push_back("scores/" + Slug(s) + ".ksc");
    reports.push_back("report/report_" + Slug(s) + ".json");
  }
  stages_.push_back({"detect", 1, detect, scores, [this] { RunDetect(); }});
  stages_.push_back({"eval", 1, eval, reports, [this] { RunEval(); }});
  stages_.push_back({"bench", 1, bench, {"bench/bench.json"}, [this] { RunBench(); }});
  stages_.push_back({"plots", 1, plots, {"plots/distribution.svg"}, [this] { RunPlots(); }});
}

const std::vector<ExemplarSet>& Pipeline::Keywords() {
  if (!keywords_) keywords_ = LoadExemplarSets(Path("data/keywords.kwf"));
  return *keywords_;
}

const FeatureArchive& Pipeline::Archive(const std::string& split) {
  auto it = archives_.find(split);
  if (it == archives_.end()) {
    FeatureArchive a = ReadArchive(Path("data/" + split + ".kwf"));
    if (a.config_tag != data_tag_) {
      Fail(ErrorCode::kConfigError, "data/" + split + ".kwf was produced under another config");
    }
    it = archives_.emplace(split, std::move(a)).first;
  }
  return it->second;
}

void Pipeline::RunData() {
  fs::create_directories(root_ / "data");
  if (cfg_.source == "synth") {
    SynthCorpus corpus = GenerateSynth(cfg_.synth);
    for (FeatureArchive* a : {&corpus.train, &corpus.dev, &corpus.test}) a->config_tag = data_tag_;
    WriteSynthCorpus(corpus, Path("data"));
    // WriteSynthCorpus tags the keyword archive with the train tag.
    archives_["train"] = std::move(corpus.train);
    archives_["dev"] = std::move(corpus.dev);
    archives_["test"] = std::move(corpus.test);
    keywords_ = std::move(corpus.keywords);
    return;
  }
  const std::vector<std::pair<std::string, std::string>> dirs = {
      {"keywords", cfg_.wav.keywords_dir},
      {"train", cfg_.wav.train_dir},
      {"dev", cfg_.wav.dev_dir},
      {"test", cfg_.wav.test_dir}};
  for (const auto& [name, dir] : dirs) {
    FeatureArchive a = ExtractWavDirectory(dir, cfg_.mfcc, workers_);
    a.config_tag = data_tag_;
    WriteArchive(a, Path("data/" + name + ".kwf"));
    if (name != "keywords") archives_[name] = std::move(a);
  }
  WriteGroundTruth(ReadGroundTruth(cfg_.wav.test_truth), Path("data/test_truth.tsv"));
}

void Pipeline::RunTargets() {
  fs::create_directories(root_ / "targets");
  for (const std::string split : {"train", "dev"}) {
    const std::string cache_path = Path("targets/" + split + ".kwc");
    CostCache cache;
    if (fs::exists(cache_path)) {
      try {
        cache = CostCache::Read(cache_path);
      } catch (const Error& e) {
        Log("  ignoring unreadable cost cache: " + std::string(e.what()));
      }
    }
    TargetSet t = BuildTargets(Keywords(), Archive(split), cfg_.sweep, &cache, workers_);
    cache.Write(cache_path);
    WriteTargets(t, Path("targets/" + split + ".tgt"));
  }
}

void Pipeline::RunTrainCnnDtw() {
  fs::create_directories(root_ / "models");
  TrainConfig tc = cfg_.train;
  tc.workers = workers_;
  TrainResult r = TrainCnnDtw(Archive("train"), ReadTargets(Path("targets/train.tgt")),
                              Archive("dev"), ReadTargets(Path("targets/dev.tgt")), tc);
  r.log.WriteJsonLines(Path("models/cnn_dtw_log.jsonl"));
  SaveModel(r.model, &r.optimizer, Path("models/cnn_dtw.kwm"), data_tag_);
  Log("  best epoch " + std::to_string(r.log.best_epoch) + " of " +
      std::to_string(r.log.stopping_epoch));
}

void Pipeline::RunTrainCnn() {
  fs::create_directories(root_ / "models");
  ClassifierConfig cc = cfg_.classifier;
  cc.workers = workers_;
  ClassifierResult r = TrainCnnClassifier(Keywords(), Archive("train"), cc);
  SaveModel(r.model, nullptr, Path("models/cnn.kwm"), data_tag_);
}

void Pipeline::RunDetect() {
  fs::create_directories(root_ / "scores");
  for (const auto& system : cfg_.systems) {
    DetectorInputs in;
    in.kind = ParseDetector(system);
    in.keywords = Keywords();
    in.sweep = cfg_.sweep;
    in.window_frames = cfg_.detect.window_frames;
    in.stride = cfg_.detect.stride;
    std::optional<LoadedModel> model;
    if (in.kind == DetectorKind::kCnn || in.kind == DetectorKind::kCnnDtw) {
      model =
          LoadModel(Path(in.kind == DetectorKind::kCnn ? "models/cnn.kwm" : "models/cnn_dtw.kwm"));
      if (model->config_tag != data_tag_) {
        Fail(ErrorCode::kConfigError, "model for " + system + " was trained under another config");
      }
      in.model = &model->model;
    }
    ScoreSet scores = RunDetector(in, Archive("test"), workers_);
    WriteScores(scores, Path("scores/" + Slug(system) + ".ksc"));
  }
}

void Pipeline::RunEval() {
  const GroundTruth truth = ReadGroundTruth(Path("data/test_truth.tsv"));
  std::vector<ScoreSet> sets;
  for (const auto& system : cfg_.systems)
    sets.push_back(ReadScores(Path("scores/" + Slug(system) + ".ksc")));
  CheckCompatible(sets);
  for (const auto& s : sets) {
    EvalReport report = Evaluate(s, truth);
    WriteEvalReport(report, Path("report"));
    char line[128];
    std::snprintf(line, sizeof(line), "  %-9s macro AUC %.4f  EER %.4f", s.system.c_str(),
                  report.macro.auc, report.macro.eer);
    Log(line);
  }
}

void Pipeline::RunBench() {
  fs::create_directories(root_ / "bench");
  std::vector<TimingRecord> timings;
  for (const auto& system : cfg_.systems) {
    DetectorInputs in;
    in.kind = ParseDetector(system);
    in.keywords = Keywords();
    in.sweep = cfg_.sweep;
    in.window_frames = cfg_.detect.window_frames;
    in.stride = cfg_.detect.stride;
    std::optional<LoadedModel> model;
    if (in.kind == DetectorKind::kCnn || in.kind == DetectorKind::kCnnDtw) {
      model =
          LoadModel(Path(in.kind == DetectorKind::kCnn ? "models/cnn.kwm" : "models/cnn_dtw.kwm"));
      in.model = &model->model;
    }
    timings.push_back(BenchmarkDetector(
        system, [&](const FeatureSequence& u) { DetectUtterance(in, u.frames); }, Archive("test")));
  }
  WriteTimings(timings, Path("bench/bench.json"));
}

void Pipeline::RunPlots() { EmitPlots(Path("report"), Path("plots")); }

json Pipeline::ReadManifest() const {
  const fs::path path = root_ / "manifest.json";
  if (!fs::exists(path)) return json::object();
  std::ifstream in(path);
  try {
    json j = json::parse(in);
    if (j.is_object()) return j;
  } catch (const json::exception&) {
  }
  Log("manifest.json unreadable; treating every stage as unrecorded");
  return json::object();
}

void Pipeline::WriteManifest(const json& manifest) const {
  const std::string text = manifest.dump(2) + "\n";
  WriteFileAtomic(
      (root_ / "manifest.json").string(),
      std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

PipelineResult Pipeline::Run() {
  PipelineResult result;
  DefineStages();
  fs::create_directories(root_);
  json manifest = ReadManifest();

  // Refuse before running anything if a stage would overwrite outputs made
  // under a different configuration.
  std::vector<bool> fresh(stages_.size());
  for (size_t i = 0; i < stages_.size(); ++i) {
    const Stage& st = stages_[i];
    bool all_exist = true, any_exist = false;
    for (const auto& out : st.outputs) {
      const bool e = fs::exists(root_ / out);
      all_exist = all_exist && e;
      any_exist = any_exist || e;
    }
    const json* rec = manifest.contains("stages") && manifest["stages"].contains(st.name)
                          ? &manifest["stages"][st.name]
                          : nullptr;
    const bool hash_matches = rec != nullptr && rec->value("hash", "") == Hex(st.hash);
    fresh[i] = hash_matches && all_exist;
    if (!hash_matches && any_exist && !opt_.force) {
      result.exit_code = 2;
      result.message = "stage '" + st.name + "' has outputs from a different config (" +
                       (rec ? rec->value("hash", "?") : std::string("unrecorded")) +
                       " != " + Hex(st.hash) + "); rerun with --force to overwrite";
      return result;
    }
  }

  json cfg_json = cfg_;
  manifest["config_version"] = cfg_.version;
  manifest["config_hash"] = Hex(HashOf("config", cfg_.version, cfg_json));
  manifest["config"] = cfg_json;
  for (size_t i = 0; i < stages_.size(); ++i) {
    const Stage& st = stages_[i];
    StageRecord rec{st.name, st.version, Hex(st.hash), fresh[i], 0.0, st.outputs};
    // Anything downstream of a rerun stage is rerun too.
    if (fresh[i]) {
      Log("[skip] " + st.name);
      manifest["stages"][st.name]["status"] = "skipped";
      result.stages.push_back(rec);
      continue;
    }
    for (size_t j = i + 1; j < stages_.size(); ++j) fresh[j] = false;
    Log("[run]  " + st.name);
    const auto start = std::chrono::steady_clock::now();
    try {
      st.run();
    } catch (const Error& e) {
      result.exit_code = e.code() == ErrorCode::kConfigError ? 2 : 1;
      result.message = "stage '" + st.name + "' failed: " + e.what();
      result.stages.push_back(rec);
      manifest["stages"].erase(st.name);
      WriteManifest(manifest);
      return result;
    } catch (const std::exception& e) {
      result.exit_code = 1;
      result.message = "stage '" + st.name + "' failed: " + e.what();
      result.stages.push_back(rec);
      manifest["stages"].erase(st.name);
      WriteManifest(manifest);
      return result;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["stages"][st.name] = {{"version", st.version},
                                   {"hash", rec.hash},
                                   {"status", "ran"},
                                   {"seconds", rec.seconds},
                                   {"outputs", st.outputs}};
    WriteManifest(manifest);
    result.stages.push_back(rec);
  }
  return result;
}

}  // namespace

PipelineResult RunPipeline(const PipelineConfig& config, const PipelineOptions& options) {
  PipelineResult result;
  try {
    config.Validate();
  } catch (const Error& e) {
    result.exit_code = 2;
    result.message = e.what();
    return result;
  }
  return Pipeline(config, options).Run();
}

PipelineResult RunPipelineFile(const std::string& path, const PipelineOptions& options) {
  PipelineConfig config;
  try {
    config = LoadConfig<PipelineConfig>(path);
  } catch (const Error& e) {
    PipelineResult result;
    result.exit_code = 2;
    result.message = e.what();
    return result;
  }
  return RunPipeline(config, options);
}

}  // namespace kws
