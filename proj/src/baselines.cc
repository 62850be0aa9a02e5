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

#include "kws/baselines.h"

#include <algorithm>
#include <set>

#include "kws/binary_io.h"
#include "kws/error.h"
#include "kws/parallel.h"
#include "kws/targets.h"
#include "table_io.h"

namespace kws {

namespace {

constexpr char kScoreMagic[] = "KWSC";
constexpr uint32_t kScoreVersion = 1;

std::vector<double> ToStd(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

FrameMatrix FitWindow(const FrameMatrix& frames, int frames_out) {
  const int len = static_cast<int>(frames.rows());
  if (len < 1 || frames_out < 1) Fail(ErrorCode::kEmptyInput, "cannot window an empty sequence");
  FrameMatrix out(frames_out, frames.cols());
  if (len >= frames_out) {
    out = frames.middleRows((len - frames_out) / 2, frames_out);
    return out;
  }
  const int pad_front = (frames_out - len) / 2;
  for (int t = 0; t < frames_out; ++t) {
    const int src = std::clamp(t - pad_front, 0, len - 1);
    out.row(t) = frames.row(src);
  }
  return out;
}

ClassifierResult TrainCnnClassifier(std::span<const ExemplarSet> keywords,
                                    const FeatureArchive& negatives_source,
                                    const ClassifierConfig& config) {
  if (keywords.empty()) Fail(ErrorCode::kMissingInput, "no keyword sets");
  if (negatives_source.entries.empty()) Fail(ErrorCode::kMissingInput, "empty negatives corpus");
  const int window = config.negatives.window_frames;
  const int dim = negatives_source.dimension;
  const int num_kw = static_cast<int>(keywords.size());
  CnnModel model(dim, BuildLayerSpecs(config.arch, num_kw), config.seed);
  if (window < model.MinInputFrames()) {
    Fail(ErrorCode::kInvalidExemplar, "window of " + std::to_string(window) +
                                          " frames is below the receptive field of " +
                                          std::to_string(model.MinInputFrames()));
  }

  std::vector<Sample> positives;
  int negatives_per_epoch = 0;
  for (int j = 0; j < num_kw; ++j) {
    ValidateExemplarSet(keywords[j], dim);
    for (const auto& ex : keywords[j].exemplars) {
      Sample s;
      s.input = FitWindow(ex.frames, window);
      s.target.assign(num_kw, 0.0);
      s.target[j] = 1.0;
      positives.push_back(std::move(s));
    }
    negatives_per_epoch += config.negatives.negatives_per_keyword > 0
                               ? config.negatives.negatives_per_keyword
                               : static_cast<int>(keywords[j].exemplars.size());
  }

  // Candidate negative windows: every start of every corpus utterance.
  int64_t pool_size = 0;
  for (const auto& utt : negatives_source.entries) {
    pool_size += std::max(1, utt.num_frames() - window + 1);
  }
  Rng neg_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  auto draw_negatives = [&]() {
    std::vector<Sample> out;
    std::set<std::pair<size_t, int>> used;
    const bool distinct = pool_size >= negatives_per_epoch;
    std::uniform_int_distribution<size_t> pick_utt(0, negatives_source.entries.size() - 1);
    while (static_cast<int>(out.size()) < negatives_per_epoch) {
      const size_t u = pick_utt(neg_rng);
      const auto& frames = negatives_source.entries[u].frames;
      const int max_start = std::max(0, static_cast<int>(frames.rows()) - window);
      const int start = std::uniform_int_distribution<int>(0, max_start)(neg_rng);
      if (distinct && !used.insert({u, start}).second) continue;
      Sample s;
      s.input = frames.rows() >= window ? FrameMatrix(frames.middleRows(start, window))
                                        : FitWindow(frames, window);
      s.target.assign(num_kw, 0.0);
      out.push_back(std::move(s));
    }
    return out;
  };

  const size_t per_epoch = positives.size() + static_cast<size_t>(negatives_per_epoch);
  LrSchedule schedule{config.lr_start, config.lr_end,
                      config.epochs * StepsPerEpoch(per_epoch, config.batch_size)};
  Trainer trainer(std::move(model), schedule, config.seed, config.workers);
  ClassifierResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<Sample> samples = positives;
    for (auto& s : draw_negatives()) samples.push_back(std::move(s));
    result.epoch_losses.push_back(trainer.RunEpoch(samples, config.batch_size));
  }
  result.model = trainer.model();
  return result;
}

std::vector<double> DetectCnnSliding(const CnnModel& model, const FrameMatrix& utterance,
                                     int window_frames, int stride) {
  if (stride < 1) Fail(ErrorCode::kConfigError, "stride must be >= 1");
  const int len = static_cast<int>(utterance.rows());
  if (len <= window_frames) {
    return ToStd(Forward(model, FitWindow(utterance, window_frames), Mode::kEval));
  }
  std::vector<double> best;
  for (int start = 0; start + window_frames <= len; start += stride) {
    const Vector y = Forward(model, utterance.middleRows(start, window_frames), Mode::kEval);
    if (best.empty()) {
      best = ToStd(y);
    } else {
      for (size_t j = 0; j < best.size(); ++j) best[j] = std::max(best[j], y(j));
    }
  }
  return best;
}

std::vector<double> DetectCnnDtw(const CnnModel& model, const FrameMatrix& utterance) {
  if (utterance.rows() < model.MinInputFrames()) {
    return ToStd(Forward(model, FitWindow(utterance, model.MinInputFrames()), Mode::kEval));
  }
  return ToStd(Forward(model, utterance, Mode::kEval));
}

std::vector<double> DetectDtwQbye(std::span<const ExemplarSet> keywords,
                                  const FrameMatrix& utterance, const SweepConfig& config) {
  std::vector<double> scores;
  for (const auto& set : keywords) {
    scores.push_back(NormalizeScore(KeywordCostAvg(set, utterance, config)));
  }
  return scores;
}

std::vector<double> DetectDtwKs(std::span<const ExemplarSet> keywords, const FrameMatrix& utterance,
                                const SweepConfig& config) {
  std::vector<double> scores;
  for (const auto& set : keywords) {
    scores.push_back(NormalizeScore(KeywordCost(set, utterance, config)));
  }
  return scores;
}

std::string_view DetectorName(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kCnn: return "cnn";
    case DetectorKind::kCnnDtw: return "cnn-dtw";
    case DetectorKind::kDtwQbye: return "dtw-qbye";
    case DetectorKind::kDtwKs: return "dtw-ks";
  }
  return "unknown";
}

DetectorKind ParseDetector(std::string_view name) {
  for (auto kind :
       {DetectorKind::kCnn, DetectorKind::kCnnDtw, DetectorKind::kDtwQbye, DetectorKind::kDtwKs}) {
    if (DetectorName(kind) == name) return kind;
  }
  Fail(ErrorCode::kConfigError,
       "unknown system '" + std::string(name) + "' (expected cnn, cnn-dtw, dtw-qbye or dtw-ks)");
}

std::vector<double> DetectUtterance(const DetectorInputs& inputs, const FrameMatrix& utterance) {
  switch (inputs.kind) {
    case DetectorKind::kCnn:
      return DetectCnnSliding(*inputs.model, utterance, inputs.window_frames, inputs.stride);
    case DetectorKind::kCnnDtw: return DetectCnnDtw(*inputs.model, utterance);
    case DetectorKind::kDtwQbye: return DetectDtwQbye(inputs.keywords, utterance, inputs.sweep);
    case DetectorKind::kDtwKs: return DetectDtwKs(inputs.keywords, utterance, inputs.sweep);
  }
  return {};
}

ScoreSet RunDetector(const DetectorInputs& inputs, const FeatureArchive& corpus, int workers) {
  const bool needs_model =
      inputs.kind == DetectorKind::kCnn || inputs.kind == DetectorKind::kCnnDtw;
  if (needs_model && inputs.model == nullptr) {
    Fail(ErrorCode::kMissingInput,
         "system '" + std::string(DetectorName(inputs.kind)) + "' needs a model");
  }
  if (inputs.keywords.empty()) Fail(ErrorCode::kMissingInput, "keyword list is empty");
  if (needs_model && inputs.model->num_outputs() != static_cast<int>(inputs.keywords.size())) {
    Fail(ErrorCode::kDimensionMismatch, "model has " + std::to_string(inputs.model->num_outputs()) +
                                            " outputs but there are " +
                                            std::to_string(inputs.keywords.size()) + " keywords");
  }
  if (!needs_model) {
    inputs.sweep.Validate();
    for (const auto& set : inputs.keywords) ValidateExemplarSet(set, corpus.dimension);
  }
  ScoreSet out;
  out.system = std::string(DetectorName(inputs.kind));
  out.config_tag = corpus.config_tag;
  for (const auto& set : inputs.keywords) out.keyword_ids.push_back(set.keyword_id);
  out.utterance_ids.resize(corpus.entries.size());
  out.scores.resize(corpus.entries.size());
  ParallelFor(corpus.entries.size(), workers, [&](size_t i) {
    const auto& utt = corpus.entries[i];
    out.utterance_ids[i] = utt.source_id;
    const std::vector<double> s = DetectUtterance(inputs, utt.frames);
    out.scores[i].assign(s.begin(), s.end());
  });
  return out;
}

void WriteScores(const ScoreSet& scores, const std::string& path) {
  internal::KeywordTable table;
  table.keyword_ids = scores.keyword_ids;
  table.row_ids = scores.utterance_ids;
  table.values = scores.scores;
  for (const auto& row : scores.scores) {
    if (row.size() != scores.keyword_ids.size()) {
      Fail(ErrorCode::kDimensionMismatch, "score row length does not match keyword count");
    }
    for (float v : row) {
      if (!(v >= 0.0f && v <= 1.0f)) Fail(ErrorCode::kRangeError, "score outside [0, 1]");
    }
  }
  ByteWriter w;
  w.PutBytes(std::string_view(kScoreMagic, 4));
  w.PutU32(kScoreVersion);
  w.PutU64(scores.config_tag);
  w.PutString(scores.system);
  internal::PutKeywordTable(w, table);
  w.PutChecksum();
  WriteFileAtomic(path, w.bytes());
}

ScoreSet ReadScores(const std::string& path) {
  CheckedFile file = ReadChecked(path, std::string_view(kScoreMagic, 4), kScoreVersion,
                                 ErrorCode::kCorruptArchive);
  ByteReader r = PayloadReader(file, ErrorCode::kCorruptArchive);
  ScoreSet out;
  out.config_tag = r.GetU64();
  out.system = r.GetString();
  internal::KeywordTable table = internal::GetKeywordTable(r);
  out.keyword_ids = std::move(table.keyword_ids);
  out.utterance_ids = std::move(table.row_ids);
  out.scores = std::move(table.values);
  for (const auto& row : out.scores) {
    for (float v : row) {
      if (!(v >= 0.0f && v <= 1.0f)) r.Corrupt("score outside [0, 1]");
    }
  }
  return out;
}

}  // namespace kws
