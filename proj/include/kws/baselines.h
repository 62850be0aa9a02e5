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

#ifndef KWS_BASELINES_H_
#define KWS_BASELINES_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kws/dtw.h"
#include "kws/features.h"
#include "kws/nn.h"
#include "kws/train.h"

namespace kws {

struct NegativeSamplingConfig {
  // 0 means "as many as the keyword has exemplars" (balanced classes).
  int negatives_per_keyword = 0;
  int window_frames = 60;
};

struct ClassifierConfig {
  int epochs = 100;
  int batch_size = 16;
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  uint64_t seed = 1;
  int workers = 1;
  NegativeSamplingConfig negatives;
  ArchitectureConfig arch;
};

// Crops (centre) or edge-pads (centre) a sequence to exactly `frames` rows.
FrameMatrix FitWindow(const FrameMatrix& frames, int frames_out);

struct ClassifierResult {
  CnnModel model;
  std::vector<double> epoch_losses;
};

// Keyword-only classifier: every exemplar of keyword j is a positive for
// output j and a negative for the others; fixed-length windows drawn from the
// untranscribed corpus are negatives for all outputs. Negatives are redrawn
// every epoch, without replacement within an epoch where the pool allows.
// Throws InvalidExemplar when the window is below the receptive field.
ClassifierResult TrainCnnClassifier(std::span<const ExemplarSet> keywords,
                                    const FeatureArchive& negatives_source,
                                    const ClassifierConfig& config);

// Max over windows (start 0, stride, 2*stride, ...) of the model output.
// Utterances shorter than the window are edge-padded to one window.
std::vector<double> DetectCnnSliding(const CnnModel& model, const FrameMatrix& utterance,
                                     int window_frames = 60, int stride = 3);

// Whole-utterance forward; inputs below the receptive field are edge-padded.
std::vector<double> DetectCnnDtw(const CnnModel& model, const FrameMatrix& utterance);

// NormalizeScore of the mean / minimum exemplar sweep cost per keyword.
std::vector<double> DetectDtwQbye(std::span<const ExemplarSet> keywords,
                                  const FrameMatrix& utterance, const SweepConfig& config);
std::vector<double> DetectDtwKs(std::span<const ExemplarSet> keywords, const FrameMatrix& utterance,
                                const SweepConfig& config);

enum class DetectorKind { kCnn, kCnnDtw, kDtwQbye, kDtwKs };

std::string_view DetectorName(DetectorKind kind);
// Accepts "cnn", "cnn-dtw", "dtw-qbye", "dtw-ks". Throws ConfigError.
DetectorKind ParseDetector(std::string_view name);

struct ScoreSet {
  std::string system;
  std::vector<std::string> keyword_ids;
  std::vector<std::string> utterance_ids;
  std::vector<std::vector<float>> scores;  // [utterance][keyword], in [0, 1]
  uint64_t config_tag = 0;
};

struct DetectorInputs {
  DetectorKind kind = DetectorKind::kDtwKs;
  const CnnModel* model = nullptr;        // cnn, cnn-dtw
  std::span<const ExemplarSet> keywords;  // dtw-*, keyword ids for all
  SweepConfig sweep;
  int window_frames = 60;
  int stride = 3;
};

// Scores of one utterance, in keyword order.
std::vector<double> DetectUtterance(const DetectorInputs& inputs, const FrameMatrix& utterance);

// Runs a detector over every utterance of the corpus.
ScoreSet RunDetector(const DetectorInputs& inputs, const FeatureArchive& corpus, int workers = 1);

// "KWSC" | u32 version | u64 config_tag | str system | u32 L | L * str id |
// per row: str utterance_id, L * f32 | u64 CRC-64
void WriteScores(const ScoreSet& scores, const std::string& path);
ScoreSet ReadScores(const std::string& path);

}  // namespace kws

#endif  // KWS_BASELINES_H_
