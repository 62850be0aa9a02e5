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

#ifndef KWS_TRAIN_H_
#define KWS_TRAIN_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kws/features.h"
#include "kws/nn.h"
#include "kws/targets.h"

namespace kws {

struct TrainConfig {
  int epochs_max = 50;
  int batch_size = 16;
  double lr_start = 1e-4;
  double lr_end = 1e-5;
  int early_stop_patience = 5;
  uint64_t seed = 1;
  // Used by SplitDev when no explicit development archive is given.
  double dev_fraction = 0.1;
  // Fraction of utterances allowed to be skipped for being shorter than the
  // receptive field before training refuses to run.
  double max_skipped_fraction = 0.1;
  int workers = 1;
  // Architecture; its use_gaussian_noise flag switches the input noise layer.
  ArchitectureConfig arch;

  void Validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double lr = 0.0;  // learning rate at the last step of the epoch
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int stopping_epoch = 0;
  int best_epoch = 0;                // epoch whose checkpoint was returned
  std::vector<std::string> skipped;  // utterances shorter than the receptive field

  double BestDevLoss() const;
  // One JSON object per line: epochs, then a summary record.
  void WriteJsonLines(const std::string& path) const;
};

struct TrainResult {
  CnnModel model;
  AdamState optimizer;
  TrainLog log;
};

// Trains the DTW-supervised CNN. Only feature archives and DTW target sets
// enter here; the dev targets come from the same DTW pipeline, so neither
// fitting nor model selection touches transcriptions. Returns the checkpoint
// with the lowest dev loss and stops after `early_stop_patience` epochs
// without improvement. Throws MissingTarget, InputTooShort.
TrainResult TrainCnnDtw(const FeatureArchive& corpus, const TargetSet& targets,
                        const FeatureArchive& dev_corpus, const TargetSet& dev_targets,
                        const TrainConfig& config);

// Deterministic random split of a corpus (and its targets) into train/dev.
struct DevSplit {
  FeatureArchive train_corpus;
  TargetSet train_targets;
  FeatureArchive dev_corpus;
  TargetSet dev_targets;
};
DevSplit SplitDev(const FeatureArchive& corpus, const TargetSet& targets, double dev_fraction,
                  uint64_t seed);

// One (input, target) pair for the generic fitting loop.
struct Sample {
  Matrix input;
  std::vector<double> target;
};

// Minibatch Adam over in-memory samples; shared by the DTW-supervised and
// the keyword-only trainers.
class Trainer {
 public:
  Trainer(CnnModel model, const LrSchedule& schedule, uint64_t seed, int workers);

  // One pass over `samples` in a seeded shuffled order; returns the mean
  // per-sample loss measured during the pass.
  double RunEpoch(const std::vector<Sample>& samples, int batch_size);

  // One Adam step on the mean gradient of the given samples.
  double Step(const std::vector<const Sample*>& batch);

  // Mean eval-mode loss.
  double Evaluate(const std::vector<Sample>& samples) const;

  const CnnModel& model() const { return model_; }
  CnnModel& mutable_model() { return model_; }
  const AdamState& optimizer() const { return optimizer_; }

 private:
  CnnModel model_;
  AdamState optimizer_;
  Rng shuffle_rng_;
  uint64_t seed_;
  uint64_t draws_ = 0;
  int workers_;
};

// Number of minibatches per epoch.
int64_t StepsPerEpoch(size_t num_samples, int batch_size);

}  // namespace kws

#endif  // KWS_TRAIN_H_
