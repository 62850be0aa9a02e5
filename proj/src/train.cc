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

#include "kws/train.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "kws/error.h"
#include "kws/parallel.h"

namespace kws {

namespace {

using Clock = std::chrono::steady_clock;

// Builds samples for every corpus utterance; short utterances are recorded
// in `skipped` instead.
std::vector<Sample> MakeSamples(const FeatureArchive& corpus, const TargetSet& targets,
                                int min_frames, std::vector<std::string>* skipped) {
  std::unordered_map<std::string, const TargetVector*> by_id;
  for (const auto& row : targets.rows) by_id[row.utterance_id] = &row;
  std::vector<Sample> samples;
  samples.reserve(corpus.entries.size());
  for (const auto& utt : corpus.entries) {
    auto it = by_id.find(utt.source_id);
    if (it == by_id.end()) {
      Fail(ErrorCode::kMissingTarget, "no target row for utterance '" + utt.source_id + "'");
    }
    if (it->second->y.size() != targets.keyword_ids.size()) {
      Fail(ErrorCode::kDimensionMismatch, "target row '" + utt.source_id + "' has wrong length");
    }
    if (utt.num_frames() < min_frames) {
      skipped->push_back(utt.source_id);
      continue;
    }
    Sample s;
    s.input = utt.frames;
    s.target.assign(it->second->y.begin(), it->second->y.end());
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace

void TrainConfig::Validate() const {
  auto bad = [](const std::string& what) { Fail(ErrorCode::kConfigError, "train: " + what); };
  if (epochs_max < 1) bad("epochs_max must be >= 1");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (!(lr_end > 0) || !(lr_start >= lr_end)) bad("need lr_start >= lr_end > 0");
  if (early_stop_patience < 1) bad("early_stop_patience must be >= 1");
  if (!(dev_fraction > 0 && dev_fraction < 1)) bad("dev_fraction must be in (0, 1)");
}

double TrainLog::BestDevLoss() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : epochs) best = std::min(best, e.dev_loss);
  return best;
}

void TrainLog::WriteJsonLines(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot write " + path);
  for (const auto& e : epochs) {
    nlohmann::json j = {
        {"type", "epoch"},        {"epoch", e.epoch}, {"train_loss", e.train_loss},
        {"dev_loss", e.dev_loss}, {"lr", e.lr},       {"wall_seconds", e.wall_seconds}};
    out << j.dump() << '\n';
  }
  nlohmann::json summary = {{"type", "summary"},
                            {"stopping_epoch", stopping_epoch},
                            {"best_epoch", best_epoch},
                            {"best_dev_loss", BestDevLoss()},
                            {"skipped", skipped}};
  out << summary.dump() << '\n';
}

int64_t StepsPerEpoch(size_t num_samples, int batch_size) {
  return static_cast<int64_t>((num_samples + batch_size - 1) / batch_size);
}

Trainer::Trainer(CnnModel model, const LrSchedule& schedule, uint64_t seed, int workers)
    : model_(std::move(model)),
      optimizer_(AdamState::For(model_, schedule)),
      shuffle_rng_(seed),
      seed_(seed),
      workers_(workers) {}

double Trainer::Step(const std::vector<const Sample*>& batch) {
  if (batch.empty()) return 0.0;
  // Each sample draws its dropout/noise from its own stream, so results do
  // not depend on how samples are spread over workers.
  std::vector<Gradients> per_sample(batch.size());
  const uint64_t base = draws_;
  ParallelFor(batch.size(), workers_, [&](size_t i) {
    std::seed_seq seq{static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32),
                      static_cast<uint32_t>(base + i), static_cast<uint32_t>((base + i) >> 32)};
    Rng rng(seq);
    ForwardCache cache;
    Forward(model_, batch[i]->input, Mode::kTrain, &rng, &cache);
    per_sample[i] = Backward(model_, cache, batch[i]->target);
  });
  draws_ += batch.size();
  Gradients total = Gradients::ZerosLike(model_);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& g : per_sample) total.Add(g, scale);
  AdamStep(optimizer_, model_, total);
  return total.loss;
}

double Trainer::RunEpoch(const std::vector<Sample>& samples, int batch_size) {
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), shuffle_rng_);
  double loss_sum = 0.0;
  for (size_t begin = 0; begin < order.size(); begin += batch_size) {
    const size_t end = std::min(order.size(), begin + batch_size);
    std::vector<const Sample*> batch;
    for (size_t i = begin; i < end; ++i) batch.push_back(&samples[order[i]]);
    loss_sum += Step(batch) * static_cast<double>(batch.size());
  }
  return samples.empty() ? 0.0 : loss_sum / static_cast<double>(samples.size());
}

double Trainer::Evaluate(const std::vector<Sample>& samples) const {
  std::vector<double> losses(samples.size());
  ParallelFor(samples.size(), workers_, [&](size_t i) {
    const Vector pred = Forward(model_, samples[i].input, Mode::kEval);
    losses[i] = BceLoss(samples[i].target, std::span<const double>(pred.data(), pred.size()));
  });
  double sum = 0.0;
  for (double l : losses) sum += l;
  return samples.empty() ? 0.0 : sum / static_cast<double>(samples.size());
}

TrainResult TrainCnnDtw(const FeatureArchive& corpus, const TargetSet& targets,
                        const FeatureArchive& dev_corpus, const TargetSet& dev_targets,
                        const TrainConfig& config) {
  config.Validate();
  if (targets.keyword_ids != dev_targets.keyword_ids) {
    Fail(ErrorCode::kConfigError, "train and dev targets list different keywords");
  }
  if (corpus.dimension != dev_corpus.dimension) {
    Fail(ErrorCode::kDimensionMismatch, "train and dev archives differ in dimension");
  }
  const int num_outputs = targets.num_keywords();
  CnnModel model(corpus.dimension, BuildLayerSpecs(config.arch, num_outputs), config.seed);

  TrainLog log;
  std::vector<Sample> train = MakeSamples(corpus, targets, model.MinInputFrames(), &log.skipped);
  std::vector<Sample> dev =
      MakeSamples(dev_corpus, dev_targets, model.MinInputFrames(), &log.skipped);
  const size_t total = corpus.entries.size() + dev_corpus.entries.size();
  if (train.empty() || dev.empty() ||
      static_cast<double>(log.skipped.size()) > config.max_skipped_fraction * total) {
    Fail(ErrorCode::kInputTooShort, std::to_string(log.skipped.size()) + " of " +
                                        std::to_string(total) +
                                        " utterances are shorter than the receptive field of " +
                                        std::to_string(model.MinInputFrames()) + " frames");
  }

  LrSchedule schedule{config.lr_start, config.lr_end,
                      config.epochs_max * StepsPerEpoch(train.size(), config.batch_size)};
  Trainer trainer(std::move(model), schedule, config.seed, config.workers);

  CnnModel best_model = trainer.model();
  AdamState best_optimizer = trainer.optimizer();
  double best_dev = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= config.epochs_max; ++epoch) {
    const auto start = Clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = trainer.RunEpoch(train, config.batch_size);
    rec.dev_loss = trainer.Evaluate(dev);
    rec.lr = schedule.At(std::max<int64_t>(trainer.optimizer().step - 1, 0));
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    log.epochs.push_back(rec);
    log.stopping_epoch = epoch;
    if (rec.dev_loss < best_dev) {
      best_dev = rec.dev_loss;
      best_model = trainer.model();
      best_optimizer = trainer.optimizer();
      log.best_epoch = epoch;
    } else if (epoch - log.best_epoch >= config.early_stop_patience) {
      break;
    }
  }
  return {std::move(best_model), std::move(best_optimizer), std::move(log)};
}

DevSplit SplitDev(const FeatureArchive& corpus, const TargetSet& targets, double dev_fraction,
                  uint64_t seed) {
  if (!(dev_fraction > 0 && dev_fraction < 1)) {
    Fail(ErrorCode::kConfigError, "dev_fraction must be in (0, 1)");
  }
  std::vector<size_t> order(corpus.entries.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const size_t num_dev =
      std::max<size_t>(1, static_cast<size_t>(std::lround(dev_fraction * order.size())));
  if (num_dev >= order.size()) Fail(ErrorCode::kConfigError, "corpus too small to split");
  std::vector<bool> is_dev(order.size(), false);
  for (size_t i = 0; i < num_dev; ++i) is_dev[order[i]] = true;

  DevSplit split;
  for (FeatureArchive* a : {&split.train_corpus, &split.dev_corpus}) {
    a->dimension = corpus.dimension;
    a->frame_shift_ms = corpus.frame_shift_ms;
    a->config_tag = corpus.config_tag;
  }
  for (TargetSet* t : {&split.train_targets, &split.dev_targets}) {
    t->keyword_ids = targets.keyword_ids;
    t->config_tag = targets.config_tag;
  }
  for (size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto& utt = corpus.entries[i];
    const TargetVector* row = targets.Find(utt.source_id);
    if (row == nullptr) {
      Fail(ErrorCode::kMissingTarget, "no target row for utterance '" + utt.source_id + "'");
    }
    (is_dev[i] ? split.dev_corpus : split.train_corpus).entries.push_back(utt);
    (is_dev[i] ? split.dev_targets : split.train_targets).rows.push_back(*row);
  }
  return split;
}

}  // namespace kws
