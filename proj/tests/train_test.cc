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

#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>

#include "test_util.h"

namespace kws {
namespace {

using testing::CodeOf;
using testing::TempDir;

FeatureArchive Corpus(uint64_t seed, int n, const std::string& prefix) {
  std::mt19937_64 rng(seed);
  FeatureArchive a;
  a.dimension = 3;
  for (int i = 0; i < n; ++i) {
    a.entries.push_back(testing::RandomSequence(rng, prefix + std::to_string(i), 12 + i % 5, 3));
  }
  return a;
}

TargetSet Constant(const FeatureArchive& corpus, float value) {
  TargetSet t;
  t.keyword_ids = {"a", "b"};
  for (const auto& u : corpus.entries) t.rows.push_back({u.source_id, {value, value}});
  return t;
}

TrainConfig SmallConfig() {
  TrainConfig c;
  c.arch.conv_filters = {4, 4};
  c.arch.kernel_width = 3;
  c.arch.dense_units = {8};
  c.epochs_max = 8;
  c.batch_size = 4;
  c.lr_start = 1e-2;
  c.lr_end = 1e-3;
  c.early_stop_patience = 2;
  return c;
}

TEST(TrainTest, StopsWhenDevLossRises) {
  // Train targets are all 1 and dev targets all 0, so every epoch of
  // progress on train makes dev worse.
  const FeatureArchive train = Corpus(1, 16, "t"), dev = Corpus(2, 6, "d");
  TrainConfig c = SmallConfig();
  c.early_stop_patience = 1;
  const TrainResult r = TrainCnnDtw(train, Constant(train, 1.0f), dev, Constant(dev, 0.0f), c);
  EXPECT_EQ(r.log.best_epoch, 1);
  EXPECT_EQ(r.log.stopping_epoch, 2);
  ASSERT_EQ(r.log.epochs.size(), 2u);
  EXPECT_GT(r.log.epochs[1].dev_loss, r.log.epochs[0].dev_loss);
}

TEST(TrainTest, ReturnedCheckpointHasTheMinimumDevLoss) {
  const FeatureArchive train = Corpus(3, 20, "t"), dev = Corpus(4, 8, "d");
  TargetSet tt = Constant(train, 0.0f), dt = Constant(dev, 0.0f);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto* t : {&tt, &dt}) {
    for (auto& row : t->rows) row.y = {u(rng), u(rng)};
  }
  TrainConfig c = SmallConfig();
  c.epochs_max = 12;
  const TrainResult r = TrainCnnDtw(train, tt, dev, dt, c);
  double min_dev = r.log.epochs[0].dev_loss;
  for (const auto& e : r.log.epochs) min_dev = std::min(min_dev, e.dev_loss);
  EXPECT_EQ(r.log.BestDevLoss(), min_dev);
  EXPECT_EQ(r.log.epochs[r.log.best_epoch - 1].dev_loss, min_dev);

  // Re-evaluating the returned model reproduces the logged loss.
  std::vector<Sample> samples;
  for (size_t i = 0; i < dev.entries.size(); ++i) {
    samples.push_back(
        {dev.entries[i].frames, std::vector<double>(dt.rows[i].y.begin(), dt.rows[i].y.end())});
  }
  Trainer probe(r.model, LrSchedule(), 1, 1);
  EXPECT_EQ(probe.Evaluate(samples), min_dev);

  for (size_t i = 1; i < r.log.epochs.size(); ++i) {
    EXPECT_LE(r.log.epochs[i].lr, r.log.epochs[i - 1].lr);
  }
}

TEST(TrainTest, DeterministicAndWorkerInvariant) {
  const FeatureArchive train = Corpus(6, 12, "t"), dev = Corpus(7, 4, "d");
  TargetSet tt = Constant(train, 0.3f), dt = Constant(dev, 0.7f);
  TrainConfig c = SmallConfig();
  c.epochs_max = 3;
  const TrainResult a = TrainCnnDtw(train, tt, dev, dt, c);
  const TrainResult b = TrainCnnDtw(train, tt, dev, dt, c);
  c.workers = 3;
  const TrainResult w = TrainCnnDtw(train, tt, dev, dt, c);
  for (size_t l = 0; l < a.model.params().size(); ++l) {
    EXPECT_EQ(a.model.params()[l].weight, b.model.params()[l].weight);
    EXPECT_EQ(a.model.params()[l].weight, w.model.params()[l].weight);
    EXPECT_EQ(a.model.params()[l].bias, w.model.params()[l].bias);
  }
  for (size_t e = 0; e < a.log.epochs.size(); ++e) {
    EXPECT_EQ(a.log.epochs[e].dev_loss, w.log.epochs[e].dev_loss);
  }
  c.workers = 1;
  c.seed = 2;
  const TrainResult other = TrainCnnDtw(train, tt, dev, dt, c);
  EXPECT_NE(a.model.params()[1].weight, other.model.params()[1].weight);
}

TEST(TrainTest, ScheduleReachesItsEndValue) {
  TrainConfig c;
  LrSchedule s{c.lr_start, c.lr_end, c.epochs_max * StepsPerEpoch(400, c.batch_size)};
  EXPECT_EQ(StepsPerEpoch(400, 16), 25);
  EXPECT_EQ(StepsPerEpoch(401, 16), 26);
  EXPECT_EQ(s.At(0), 1e-4);
  EXPECT_EQ(s.At(s.total_steps), 1e-5);
}

TEST(TrainTest, Errors) {
  const FeatureArchive train = Corpus(8, 6, "t"), dev = Corpus(9, 3, "d");
  TargetSet tt = Constant(train, 0.5f);
  const TargetSet dt = Constant(dev, 0.5f);
  tt.rows.pop_back();
  EXPECT_EQ(CodeOf([&] { TrainCnnDtw(train, tt, dev, dt, SmallConfig()); }),
            ErrorCode::kMissingTarget);
  TrainConfig c = SmallConfig();
  c.arch.kernel_width = 9;  // receptive field 17 > every utterance
  EXPECT_EQ(CodeOf([&] { TrainCnnDtw(train, Constant(train, 0.5f), dev, dt, c); }),
            ErrorCode::kInputTooShort);
  c = SmallConfig();
  c.batch_size = 0;
  EXPECT_EQ(CodeOf([&] { TrainCnnDtw(train, Constant(train, 0.5f), dev, dt, c); }),
            ErrorCode::kConfigError);
}

TEST(SplitDevTest, PartitionsTheCorpus) {
  const FeatureArchive corpus = Corpus(10, 20, "u");
  const DevSplit s = SplitDev(corpus, Constant(corpus, 0.5f), 0.25, 3);
  EXPECT_EQ(s.dev_corpus.entries.size(), 5u);
  EXPECT_EQ(s.train_corpus.entries.size(), 15u);
  for (size_t i = 0; i < s.dev_corpus.entries.size(); ++i) {
    EXPECT_EQ(s.dev_corpus.entries[i].source_id, s.dev_targets.rows[i].utterance_id);
    EXPECT_EQ(s.train_corpus.Find(s.dev_corpus.entries[i].source_id), nullptr);
  }
  EXPECT_EQ(CodeOf([&] { SplitDev(corpus, Constant(corpus, 0.5f), 1.0, 3); }),
            ErrorCode::kConfigError);
}

TEST(TrainLogTest, JsonLines) {
  TempDir dir;
  TrainLog log;
  log.epochs = {{1, 0.9, 0.8, 1e-4, 0.1}, {2, 0.7, 0.85, 9e-5, 0.1}};
  log.best_epoch = 1;
  log.stopping_epoch = 2;
  log.WriteJsonLines(dir.File("log.jsonl"));
  std::ifstream in(dir.File("log.jsonl"));
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[1]["epoch"], 2);
  EXPECT_EQ(lines[1]["dev_loss"], 0.85);
  EXPECT_EQ(lines[2]["best_epoch"], 1);
}

}  // namespace
}  // namespace kws
