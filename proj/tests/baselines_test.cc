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

#include <gtest/gtest.h>

#include "test_util.h"

namespace kws {
namespace {

using testing::CodeOf;
using testing::TempDir;

FrameMatrix Ramp(int rows) {
  FrameMatrix m(rows, 1);
  for (int r = 0; r < rows; ++r) m(r, 0) = r;
  return m;
}

std::vector<ExemplarSet> Keywords(std::mt19937_64& rng, int num_kw, int per_kw, int dim) {
  std::vector<ExemplarSet> sets;
  for (int k = 0; k < num_kw; ++k) {
    ExemplarSet s;
    s.keyword_id = "kw" + std::to_string(k);
    for (int e = 0; e < per_kw; ++e) {
      s.exemplars.push_back(
          testing::RandomSequence(rng, s.keyword_id + "/" + std::to_string(e), 4 + e % 3, dim));
    }
    sets.push_back(s);
  }
  return sets;
}

CnnModel SmallModel(int dim, int outputs) {
  ArchitectureConfig a;
  a.conv_filters = {4, 4};
  a.kernel_width = 3;
  a.dense_units = {6};
  return CnnModel(dim, BuildLayerSpecs(a, outputs), 3);
}

TEST(FitWindowTest, CentreCropAndEdgePad) {
  FrameMatrix crop = FitWindow(Ramp(10), 4);
  EXPECT_EQ(crop.col(0).transpose(), Eigen::RowVector4d(3, 4, 5, 6));
  FrameMatrix pad = FitWindow(Ramp(3), 7);
  Eigen::VectorXd expected(7);
  expected << 0, 0, 0, 1, 2, 2, 2;
  EXPECT_EQ(pad.col(0), expected);
  EXPECT_EQ(FitWindow(Ramp(5), 5), Ramp(5));
  EXPECT_EQ(CodeOf([] { FitWindow(FrameMatrix(0, 2), 3); }), ErrorCode::kEmptyInput);
}

TEST(DetectCnnTest, SlidingIsTheMaxOverWindows) {
  std::mt19937_64 rng(1);
  const CnnModel model = SmallModel(3, 2);
  const FrameMatrix utt = testing::RandomFrames(rng, 31, 3);
  const std::vector<double> got = DetectCnnSliding(model, utt, 10, 4);
  std::vector<double> want = {0, 0};
  for (int s = 0; s + 10 <= 31; s += 4) {
    const Vector y = Forward(model, utt.middleRows(s, 10), Mode::kEval);
    for (int j = 0; j < 2; ++j) want[j] = std::max(want[j], y(j));
  }
  EXPECT_EQ(got, want);
  const FrameMatrix short_utt = testing::RandomFrames(rng, 6, 3);
  const Vector padded = Forward(model, FitWindow(short_utt, 10), Mode::kEval);
  EXPECT_EQ(DetectCnnSliding(model, short_utt, 10, 4),
            std::vector<double>(padded.data(), padded.data() + 2));
  EXPECT_EQ(CodeOf([&] { DetectCnnSliding(model, utt, 10, 0); }), ErrorCode::kConfigError);
}

TEST(DetectCnnTest, CnnDtwReadsTheWholeUtterance) {
  std::mt19937_64 rng(2);
  const CnnModel model = SmallModel(3, 2);
  const FrameMatrix utt = testing::RandomFrames(rng, 40, 3);
  const Vector y = Forward(model, utt, Mode::kEval);
  EXPECT_EQ(DetectCnnDtw(model, utt), std::vector<double>(y.data(), y.data() + 2));
  // Shorter than the receptive field (5 frames): padded rather than rejected.
  EXPECT_EQ(DetectCnnDtw(model, testing::RandomFrames(rng, 3, 3)).size(), 2u);
}

TEST(DetectDtwTest, KeywordSpottingNeverScoresBelowQueryByExample) {
  std::mt19937_64 rng(3);
  const std::vector<ExemplarSet> kws = Keywords(rng, 4, 5, 3);
  for (int u = 0; u < 30; ++u) {
    const FrameMatrix utt = testing::RandomFrames(rng, 15 + u, 3);
    const std::vector<double> ks = DetectDtwKs(kws, utt, SweepConfig());
    const std::vector<double> qbye = DetectDtwQbye(kws, utt, SweepConfig());
    for (size_t k = 0; k < kws.size(); ++k) {
      EXPECT_GE(ks[k], qbye[k]);
      EXPECT_GE(qbye[k], 0.0);
      EXPECT_LE(ks[k], 1.0);
    }
  }
}

TEST(DetectDtwTest, PlantedExemplarScoresOne) {
  std::mt19937_64 rng(4);
  const std::vector<ExemplarSet> kws = Keywords(rng, 2, 3, 3);
  FrameMatrix utt = testing::RandomFrames(rng, 30, 3);
  utt.middleRows(6, kws[1].exemplars[2].num_frames()) = kws[1].exemplars[2].frames;
  EXPECT_EQ(DetectDtwKs(kws, utt, SweepConfig())[1], 1.0);
}

TEST(DetectorTest, Names) {
  for (auto k :
       {DetectorKind::kCnn, DetectorKind::kCnnDtw, DetectorKind::kDtwQbye, DetectorKind::kDtwKs}) {
    EXPECT_EQ(ParseDetector(DetectorName(k)), k);
  }
  EXPECT_EQ(DetectorName(DetectorKind::kDtwKs), "dtw-ks");
  EXPECT_EQ(CodeOf([] { ParseDetector("svm"); }), ErrorCode::kConfigError);
}

TEST(RunDetectorTest, ScoresEveryUtteranceAndKeyword) {
  std::mt19937_64 rng(5);
  const std::vector<ExemplarSet> kws = Keywords(rng, 3, 2, 3);
  FeatureArchive corpus;
  corpus.dimension = 3;
  corpus.config_tag = 77;
  for (int u = 0; u < 9; ++u) {
    corpus.entries.push_back(testing::RandomSequence(rng, "u" + std::to_string(u), 20, 3));
  }
  const CnnModel model = SmallModel(3, 3);
  for (auto kind :
       {DetectorKind::kCnn, DetectorKind::kCnnDtw, DetectorKind::kDtwQbye, DetectorKind::kDtwKs}) {
    DetectorInputs in;
    in.kind = kind;
    in.model = &model;
    in.keywords = kws;
    in.window_frames = 10;
    const ScoreSet a = RunDetector(in, corpus, 1);
    const ScoreSet b = RunDetector(in, corpus, 3);
    EXPECT_EQ(a.system, DetectorName(kind));
    EXPECT_EQ(a.keyword_ids, (std::vector<std::string>{"kw0", "kw1", "kw2"}));
    EXPECT_EQ(a.config_tag, 77u);
    ASSERT_EQ(a.scores.size(), 9u);
    EXPECT_EQ(a.scores, b.scores);
    const std::vector<double> direct = DetectUtterance(in, corpus.entries[4].frames);
    for (size_t k = 0; k < 3; ++k) EXPECT_EQ(a.scores[4][k], static_cast<float>(direct[k]));
  }
  DetectorInputs missing;
  missing.kind = DetectorKind::kCnnDtw;
  missing.keywords = kws;
  EXPECT_EQ(CodeOf([&] { RunDetector(missing, corpus); }), ErrorCode::kMissingInput);
}

TEST(ScoreFileTest, RoundTripAndCorruption) {
  TempDir dir;
  ScoreSet s;
  s.system = "dtw-ks";
  s.keyword_ids = {"a", "b"};
  s.utterance_ids = {"u1", "u2", "u3"};
  s.scores = {{0.1f, 0.9f}, {1.0f, 0.0f}, {0.33333334f, 0.5f}};
  s.config_tag = 123;
  WriteScores(s, dir.File("s.ksc"));
  const ScoreSet back = ReadScores(dir.File("s.ksc"));
  EXPECT_EQ(back.system, s.system);
  EXPECT_EQ(back.keyword_ids, s.keyword_ids);
  EXPECT_EQ(back.utterance_ids, s.utterance_ids);
  EXPECT_EQ(back.scores, s.scores);
  EXPECT_EQ(back.config_tag, 123u);
  WriteScores(back, dir.File("s2.ksc"));
  EXPECT_EQ(testing::Slurp(dir.File("s.ksc")), testing::Slurp(dir.File("s2.ksc")));

  const std::vector<uint8_t> good = testing::Slurp(dir.File("s.ksc"));
  std::vector<uint8_t> bad = good;
  bad[20] ^= 0x40;
  testing::Spill(dir.File("flip.ksc"), bad);
  EXPECT_EQ(CodeOf([&] { ReadScores(dir.File("flip.ksc")); }), ErrorCode::kCorruptArchive);
  bad.assign(good.begin(), good.begin() + 10);
  testing::Spill(dir.File("cut.ksc"), bad);
  EXPECT_EQ(CodeOf([&] { ReadScores(dir.File("cut.ksc")); }), ErrorCode::kCorruptArchive);
}

TEST(ClassifierTest, LearnsDistinctKeywords) {
  std::mt19937_64 rng(6);
  std::vector<ExemplarSet> kws;
  FeatureArchive background;
  background.dimension = 2;
  for (int u = 0; u < 10; ++u) {
    FrameMatrix f = 0.1 * testing::RandomFrames(rng, 30, 2);
    f.col(0).array() += 1.0;
    background.entries.push_back({f, 10.0, "bg" + std::to_string(u)});
  }
  for (int k = 0; k < 2; ++k) {
    ExemplarSet s;
    s.keyword_id = "kw" + std::to_string(k);
    for (int e = 0; e < 6; ++e) {
      FrameMatrix f = 0.1 * testing::RandomFrames(rng, 8, 2);
      f.col(1).array() += k == 0 ? 2.0 : -2.0;
      s.exemplars.push_back({f, 10.0, s.keyword_id + "/" + std::to_string(e)});
    }
    kws.push_back(s);
  }
  ClassifierConfig c;
  c.arch.conv_filters = {6};
  c.arch.kernel_width = 3;
  c.arch.dense_units = {8};
  c.arch.dropout = 0.0;
  c.epochs = 60;
  c.lr_start = 1e-2;
  c.lr_end = 1e-3;
  c.negatives.window_frames = 10;
  const ClassifierResult r = TrainCnnClassifier(kws, background, c);
  ASSERT_EQ(r.epoch_losses.size(), 60u);
  EXPECT_LT(r.epoch_losses.back(), 0.5 * r.epoch_losses.front());
  const std::vector<double> on_kw0 = DetectCnnSliding(r.model, kws[0].exemplars[0].frames, 10, 3);
  const std::vector<double> on_bg = DetectCnnSliding(r.model, background.entries[0].frames, 10, 3);
  EXPECT_GT(on_kw0[0], 0.5);
  EXPECT_LT(on_kw0[1], 0.5);
  EXPECT_LT(on_bg[0], 0.5);

  c.negatives.window_frames = 2;
  EXPECT_EQ(CodeOf([&] { TrainCnnClassifier(kws, background, c); }), ErrorCode::kInvalidExemplar);
  EXPECT_EQ(CodeOf([&] { TrainCnnClassifier({}, background, c); }), ErrorCode::kMissingInput);
}

}  // namespace
}  // namespace kws
