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

#include "kws/eval.h"

#include <gtest/gtest.h>

#include <filesystem>

#include "eval_oracle.h"
#include "test_util.h"

namespace kws {
namespace {

using testing::CodeOf;
using testing::TempDir;

TEST(RocTest, AucEqualsPairCounting) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto [scores, labels] = testing::RandomInstance(rng, 50);
    EXPECT_NEAR(ComputeRoc(scores, labels).auc, testing::MannWhitneyAuc(scores, labels), 1e-12);
  }
}

TEST(RocTest, CurveShape) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto [scores, labels] = testing::RandomInstance(rng, 40);
    const RocCurve roc = ComputeRoc(scores, labels);
    EXPECT_EQ(roc.points.front().fpr, 0.0);
    EXPECT_EQ(roc.points.front().tpr, 0.0);
    EXPECT_EQ(roc.points.back().fpr, 1.0);
    EXPECT_EQ(roc.points.back().tpr, 1.0);
    for (size_t i = 1; i < roc.points.size(); ++i) {
      EXPECT_LT(roc.points[i].threshold, roc.points[i - 1].threshold);
      EXPECT_GE(roc.points[i].fpr, roc.points[i - 1].fpr);
      EXPECT_GE(roc.points[i].tpr, roc.points[i - 1].tpr);
      const Confusion c = ConfusionAt(scores, labels, roc.points[i].threshold);
      EXPECT_DOUBLE_EQ(roc.points[i].tpr, static_cast<double>(c.tp) / (c.tp + c.fn));
      EXPECT_DOUBLE_EQ(roc.points[i].fpr, static_cast<double>(c.fp) / (c.fp + c.tn));
    }
    EXPECT_GE(roc.eer, 0.0);
    EXPECT_LE(roc.eer, 1.0);
  }
}

TEST(RocTest, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto [scores, labels] = testing::RandomInstance(rng, 30);
    const RocCurve a = ComputeRoc(scores, labels);
    for (double& s : scores) s = std::exp(0.3 * s) - 7;
    const RocCurve b = ComputeRoc(scores, labels);
    EXPECT_NEAR(a.auc, b.auc, 1e-15);
    EXPECT_NEAR(a.eer, b.eer, 1e-15);
    for (double& s : scores) s = -s;
    EXPECT_NEAR(ComputeRoc(scores, labels).auc, 1.0 - a.auc, 1e-12);
  }
}

TEST(RocTest, EerExamples) {
  // Perfect, inverted and uninformative detectors.
  const std::vector<bool> l = {true, true, false, false};
  EXPECT_EQ(ComputeRoc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, l).eer, 0.0);
  EXPECT_EQ(ComputeRoc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, l).auc, 1.0);
  EXPECT_EQ(ComputeRoc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, l).eer, 1.0);
  EXPECT_EQ(ComputeRoc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, l).eer, 0.5);
  EXPECT_EQ(ComputeRoc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, l).auc, 0.5);
  // The FPR = FNR crossing falls on a ROC vertex.
  EXPECT_EQ(ComputeRoc(std::vector<double>{0.9, 0.4, 0.6, 0.1}, l).eer, 0.5);
  // Crossing between vertices (0, 0.5) and (1, 0.5): interpolated.
  const RocCurve mid =
      ComputeRoc(std::vector<double>{3, 1, 2}, std::vector<bool>{true, true, false});
  EXPECT_DOUBLE_EQ(mid.eer, 0.5);
  EXPECT_DOUBLE_EQ(mid.auc, 0.5);
}

TEST(RocTest, Errors) {
  EXPECT_EQ(CodeOf([] { ComputeRoc(std::vector<double>{1, 2}, {true, true}); }),
            ErrorCode::kDegenerateLabels);
  EXPECT_EQ(CodeOf([] { ComputeRoc(std::vector<double>{1, 2}, {false, false}); }),
            ErrorCode::kDegenerateLabels);
  EXPECT_EQ(CodeOf([] { ComputeRoc(std::vector<double>{1}, {true, false}); }),
            ErrorCode::kDimensionMismatch);
}

TEST(ConfusionTest, Counts) {
  const std::vector<double> s = {0.9, 0.7, 0.7, 0.3, 0.1};
  const std::vector<bool> l = {true, false, true, true, false};
  const Confusion c = ConfusionAt(s, l, 0.7);
  EXPECT_EQ(c.tp, 2);
  EXPECT_EQ(c.fp, 1);
  EXPECT_EQ(c.fn, 1);
  EXPECT_EQ(c.tn, 1);
}

ScoreSet Scores() {
  ScoreSet s;
  s.system = "dtw-ks";
  s.keyword_ids = {"yes", "no"};
  s.utterance_ids = {"u1", "u2", "u3", "u4"};
  s.scores = {{0.9f, 0.1f}, {0.2f, 0.8f}, {0.6f, 0.7f}, {0.3f, 0.2f}};
  s.config_tag = 5;
  return s;
}

GroundTruth Truth() {
  GroundTruth t;
  t.present = {{"u1", {"yes"}}, {"u2", {"no"}}, {"u3", {"yes", "no"}}, {"u4", {}}};
  return t;
}

TEST(EvaluateTest, PerKeywordAndMacro) {
  const EvalReport r = Evaluate(Scores(), Truth());
  ASSERT_EQ(r.keywords.size(), 2u);
  EXPECT_EQ(r.keywords[0].positives, 2);
  EXPECT_EQ(r.keywords[0].negatives, 2);
  EXPECT_EQ(r.keywords[0].roc.auc, 1.0);
  EXPECT_EQ(r.keywords[1].roc.auc, 1.0);
  EXPECT_EQ(r.macro.auc, 1.0);
  EXPECT_EQ(r.macro.eer, 0.0);
  EXPECT_EQ(r.config_tag, 5u);

  GroundTruth extra = Truth();
  extra.present["u4"].insert("maybe");
  EXPECT_EQ(CodeOf([&] { Evaluate(Scores(), extra); }), ErrorCode::kConfigError);
  GroundTruth missing = Truth();
  missing.present.erase("u2");
  EXPECT_EQ(CodeOf([&] { Evaluate(Scores(), missing); }), ErrorCode::kMissingInput);
  GroundTruth none = Truth();
  for (auto& [u, k] : none.present) k.erase("no");
  EXPECT_EQ(CodeOf([&] { Evaluate(Scores(), none); }), ErrorCode::kDegenerateLabels);
}

TEST(EvaluateTest, ReportRoundTrip) {
  TempDir dir;
  const EvalReport r = Evaluate(Scores(), Truth());
  WriteEvalReport(r, dir.File("rep"));
  EXPECT_TRUE(std::filesystem::exists(dir.File("rep/report_dtw_ks.json")));
  EXPECT_TRUE(std::filesystem::exists(dir.File("rep/roc_dtw_ks_yes.csv")));
  const EvalReport back = ReadEvalReport(dir.File("rep/report_dtw_ks.json"));
  EXPECT_EQ(back.system, "dtw-ks");
  EXPECT_EQ(back.macro.auc, r.macro.auc);
  ASSERT_EQ(back.keywords.size(), 2u);
  EXPECT_EQ(back.keywords[1].keyword_id, "no");
  EXPECT_EQ(back.keywords[1].roc.points.size(), r.keywords[1].roc.points.size());
  EXPECT_EQ(back.keywords[1].at_eer.tp, r.keywords[1].at_eer.tp);
}

TEST(TruthTest, FileRoundTripAndDistribution) {
  TempDir dir;
  WriteGroundTruth(Truth(), dir.File("t.tsv"));
  const GroundTruth back = ReadGroundTruth(dir.File("t.tsv"));
  EXPECT_EQ(back.present, Truth().present);
  EXPECT_TRUE(back.Contains("u3", "no"));
  EXPECT_FALSE(back.Contains("u4", "no"));
  const std::vector<std::string> ids = {"yes", "no", "absent"};
  EXPECT_EQ(KeywordDistribution(back, ids), (std::vector<int64_t>{2, 2, 0}));
  EXPECT_EQ(CodeOf([&] { ReadGroundTruth(dir.File("none.tsv")); }), ErrorCode::kMissingInput);
}

TEST(CompatibilityTest, RejectsMixedInputs) {
  std::vector<ScoreSet> sets = {Scores(), Scores()};
  sets[1].system = "cnn";
  EXPECT_NO_THROW(CheckCompatible(sets));
  sets[1].config_tag = 6;
  EXPECT_EQ(CodeOf([&] { CheckCompatible(sets); }), ErrorCode::kConfigError);
  sets[1] = Scores();
  sets[1].utterance_ids[0] = "other";
  EXPECT_EQ(CodeOf([&] { CheckCompatible(sets); }), ErrorCode::kConfigError);
}

TEST(BenchmarkTest, CountsUtterancesAfterWarmup) {
  FeatureArchive corpus;
  corpus.dimension = 2;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    corpus.entries.push_back(testing::RandomSequence(rng, "u" + std::to_string(i), 100, 2));
  }
  int calls = 0;
  const TimingRecord t =
      BenchmarkDetector("x", [&](const FeatureSequence&) { ++calls; }, corpus, 4);
  EXPECT_EQ(t.detector, "x");
  EXPECT_EQ(t.utterances, 10);
  EXPECT_EQ(calls, 14);
  EXPECT_DOUBLE_EQ(t.audio_seconds, 10.0);
  EXPECT_GE(t.seconds, 0.0);
}

TEST(SlugTest, Examples) {
  EXPECT_EQ(Slug("cnn-dtw"), "cnn_dtw");
  EXPECT_EQ(Slug("Kw/01"), "kw_01");
  EXPECT_EQ(Slug(""), "_");
}

}  // namespace
}  // namespace kws
