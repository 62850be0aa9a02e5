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

#include "kws/targets.h"

#include <gtest/gtest.h>

#include "test_util.h"

namespace kws {
namespace {

using testing::CodeOf;
using testing::TempDir;

struct Toy {
  std::vector<ExemplarSet> keywords;
  FeatureArchive corpus;
};

Toy MakeToy(uint64_t seed, int num_utts = 12) {
  std::mt19937_64 rng(seed);
  Toy toy;
  for (const char* name : {"kw_a", "kw_b", "kw_c"}) {
    ExemplarSet set;
    set.keyword_id = name;
    for (int e = 0; e < 3; ++e) {
      set.exemplars.push_back(
          testing::RandomSequence(rng, std::string(name) + "/" + std::to_string(e), 5 + e, 4));
    }
    toy.keywords.push_back(set);
  }
  toy.corpus.dimension = 4;
  toy.corpus.config_tag = 42;
  for (int u = 0; u < num_utts; ++u) {
    toy.corpus.entries.push_back(
        testing::RandomSequence(rng, "utt" + std::to_string(u), 20 + u, 4));
  }
  return toy;
}

TEST(NormalizeScoreTest, AnchorsAndRange) {
  EXPECT_EQ(NormalizeScore(0.0), 1.0);
  EXPECT_EQ(NormalizeScore(2.0), 0.0);
  EXPECT_EQ(NormalizeScore(1.0), 0.5);
  for (int i = 0; i <= 2000; ++i) {
    const double y = NormalizeScore(i / 1000.0);
    EXPECT_GE(y, 0.0);
    EXPECT_LE(y, 1.0);
    if (i > 0) EXPECT_LT(y, NormalizeScore((i - 1) / 1000.0));
  }
  EXPECT_EQ(CodeOf([] { NormalizeScore(-1e-9); }), ErrorCode::kRangeError);
  EXPECT_EQ(CodeOf([] { NormalizeScore(2.0000001); }), ErrorCode::kRangeError);
  EXPECT_EQ(CodeOf([] { NormalizeScore(std::nan("")); }), ErrorCode::kRangeError);
}

TEST(BuildTargetsTest, RowsAreNormalizedKeywordCosts) {
  const Toy toy = MakeToy(1);
  const SweepConfig cfg;
  const TargetSet t = BuildTargets(toy.keywords, toy.corpus, cfg);
  ASSERT_EQ(t.rows.size(), toy.corpus.entries.size());
  EXPECT_EQ(t.keyword_ids, (std::vector<std::string>{"kw_a", "kw_b", "kw_c"}));
  EXPECT_EQ(t.config_tag, 42u);
  for (size_t u = 0; u < t.rows.size(); ++u) {
    EXPECT_EQ(t.rows[u].utterance_id, toy.corpus.entries[u].source_id);
    for (size_t k = 0; k < 3; ++k) {
      const float cost =
          static_cast<float>(KeywordCost(toy.keywords[k], toy.corpus.entries[u].frames, cfg));
      EXPECT_FLOAT_EQ(t.rows[u].y[k], static_cast<float>(NormalizeScore(cost)));
    }
  }
  EXPECT_NE(t.Find("utt3"), nullptr);
  EXPECT_EQ(t.Find("nope"), nullptr);
}

TEST(BuildTargetsTest, WorkerCountDoesNotChangeResults) {
  const Toy toy = MakeToy(2);
  const TargetSet a = BuildTargets(toy.keywords, toy.corpus, SweepConfig(), nullptr, 1);
  const TargetSet b = BuildTargets(toy.keywords, toy.corpus, SweepConfig(), nullptr, 4);
  for (size_t u = 0; u < a.rows.size(); ++u) EXPECT_EQ(a.rows[u].y, b.rows[u].y);
}

TEST(BuildTargetsTest, ResumedCacheGivesIdenticalTargets) {
  TempDir dir;
  const Toy toy = MakeToy(3);
  const SweepConfig cfg;
  const TargetSet full = BuildTargets(toy.keywords, toy.corpus, cfg);

  // Interrupt after half the corpus, persist the cache, resume on the rest.
  FeatureArchive half = toy.corpus;
  half.entries.resize(toy.corpus.entries.size() / 2);
  CostCache cache;
  BuildTargets(toy.keywords, half, cfg, &cache);
  EXPECT_EQ(cache.size(), half.entries.size() * 3);
  cache.Write(dir.File("c.kwc"));
  CostCache resumed = CostCache::Read(dir.File("c.kwc"));
  EXPECT_EQ(resumed.entries(), cache.entries());
  const TargetSet again = BuildTargets(toy.keywords, toy.corpus, cfg, &resumed);
  EXPECT_EQ(resumed.size(), toy.corpus.entries.size() * 3);
  ASSERT_EQ(again.rows.size(), full.rows.size());
  for (size_t u = 0; u < full.rows.size(); ++u) EXPECT_EQ(again.rows[u].y, full.rows[u].y);

  WriteTargets(full, dir.File("a.tgt"));
  WriteTargets(again, dir.File("b.tgt"));
  EXPECT_EQ(testing::Slurp(dir.File("a.tgt")), testing::Slurp(dir.File("b.tgt")));
}

TEST(BuildTargetsTest, CacheIsDiscardedWhenSweepOrCorpusChanges) {
  const Toy toy = MakeToy(4, 4);
  SweepConfig cfg;
  CostCache cache;
  BuildTargets(toy.keywords, toy.corpus, cfg, &cache);
  const uint64_t tag = cache.sweep_tag();
  // Poison an entry; a matching tag must serve it back.
  cache.Put("utt0", "kw_a", 2.0f);
  EXPECT_EQ(BuildTargets(toy.keywords, toy.corpus, cfg, &cache).rows[0].y[0], 0.0f);

  cfg.frame_skip = 2;
  const TargetSet fresh = BuildTargets(toy.keywords, toy.corpus, cfg, &cache);
  EXPECT_NE(cache.sweep_tag(), tag);
  EXPECT_NE(fresh.rows[0].y[0], 0.0f);

  FeatureArchive other = toy.corpus;
  other.config_tag = 43;
  EXPECT_NE(SweepConfigTag(cfg, 42), SweepConfigTag(cfg, 43));
  const uint64_t before = cache.sweep_tag();
  BuildTargets(toy.keywords, other, cfg, &cache);
  EXPECT_NE(cache.sweep_tag(), before);
}

TEST(BuildTargetsTest, Errors) {
  Toy toy = MakeToy(5, 2);
  EXPECT_EQ(CodeOf([&] { BuildTargets({}, toy.corpus, SweepConfig()); }), ErrorCode::kMissingInput);
  toy.corpus.dimension = 5;
  EXPECT_EQ(CodeOf([&] { BuildTargets(toy.keywords, toy.corpus, SweepConfig()); }),
            ErrorCode::kDimensionMismatch);
}

TEST(HardThresholdTest, Binarizes) {
  TargetSet t;
  t.keyword_ids = {"a", "b", "c"};
  t.rows.push_back({"u", {0.2f, 0.5f, 0.9f}});
  const TargetSet h = HardThreshold(t, 0.5);
  EXPECT_EQ(h.rows[0].y, (std::vector<float>{0.0f, 1.0f, 1.0f}));
}

TEST(TargetFileTest, RoundTripAndCorruption) {
  TempDir dir;
  const Toy toy = MakeToy(6);
  TargetSet t = BuildTargets(toy.keywords, toy.corpus, SweepConfig());
  WriteTargets(t, dir.File("t.tgt"));
  const TargetSet back = ReadTargets(dir.File("t.tgt"));
  EXPECT_EQ(back.keyword_ids, t.keyword_ids);
  EXPECT_EQ(back.config_tag, t.config_tag);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (size_t u = 0; u < t.rows.size(); ++u) {
    EXPECT_EQ(back.rows[u].utterance_id, t.rows[u].utterance_id);
    EXPECT_EQ(back.rows[u].y, t.rows[u].y);
  }
  const std::vector<uint8_t> good = testing::Slurp(dir.File("t.tgt"));
  std::vector<uint8_t> bad = good;
  bad[good.size() / 2] ^= 1;
  testing::Spill(dir.File("flip.tgt"), bad);
  EXPECT_EQ(CodeOf([&] { ReadTargets(dir.File("flip.tgt")); }), ErrorCode::kCorruptArchive);
  bad.assign(good.begin(), good.end() - 1);
  testing::Spill(dir.File("cut.tgt"), bad);
  EXPECT_EQ(CodeOf([&] { ReadTargets(dir.File("cut.tgt")); }), ErrorCode::kCorruptArchive);
  bad = good;
  bad[4] ^= 0x7;
  testing::Spill(dir.File("ver.tgt"), bad);
  EXPECT_EQ(CodeOf([&] { ReadTargets(dir.File("ver.tgt")); }), ErrorCode::kVersionError);

  t.rows[0].y[1] = 1.5f;
  EXPECT_EQ(CodeOf([&] { WriteTargets(t, dir.File("range.tgt")); }), ErrorCode::kRangeError);
  t.rows[0].y.pop_back();
  EXPECT_EQ(CodeOf([&] { WriteTargets(t, dir.File("dim.tgt")); }), ErrorCode::kDimensionMismatch);
}

TEST(CostCacheTest, CorruptionIsRejected) {
  TempDir dir;
  CostCache c(7);
  c.Put("u", "k", 0.5f);
  c.Write(dir.File("c.kwc"));
  std::vector<uint8_t> bytes = testing::Slurp(dir.File("c.kwc"));
  bytes[bytes.size() - 12] ^= 0xFF;
  testing::Spill(dir.File("c.kwc"), bytes);
  EXPECT_EQ(CodeOf([&] { CostCache::Read(dir.File("c.kwc")); }), ErrorCode::kCorruptArchive);
}

}  // namespace
}  // namespace kws
