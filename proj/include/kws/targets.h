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

#ifndef KWS_TARGETS_H_
#define KWS_TARGETS_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kws/dtw.h"
#include "kws/features.h"

namespace kws {

// Maps a per-frame DTW cost c in [0, 2] to y = 1 - c/2 in [0, 1].
// Throws RangeError outside [0, 2].
double NormalizeScore(double cost);

struct TargetVector {
  std::string utterance_id;
  std::vector<float> y;  // one value in [0, 1] per keyword
};

// Soft training targets for a corpus. Holds no transcription data: every
// value is derived from DTW costs against keyword exemplars.
struct TargetSet {
  std::vector<std::string> keyword_ids;
  std::vector<TargetVector> rows;
  uint64_t config_tag = 0;

  int num_keywords() const { return static_cast<int>(keyword_ids.size()); }
  // nullptr when absent.
  const TargetVector* Find(const std::string& utterance_id) const;
};

// Persistent (utterance, keyword) -> float32 cost table so target generation
// can resume. `sweep_tag` identifies the sweep configuration the costs were
// computed with; a cache with a different tag is discarded.
class CostCache {
 public:
  CostCache() = default;
  explicit CostCache(uint64_t sweep_tag) : sweep_tag_(sweep_tag) {}

  uint64_t sweep_tag() const { return sweep_tag_; }
  size_t size() const { return costs_.size(); }

  const float* Find(const std::string& utterance_id, const std::string& keyword_id) const;
  void Put(const std::string& utterance_id, const std::string& keyword_id, float cost);

  // "KWCC" | u32 version | u64 sweep_tag | u64 count |
  // count * (str utterance_id, str keyword_id, f32 cost) | u64 CRC-64
  void Write(const std::string& path) const;
  static CostCache Read(const std::string& path);

  const std::map<std::pair<std::string, std::string>, float>& entries() const { return costs_; }

 private:
  uint64_t sweep_tag_ = 0;
  std::map<std::pair<std::string, std::string>, float> costs_;
};

// Stable hash of a sweep configuration and the lineage tag of the corpus it
// is applied to; used as the cost cache tag.
uint64_t SweepConfigTag(const SweepConfig& config, uint64_t corpus_tag = 0);

// y_j = NormalizeScore(KeywordCost(keywords[j], u)) for every utterance u,
// with the cost rounded to float32 first so cached and fresh runs agree
// bit for bit. Missing cache entries are computed and inserted.
TargetSet BuildTargets(std::span<const ExemplarSet> keywords, const FeatureArchive& corpus,
                       const SweepConfig& config, CostCache* cache = nullptr, int workers = 1);

// Replaces each y_j with 1 if y_j >= threshold else 0.
TargetSet HardThreshold(const TargetSet& targets, double threshold);

// "KWTG" | u32 version | u64 config_tag | u32 L | L * str keyword id |
// per row: str utterance_id, L * f32 | u64 CRC-64
void WriteTargets(const TargetSet& targets, const std::string& path);
TargetSet ReadTargets(const std::string& path);

}  // namespace kws

#endif  // KWS_TARGETS_H_
