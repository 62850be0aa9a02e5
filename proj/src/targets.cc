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

#include <cmath>

#include "kws/binary_io.h"
#include "kws/error.h"
#include "kws/parallel.h"
#include "table_io.h"

namespace kws {

namespace {

constexpr char kTargetMagic[] = "KWTG";
constexpr char kCacheMagic[] = "KWCC";
constexpr uint32_t kTargetVersion = 1;
constexpr uint32_t kCacheVersion = 1;

}  // namespace

double NormalizeScore(double cost) {
  if (!(cost >= 0.0 && cost <= 2.0)) {
    Fail(ErrorCode::kRangeError, "cost " + std::to_string(cost) + " outside [0, 2]");
  }
  return -0.5 * cost + 1.0;
}

const TargetVector* TargetSet::Find(const std::string& utterance_id) const {
  for (const auto& row : rows) {
    if (row.utterance_id == utterance_id) return &row;
  }
  return nullptr;
}

const float* CostCache::Find(const std::string& utterance_id, const std::string& keyword_id) const {
  auto it = costs_.find({utterance_id, keyword_id});
  return it == costs_.end() ? nullptr : &it->second;
}

void CostCache::Put(const std::string& utterance_id, const std::string& keyword_id, float cost) {
  if (!(cost >= 0.0f && cost <= 2.0f)) {
    Fail(ErrorCode::kRangeError, "cached cost outside [0, 2]");
  }
  costs_[{utterance_id, keyword_id}] = cost;
}

void CostCache::Write(const std::string& path) const {
  ByteWriter w;
  w.PutBytes(std::string_view(kCacheMagic, 4));
  w.PutU32(kCacheVersion);
  w.PutU64(sweep_tag_);
  w.PutU64(costs_.size());
  for (const auto& [key, cost] : costs_) {
    w.PutString(key.first);
    w.PutString(key.second);
    w.PutF32(cost);
  }
  w.PutChecksum();
  WriteFileAtomic(path, w.bytes());
}

CostCache CostCache::Read(const std::string& path) {
  CheckedFile file = ReadChecked(path, std::string_view(kCacheMagic, 4), kCacheVersion,
                                 ErrorCode::kCorruptArchive);
  ByteReader r = PayloadReader(file, ErrorCode::kCorruptArchive);
  CostCache cache(r.GetU64());
  const uint64_t count = r.GetU64();
  for (uint64_t i = 0; i < count; ++i) {
    std::string utt = r.GetString();
    std::string kw = r.GetString();
    const float cost = r.GetF32();
    if (!(cost >= 0.0f && cost <= 2.0f)) r.Corrupt("cost outside [0, 2]");
    cache.costs_[{std::move(utt), std::move(kw)}] = cost;
  }
  if (!r.AtEnd()) r.Corrupt("trailing bytes");
  return cache;
}

uint64_t SweepConfigTag(const SweepConfig& config, uint64_t corpus_tag) {
  ByteWriter w;
  w.PutU64(corpus_tag);
  w.PutU32(static_cast<uint32_t>(config.frame_skip));
  w.PutU32(static_cast<uint32_t>(config.window_factors.size()));
  for (double f : config.window_factors) w.PutF64(f);
  w.PutU32(config.band_width ? static_cast<uint32_t>(*config.band_width) + 1 : 0);
  return Crc64(w.bytes());
}

TargetSet BuildTargets(std::span<const ExemplarSet> keywords, const FeatureArchive& corpus,
                       const SweepConfig& config, CostCache* cache, int workers) {
  config.Validate();
  if (keywords.empty()) Fail(ErrorCode::kMissingInput, "no keyword sets");
  for (const auto& set : keywords) ValidateExemplarSet(set, corpus.dimension);
  for (const auto& utt : corpus.entries) {
    if (utt.dim() != corpus.dimension) {
      Fail(ErrorCode::kDimensionMismatch,
           "utterance '" + utt.source_id + "' has D=" + std::to_string(utt.dim()));
    }
  }
  const uint64_t tag = SweepConfigTag(config, corpus.config_tag);
  if (cache != nullptr && cache->sweep_tag() != tag) *cache = CostCache(tag);

  const size_t num_kw = keywords.size();
  const size_t num_utt = corpus.entries.size();
  std::vector<float> costs(num_utt * num_kw, -1.0f);
  std::vector<size_t> todo;
  for (size_t u = 0; u < num_utt; ++u) {
    for (size_t k = 0; k < num_kw; ++k) {
      const float* hit = cache != nullptr
                             ? cache->Find(corpus.entries[u].source_id, keywords[k].keyword_id)
                             : nullptr;
      if (hit != nullptr) {
        costs[u * num_kw + k] = *hit;
      } else {
        todo.push_back(u * num_kw + k);
      }
    }
  }
  ParallelFor(todo.size(), workers, [&](size_t i) {
    const size_t idx = todo[i];
    const auto& utt = corpus.entries[idx / num_kw];
    costs[idx] = static_cast<float>(KeywordCost(keywords[idx % num_kw], utt.frames, config));
  });
  if (cache != nullptr) {
    for (size_t idx : todo) {
      cache->Put(corpus.entries[idx / num_kw].source_id, keywords[idx % num_kw].keyword_id,
                 costs[idx]);
    }
  }

  TargetSet targets;
  targets.config_tag = corpus.config_tag;
  for (const auto& set : keywords) targets.keyword_ids.push_back(set.keyword_id);
  targets.rows.reserve(num_utt);
  for (size_t u = 0; u < num_utt; ++u) {
    TargetVector row;
    row.utterance_id = corpus.entries[u].source_id;
    row.y.reserve(num_kw);
    for (size_t k = 0; k < num_kw; ++k) {
      row.y.push_back(static_cast<float>(NormalizeScore(costs[u * num_kw + k])));
    }
    targets.rows.push_back(std::move(row));
  }
  return targets;
}

TargetSet HardThreshold(const TargetSet& targets, double threshold) {
  TargetSet out = targets;
  for (auto& row : out.rows) {
    for (auto& y : row.y) y = y >= threshold ? 1.0f : 0.0f;
  }
  return out;
}

void WriteTargets(const TargetSet& targets, const std::string& path) {
  internal::KeywordTable table;
  table.keyword_ids = targets.keyword_ids;
  for (const auto& row : targets.rows) {
    if (row.y.size() != targets.keyword_ids.size()) {
      Fail(ErrorCode::kDimensionMismatch,
           "target row '" + row.utterance_id + "' has " + std::to_string(row.y.size()) + " values");
    }
    for (float y : row.y) {
      if (!(y >= 0.0f && y <= 1.0f)) Fail(ErrorCode::kRangeError, "target outside [0, 1]");
    }
    table.row_ids.push_back(row.utterance_id);
    table.values.push_back(row.y);
  }
  ByteWriter w;
  w.PutBytes(std::string_view(kTargetMagic, 4));
  w.PutU32(kTargetVersion);
  w.PutU64(targets.config_tag);
  internal::PutKeywordTable(w, table);
  w.PutChecksum();
  WriteFileAtomic(path, w.bytes());
}

TargetSet ReadTargets(const std::string& path) {
  CheckedFile file = ReadChecked(path, std::string_view(kTargetMagic, 4), kTargetVersion,
                                 ErrorCode::kCorruptArchive);
  ByteReader r = PayloadReader(file, ErrorCode::kCorruptArchive);
  TargetSet targets;
  targets.config_tag = r.GetU64();
  internal::KeywordTable table = internal::GetKeywordTable(r);
  targets.keyword_ids = std::move(table.keyword_ids);
  for (size_t i = 0; i < table.row_ids.size(); ++i) {
    for (float y : table.values[i]) {
      if (!(y >= 0.0f && y <= 1.0f)) r.Corrupt("target outside [0, 1]");
    }
    targets.rows.push_back({std::move(table.row_ids[i]), std::move(table.values[i])});
  }
  return targets;
}

}  // namespace kws
