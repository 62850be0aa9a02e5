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

#ifndef KWS_SRC_TABLE_IO_H_
#define KWS_SRC_TABLE_IO_H_

#include <set>
#include <string>
#include <vector>

#include "kws/binary_io.h"

namespace kws::internal {

// Shared body of target and score files: keyword header followed by rows of
// (utterance id, L float32 values).
struct KeywordTable {
  std::vector<std::string> keyword_ids;
  std::vector<std::string> row_ids;
  std::vector<std::vector<float>> values;
};

inline void PutKeywordTable(ByteWriter& w, const KeywordTable& t) {
  w.PutU32(static_cast<uint32_t>(t.keyword_ids.size()));
  for (const auto& k : t.keyword_ids) w.PutString(k);
  for (size_t r = 0; r < t.row_ids.size(); ++r) {
    w.PutString(t.row_ids[r]);
    for (float v : t.values[r]) w.PutF32(v);
  }
}

inline KeywordTable GetKeywordTable(ByteReader& r) {
  KeywordTable t;
  const uint32_t num_keywords = r.GetU32();
  if (num_keywords == 0 || num_keywords > 1u << 16) r.Corrupt("bad keyword count");
  for (uint32_t k = 0; k < num_keywords; ++k) t.keyword_ids.push_back(r.GetString());
  std::set<std::string> seen;
  while (!r.AtEnd()) {
    t.row_ids.push_back(r.GetString());
    if (!seen.insert(t.row_ids.back()).second)
      r.Corrupt("duplicate row '" + t.row_ids.back() + "'");
    std::vector<float> row(num_keywords);
    for (auto& v : row) v = r.GetF32();
    t.values.push_back(std::move(row));
  }
  return t;
}

}  // namespace kws::internal

#endif  // KWS_SRC_TABLE_IO_H_
