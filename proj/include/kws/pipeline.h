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

#ifndef KWS_PIPELINE_H_
#define KWS_PIPELINE_H_

#include <ostream>
#include <string>
#include <vector>

#include "kws/config.h"

namespace kws {

struct PipelineOptions {
  // Rerun stages whose outputs exist but were produced under another config.
  bool force = false;
  // Overrides config.workers when > 0.
  int workers = 0;
  std::ostream* log = nullptr;
};

struct StageRecord {
  std::string name;
  int version = 1;
  std::string hash;
  bool skipped = false;
  double seconds = 0.0;
  std::vector<std::string> outputs;  // relative to work_dir
};

struct PipelineResult {
  // 0 success, 1 stage error, 2 config error (including a stale-output refusal).
  int exit_code = 0;
  std::string message;
  std::vector<StageRecord> stages;
};

// Stages, in order: data, targets, train-cnn-dtw, train-cnn, detect, eval,
// bench, plots. A stage is skipped when the manifest holds its current hash
// and all its outputs exist. Hashes chain through upstream stages, so a
// changed sweep reruns targets and everything after it but not data.
// Layout under work_dir:
//   data/{keywords,train,dev,test}.kwf, data/test_truth.tsv
//   targets/{train,dev}.{tgt,kwc}
//   models/cnn_dtw.kwm, models/cnn_dtw_log.jsonl, models/cnn.kwm
//   scores/<system>.ksc, report/, bench/bench.json, plots/
//   manifest.json
PipelineResult RunPipeline(const PipelineConfig& config, const PipelineOptions& options);

// Loads and validates the config file first; failures there exit with 2.
PipelineResult RunPipelineFile(const std::string& path, const PipelineOptions& options);

}  // namespace kws

#endif  // KWS_PIPELINE_H_
