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

#ifndef KWS_PLOTS_H_
#define KWS_PLOTS_H_

#include <string>
#include <vector>

namespace kws {

// Reads every report_*.json in `report_dir` and writes into `out_dir`:
//   roc_<keyword slug>.svg/.csv  ROC curves of dtw-ks and cnn-dtw (all
//                                systems if neither is present)
//   distribution.svg/.csv        positive utterances per keyword
// Returns the written paths. Throws MissingInput when there is no report or
// the report lists no keywords.
std::vector<std::string> EmitPlots(const std::string& report_dir, const std::string& out_dir);

}  // namespace kws

#endif  // KWS_PLOTS_H_
