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

#ifndef KWS_EVAL_H_
#define KWS_EVAL_H_

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kws/baselines.h"
#include "kws/features.h"

namespace kws {

// Utterance id -> keywords truly present. Evaluation-only input.
struct GroundTruth {
  std::map<std::string, std::set<std::string>> present;

  bool Contains(const std::string& utterance_id, const std::string& keyword_id) const;
};

// Tab-separated: utterance_id <TAB> kw1,kw2,... (empty list allowed).
// Lines starting with '#' are comments.
GroundTruth ReadGroundTruth(const std::string& path);
void WriteGroundTruth(const GroundTruth& truth, const std::string& path);

struct RocPoint {
  double threshold = 0.0;  // detect when score >= threshold
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  // First point is the (+inf, 0, 0) sentinel, then one point per distinct
  // score in decreasing order; the last point is always (min score, 1, 1).
  std::vector<RocPoint> points;
  double auc = 0.0;
  double eer = 0.0;
  // Finite threshold of the ROC point closest to the FPR = FNR crossing.
  double eer_threshold = 0.0;
};

// Trapezoidal AUC (exact rational arithmetic on counts) and EER by linear
// interpolation of the FPR = 1 - TPR crossing. Throws DegenerateLabels when
// only one class is present, DimensionMismatch on length mismatch.
RocCurve ComputeRoc(std::span<const double> scores, const std::vector<bool>& labels);

struct Confusion {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t tn = 0;
  int64_t fn = 0;
};

// Counts with "detected" meaning score >= threshold.
Confusion ConfusionAt(std::span<const double> scores, const std::vector<bool>& labels,
                      double threshold);

struct MacroMetrics {
  double auc = 0.0;
  double eer = 0.0;
};

// Unweighted means over keywords.
MacroMetrics MacroAverage(std::span<const RocCurve> curves);

struct KeywordReport {
  std::string keyword_id;
  RocCurve roc;
  Confusion at_eer;
  int64_t positives = 0;
  int64_t negatives = 0;
};

struct TimingRecord {
  std::string detector;
  int64_t utterances = 0;
  double seconds = 0.0;       // detector-only wall clock, warm-up excluded
  double load_seconds = 0.0;  // feature loading baseline, reported separately
  double utterances_per_second = 0.0;
  double audio_seconds = 0.0;     // total duration of the processed frames
  double real_time_factor = 0.0;  // seconds / audio_seconds
  int workers = 1;
};

struct EvalReport {
  std::string system;
  std::vector<KeywordReport> keywords;
  MacroMetrics macro;
  std::vector<TimingRecord> timings;
  uint64_t config_tag = 0;
};

// Scores of one keyword column with labels from the ground truth.
std::pair<std::vector<double>, std::vector<bool>> KeywordColumn(const ScoreSet& scores,
                                                                const GroundTruth& truth,
                                                                size_t keyword_index);

// Per-keyword ROC, confusion at the EER threshold, and macro averages.
EvalReport Evaluate(const ScoreSet& scores, const GroundTruth& truth);

// Throws ConfigError if the score sets disagree in tag, keyword list or
// utterance list.
void CheckCompatible(std::span<const ScoreSet> sets);

// Occurrence count per keyword (in the given keyword order).
std::vector<int64_t> KeywordDistribution(const GroundTruth& truth,
                                         std::span<const std::string> keyword_ids);

// Times `detect` over every utterance after a warm-up on the first few.
// Also times a pass that only touches the features (the loading baseline).
TimingRecord BenchmarkDetector(const std::string& name,
                               const std::function<void(const FeatureSequence&)>& detect,
                               const FeatureArchive& corpus, int warmup_utterances = 4);

// Machine-readable report plus one ROC CSV per keyword:
//   <dir>/report_<system>.json, <dir>/roc_<system>_<slug>.csv
void WriteEvalReport(const EvalReport& report, const std::string& dir);
EvalReport ReadEvalReport(const std::string& path);

// Timing records plus each detector's speedup over dtw-ks, as JSON.
void WriteTimings(std::span<const TimingRecord> timings, const std::string& path);

// Lowercase alnum, other characters folded to '_'.
std::string Slug(const std::string& s);

}  // namespace kws

#endif  // KWS_EVAL_H_
