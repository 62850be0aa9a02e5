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

#ifndef KWS_DTW_H_
#define KWS_DTW_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kws/features.h"

namespace kws {

// The recorded repetitions of one keyword type.
struct ExemplarSet {
  std::string keyword_id;
  std::vector<FeatureSequence> exemplars;
};

struct SweepConfig {
  int frame_skip = 3;
  // Segment lengths are round(f * exemplar_length) for each factor.
  std::vector<double> window_factors = {1.0};
  // Sakoe-Chiba radius |i - j| <= band_width; unset means unconstrained.
  std::optional<int> band_width;

  void Validate() const;
};

// 1 - <x,y> / sqrt(|x|^2 |y|^2), clamped to [0, 2]. Exactly symmetric and
// exactly zero for identical vectors. Throws ZeroNormFrame / DimensionMismatch.
double CosineDistance(std::span<const double> x, std::span<const double> y);

// Pairwise cosine distances, rows of `a` against rows of `b`.
Eigen::MatrixXd CosineDistanceMatrix(const FrameMatrix& a, const FrameMatrix& b);

// Per-frame DTW cost over a precomputed distance block. Steps (1,0), (0,1),
// (1,1), unweighted. The optimal path minimises the accumulated distance,
// ties going to the shorter path; the result is accumulated distance over
// the number of cells on that path. Returns nullopt if the band admits no path.
std::optional<double> DtwCostFromDistances(const Eigen::Ref<const Eigen::MatrixXd>& dist,
                                           std::optional<int> band);

// Throws DimensionMismatch, EmptyInput, ZeroNormFrame, BandTooNarrow.
double DtwCost(const FrameMatrix& a, const FrameMatrix& b, std::optional<int> band = std::nullopt);

struct SweepResult {
  double cost = 2.0;
  int start = 0;  // earliest best segment
  int length = 0;
};

// Minimum DTW cost of the exemplar over grid-aligned segments of the
// utterance. Segments start at 0, s, 2s, ... and are clipped to the
// utterance end; clipped segments shorter than 2 frames are skipped. An
// utterance shorter than the shortest window is used whole.
SweepResult SweepMinCost(const FrameMatrix& exemplar, const FrameMatrix& utterance,
                         const SweepConfig& config);

// SweepMinCost for every exemplar of the set, in exemplar order.
std::vector<double> ExemplarSweepCosts(const ExemplarSet& set, const FrameMatrix& utterance,
                                       const SweepConfig& config);

// Minimum over exemplars (detection and training-target cost).
double KeywordCost(const ExemplarSet& set, const FrameMatrix& utterance, const SweepConfig& config);

// Mean over exemplars (query-by-example averaging).
double KeywordCostAvg(const ExemplarSet& set, const FrameMatrix& utterance,
                      const SweepConfig& config);

double MinOf(std::span<const double> costs);
// Arithmetic mean, never below MinOf(costs).
double MeanOf(std::span<const double> costs);

void ValidateExemplarSet(const ExemplarSet& set, int dim);

// Loads keyword exemplars. `path` is either one archive whose ids look like
// "<keyword>/<anything>" or a directory of archives, one per keyword, named
// "<keyword>.kwf". Sets come back sorted by keyword id.
std::vector<ExemplarSet> LoadExemplarSets(const std::string& path);

// Inverse of the single-archive layout of LoadExemplarSets.
FeatureArchive ExemplarSetsToArchive(std::span<const ExemplarSet> sets);

}  // namespace kws

#endif  // KWS_DTW_H_
