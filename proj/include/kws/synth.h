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

#ifndef KWS_SYNTH_H_
#define KWS_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "kws/dtw.h"
#include "kws/eval.h"
#include "kws/features.h"

namespace kws {

// Feature-space corpus generator. Keywords and background speech are both
// built from one shared inventory of "phone" vectors; a keyword is a fixed
// phone string. Utterances are background phone strings with time-warped,
// speaker-shifted, noisy copies of keywords planted in them. Exemplars are
// further copies, by speakers from the same pool, with a constant channel
// offset on top.
struct SynthConfig {
  int num_keywords = 5;
  int exemplars_per_keyword = 10;
  int train_utterances = 400;
  int dev_utterances = 150;
  int test_utterances = 300;
  int dim = 13;
  int num_phones = 16;
  // Pronunciations per keyword: variant 0 is the base phone string, the
  // others differ from it in one phone. Every exemplar and every planted
  // occurrence uses one variant drawn uniformly.
  int pronunciation_variants = 3;
  int min_keyword_phones = 4;
  int max_keyword_phones = 6;
  int min_phone_frames = 4;
  int max_phone_frames = 8;
  int min_utterance_frames = 100;
  int max_utterance_frames = 200;
  // Probability that an utterance contains a given keyword.
  double keyword_prior = 0.2;
  // Probability that an utterance contains a near-miss of a random keyword
  // (one phone substituted), which is not a true occurrence.
  double confuser_prior = 0.3;
  double warp_min = 0.8;
  double warp_max = 1.25;
  double noise_stddev = 0.3;
  double speaker_stddev = 0.3;
  int num_speakers = 8;
  // Per-dimension magnitude of the offset added to every exemplar frame.
  double channel_offset = 1.0;
  // Plant start frames are multiples of this.
  int plant_grid = 1;
  uint64_t seed = 1;

  // Throws ConfigError.
  void Validate() const;
  // Longest possible warped keyword, in frames.
  int MaxWarpedKeywordFrames() const;
  // Stable digest, used as the lineage tag of every generated archive.
  uint64_t Tag() const;
};

struct Plant {
  std::string split;
  std::string utterance_id;
  std::string keyword_id;
  int start = 0;
  int length = 0;
};

struct SynthCorpus {
  std::vector<ExemplarSet> keywords;
  FeatureArchive train;
  FeatureArchive dev;
  FeatureArchive test;
  GroundTruth train_truth;
  GroundTruth dev_truth;
  GroundTruth test_truth;
  std::vector<Plant> plants;
  // Clean templates before warping and noise, [keyword][variant].
  std::vector<std::vector<FrameMatrix>> prototypes;
};

// Deterministic given config.seed; all values are float32-representable.
SynthCorpus GenerateSynth(const SynthConfig& config);

// Writes keywords.kwf, {train,dev,test}.kwf, {train,dev,test}_truth.tsv and
// plants.tsv into `dir`.
void WriteSynthCorpus(const SynthCorpus& corpus, const std::string& dir);

}  // namespace kws

#endif  // KWS_SYNTH_H_
