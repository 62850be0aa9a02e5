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

#ifndef KWS_CONFIG_H_
#define KWS_CONFIG_H_

#include <json.hpp>
#include <string>
#include <vector>

#include "kws/baselines.h"
#include "kws/dtw.h"
#include "kws/features.h"
#include "kws/synth.h"
#include "kws/train.h"

namespace kws {

// Stage configs are JSON objects. Missing keys keep their defaults; unknown
// keys and wrongly typed values raise ConfigError.
void from_json(const nlohmann::json& j, MfccConfig& c);
void from_json(const nlohmann::json& j, SweepConfig& c);
void from_json(const nlohmann::json& j, ArchitectureConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void from_json(const nlohmann::json& j, NegativeSamplingConfig& c);
void from_json(const nlohmann::json& j, ClassifierConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

void to_json(nlohmann::json& j, const MfccConfig& c);
void to_json(nlohmann::json& j, const SweepConfig& c);
void to_json(nlohmann::json& j, const ArchitectureConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void to_json(nlohmann::json& j, const NegativeSamplingConfig& c);
void to_json(nlohmann::json& j, const ClassifierConfig& c);
void to_json(nlohmann::json& j, const SynthConfig& c);

// Where the corpus comes from when data.source is "wav". Keyword exemplars
// live in keywords_dir/<keyword>/*.wav.
struct WavSource {
  std::string keywords_dir;
  std::string train_dir;
  std::string dev_dir;
  std::string test_dir;
  std::string test_truth;
};

struct DetectConfig {
  int window_frames = 60;
  int stride = 3;
};

inline constexpr int kPipelineConfigVersion = 1;

struct PipelineConfig {
  int version = kPipelineConfigVersion;
  std::string work_dir = "work";
  std::string source = "synth";  // "synth" or "wav"
  SynthConfig synth;
  WavSource wav;
  MfccConfig mfcc;
  SweepConfig sweep;
  TrainConfig train;
  ClassifierConfig classifier;
  DetectConfig detect;
  std::vector<std::string> systems = {"cnn", "cnn-dtw", "dtw-qbye", "dtw-ks"};
  int workers = 1;

  void Validate() const;
};

void from_json(const nlohmann::json& j, WavSource& c);
void from_json(const nlohmann::json& j, DetectConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);
void to_json(nlohmann::json& j, const WavSource& c);
void to_json(nlohmann::json& j, const DetectConfig& c);
void to_json(nlohmann::json& j, const PipelineConfig& c);

// Reads a JSON file and converts it; parse and conversion failures become
// ConfigError, a missing file MissingInput.
template <typename T>
T LoadConfig(const std::string& path);

nlohmann::json ReadJsonFile(const std::string& path);

}  // namespace kws

#endif  // KWS_CONFIG_H_
