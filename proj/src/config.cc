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

#include "kws/config.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "kws/error.h"

namespace kws {

using nlohmann::json;

namespace {

// Reads the keys of one object, rejecting anything it did not consume.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) Fail(ErrorCode::kConfigError, where_ + ": expected an object");
  }

  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) Fail(ErrorCode::kConfigError, where_ + ": unknown key '" + key + "'");
    }
  }

  template <typename T>
  Fields& Get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return *this;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      Fail(ErrorCode::kConfigError, where_ + "." + key + ": " + e.what());
    }
    return *this;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

void from_json(const json& j, MfccConfig& c) {
  Fields(j, "mfcc")
      .Get("frame_length_ms", c.frame_length_ms)
      .Get("frame_shift_ms", c.frame_shift_ms)
      .Get("num_mel_bins", c.num_mel_bins)
      .Get("num_ceps", c.num_ceps)
      .Get("use_deltas", c.use_deltas)
      .Get("use_delta_deltas", c.use_delta_deltas)
      .Get("delta_window", c.delta_window)
      .Get("low_freq", c.low_freq)
      .Get("high_freq", c.high_freq)
      .Get("preemphasis", c.preemphasis)
      .Get("energy_floor", c.energy_floor)
      .Get("apply_cmvn", c.apply_cmvn);
}

void to_json(json& j, const MfccConfig& c) {
  j = {{"frame_length_ms", c.frame_length_ms},
       {"frame_shift_ms", c.frame_shift_ms},
       {"num_mel_bins", c.num_mel_bins},
       {"num_ceps", c.num_ceps},
       {"use_deltas", c.use_deltas},
       {"use_delta_deltas", c.use_delta_deltas},
       {"delta_window", c.delta_window},
       {"low_freq", c.low_freq},
       {"high_freq", c.high_freq},
       {"preemphasis", c.preemphasis},
       {"energy_floor", c.energy_floor},
       {"apply_cmvn", c.apply_cmvn}};
}

void from_json(const json& j, SweepConfig& c) {
  // band_width: null means unconstrained.
  json band = c.band_width ? json(*c.band_width) : json();
  Fields(j, "sweep")
      .Get("frame_skip", c.frame_skip)
      .Get("window_factors", c.window_factors)
      .Get("band_width", band);
  if (band.is_null()) {
    c.band_width.reset();
  } else if (band.is_number_integer()) {
    c.band_width = band.get<int>();
  } else {
    Fail(ErrorCode::kConfigError, "sweep.band_width: expected an integer or null");
  }
}

void to_json(json& j, const SweepConfig& c) {
  j = {{"frame_skip", c.frame_skip}, {"window_factors", c.window_factors}};
  j["band_width"] = c.band_width ? json(*c.band_width) : json();
}

void from_json(const json& j, ArchitectureConfig& c) {
  Fields(j, "arch")
      .Get("conv_filters", c.conv_filters)
      .Get("kernel_width", c.kernel_width)
      .Get("stride", c.stride)
      .Get("dense_units", c.dense_units)
      .Get("dropout", c.dropout)
      .Get("use_gaussian_noise", c.use_gaussian_noise)
      .Get("noise_stddev", c.noise_stddev)
      .Get("leak", c.leak);
}

void to_json(json& j, const ArchitectureConfig& c) {
  j = {{"conv_filters", c.conv_filters},
       {"kernel_width", c.kernel_width},
       {"stride", c.stride},
       {"dense_units", c.dense_units},
       {"dropout", c.dropout},
       {"use_gaussian_noise", c.use_gaussian_noise},
       {"noise_stddev", c.noise_stddev},
       {"leak", c.leak}};
}

void from_json(const json& j, TrainConfig& c) {
  Fields(j, "train")
      .Get("epochs_max", c.epochs_max)
      .Get("batch_size", c.batch_size)
      .Get("lr_start", c.lr_start)
      .Get("lr_end", c.lr_end)
      .Get("early_stop_patience", c.early_stop_patience)
      .Get("seed", c.seed)
      .Get("dev_fraction", c.dev_fraction)
      .Get("max_skipped_fraction", c.max_skipped_fraction)
      .Get("workers", c.workers)
      .Get("arch", c.arch);
}

void to_json(json& j, const TrainConfig& c) {
  j = {{"epochs_max", c.epochs_max},
       {"batch_size", c.batch_size},
       {"lr_start", c.lr_start},
       {"lr_end", c.lr_end},
       {"early_stop_patience", c.early_stop_patience},
       {"seed", c.seed},
       {"dev_fraction", c.dev_fraction},
       {"max_skipped_fraction", c.max_skipped_fraction},
       {"workers", c.workers},
       {"arch", c.arch}};
}

void from_json(const json& j, NegativeSamplingConfig& c) {
  Fields(j, "negatives")
      .Get("negatives_per_keyword", c.negatives_per_keyword)
      .Get("window_frames", c.window_frames);
}

void to_json(json& j, const NegativeSamplingConfig& c) {
  j = {{"negatives_per_keyword", c.negatives_per_keyword}, {"window_frames", c.window_frames}};
}

void from_json(const json& j, ClassifierConfig& c) {
  Fields(j, "classifier")
      .Get("epochs", c.epochs)
      .Get("batch_size", c.batch_size)
      .Get("lr_start", c.lr_start)
      .Get("lr_end", c.lr_end)
      .Get("seed", c.seed)
      .Get("workers", c.workers)
      .Get("negatives", c.negatives)
      .Get("arch", c.arch);
}

void to_json(json& j, const ClassifierConfig& c) {
  j = {{"epochs", c.epochs},       {"batch_size", c.batch_size},
       {"lr_start", c.lr_start},   {"lr_end", c.lr_end},
       {"seed", c.seed},           {"workers", c.workers},
       {"negatives", c.negatives}, {"arch", c.arch}};
}

void from_json(const json& j, SynthConfig& c) {
  Fields(j, "synth")
      .Get("num_keywords", c.num_keywords)
      .Get("exemplars_per_keyword", c.exemplars_per_keyword)
      .Get("train_utterances", c.train_utterances)
      .Get("dev_utterances", c.dev_utterances)
      .Get("test_utterances", c.test_utterances)
      .Get("dim", c.dim)
      .Get("num_phones", c.num_phones)
      .Get("pronunciation_variants", c.pronunciation_variants)
      .Get("min_keyword_phones", c.min_keyword_phones)
      .Get("max_keyword_phones", c.max_keyword_phones)
      .Get("min_phone_frames", c.min_phone_frames)
      .Get("max_phone_frames", c.max_phone_frames)
      .Get("min_utterance_frames", c.min_utterance_frames)
      .Get("max_utterance_frames", c.max_utterance_frames)
      .Get("keyword_prior", c.keyword_prior)
      .Get("confuser_prior", c.confuser_prior)
      .Get("warp_min", c.warp_min)
      .Get("warp_max", c.warp_max)
      .Get("noise_stddev", c.noise_stddev)
      .Get("speaker_stddev", c.speaker_stddev)
      .Get("num_speakers", c.num_speakers)
      .Get("channel_offset", c.channel_offset)
      .Get("plant_grid", c.plant_grid)
      .Get("seed", c.seed);
}

void to_json(json& j, const SynthConfig& c) {
  j = {{"num_keywords", c.num_keywords},
       {"exemplars_per_keyword", c.exemplars_per_keyword},
       {"train_utterances", c.train_utterances},
       {"dev_utterances", c.dev_utterances},
       {"test_utterances", c.test_utterances},
       {"dim", c.dim},
       {"num_phones", c.num_phones},
       {"pronunciation_variants", c.pronunciation_variants},
       {"min_keyword_phones", c.min_keyword_phones},
       {"max_keyword_phones", c.max_keyword_phones},
       {"min_phone_frames", c.min_phone_frames},
       {"max_phone_frames", c.max_phone_frames},
       {"min_utterance_frames", c.min_utterance_frames},
       {"max_utterance_frames", c.max_utterance_frames},
       {"keyword_prior", c.keyword_prior},
       {"confuser_prior", c.confuser_prior},
       {"warp_min", c.warp_min},
       {"warp_max", c.warp_max},
       {"noise_stddev", c.noise_stddev},
       {"speaker_stddev", c.speaker_stddev},
       {"num_speakers", c.num_speakers},
       {"channel_offset", c.channel_offset},
       {"plant_grid", c.plant_grid},
       {"seed", c.seed}};
}

void from_json(const json& j, WavSource& c) {
  Fields(j, "wav")
      .Get("keywords_dir", c.keywords_dir)
      .Get("train_dir", c.train_dir)
      .Get("dev_dir", c.dev_dir)
      .Get("test_dir", c.test_dir)
      .Get("test_truth", c.test_truth);
}

void to_json(json& j, const WavSource& c) {
  j = {{"keywords_dir", c.keywords_dir},
       {"train_dir", c.train_dir},
       {"dev_dir", c.dev_dir},
       {"test_dir", c.test_dir},
       {"test_truth", c.test_truth}};
}

void from_json(const json& j, DetectConfig& c) {
  Fields(j, "detect").Get("window_frames", c.window_frames).Get("stride", c.stride);
}

void to_json(json& j, const DetectConfig& c) {
  j = {{"window_frames", c.window_frames}, {"stride", c.stride}};
}

void from_json(const json& j, PipelineConfig& c) {
  Fields(j, "pipeline")
      .Get("version", c.version)
      .Get("work_dir", c.work_dir)
      .Get("source", c.source)
      .Get("synth", c.synth)
      .Get("wav", c.wav)
      .Get("mfcc", c.mfcc)
      .Get("sweep", c.sweep)
      .Get("train", c.train)
      .Get("classifier", c.classifier)
      .Get("detect", c.detect)
      .Get("systems", c.systems)
      .Get("workers", c.workers);
}

void to_json(json& j, const PipelineConfig& c) {
  j = {{"version", c.version}, {"work_dir", c.work_dir}, {"source", c.source},
       {"synth", c.synth},     {"wav", c.wav},           {"mfcc", c.mfcc},
       {"sweep", c.sweep},     {"train", c.train},       {"classifier", c.classifier},
       {"detect", c.detect},   {"systems", c.systems},   {"workers", c.workers}};
}

void PipelineConfig::Validate() const {
  if (version < 1 || version > kPipelineConfigVersion) {
    Fail(ErrorCode::kConfigError,
         "pipeline: unsupported config version " + std::to_string(version));
  }
  if (work_dir.empty()) Fail(ErrorCode::kConfigError, "pipeline: work_dir is empty");
  if (source == "synth") {
    synth.Validate();
  } else if (source == "wav") {
    for (const auto& [name, path] : {std::pair{"keywords_dir", wav.keywords_dir},
                                     {"train_dir", wav.train_dir},
                                     {"dev_dir", wav.dev_dir},
                                     {"test_dir", wav.test_dir},
                                     {"test_truth", wav.test_truth}}) {
      if (path.empty())
        Fail(ErrorCode::kConfigError, std::string("pipeline: wav.") + name + " is empty");
    }
  } else {
    Fail(ErrorCode::kConfigError,
         "pipeline: source must be 'synth' or 'wav', got '" + source + "'");
  }
  sweep.Validate();
  train.Validate();
  if (detect.window_frames < 1 || detect.stride < 1) {
    Fail(ErrorCode::kConfigError, "pipeline: detect window and stride must be >= 1");
  }
  if (systems.empty()) Fail(ErrorCode::kConfigError, "pipeline: no systems listed");
  for (const auto& s : systems) ParseDetector(s);
  if (workers < 1) Fail(ErrorCode::kConfigError, "pipeline: workers must be >= 1");
}

json ReadJsonFile(const std::string& path) {
  if (!std::filesystem::exists(path)) Fail(ErrorCode::kMissingInput, path + ": no such file");
  std::ifstream in(path);
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfigError, path + ": " + e.what());
  }
}

template <typename T>
T LoadConfig(const std::string& path) {
  const json j = ReadJsonFile(path);
  T config;
  try {
    from_json(j, config);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfigError, path + ": " + e.what());
  }
  return config;
}

template MfccConfig LoadConfig<MfccConfig>(const std::string&);
template SweepConfig LoadConfig<SweepConfig>(const std::string&);
template TrainConfig LoadConfig<TrainConfig>(const std::string&);
template ClassifierConfig LoadConfig<ClassifierConfig>(const std::string&);
template SynthConfig LoadConfig<SynthConfig>(const std::string&);
template PipelineConfig LoadConfig<PipelineConfig>(const std::string&);

}  // namespace kws
