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

#ifndef KWS_FEATURES_H_
#define KWS_FEATURES_H_

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kws {

// Frames are stored row-major: one row per frame, one column per feature
// dimension. Values are held in double precision in memory and as float32 on
// disk; anything read back from an archive is exactly float-representable.
using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatureSequence {
  FrameMatrix frames;
  double frame_shift_ms = 10.0;
  std::string source_id;

  int num_frames() const { return static_cast<int>(frames.rows()); }
  int dim() const { return static_cast<int>(frames.cols()); }
};

struct FeatureArchive {
  int dimension = 0;
  double frame_shift_ms = 10.0;
  // Lineage tag of the configuration that produced the archive. Downstream
  // artifacts copy it so that evaluation can reject mixed inputs.
  uint64_t config_tag = 0;
  std::vector<FeatureSequence> entries;
  // CRC-64 of the serialized file, set by ReadArchive.
  uint64_t checksum = 0;

  // nullptr when absent.
  const FeatureSequence* Find(const std::string& source_id) const;
};

struct MfccConfig {
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int num_mel_bins = 26;
  int num_ceps = 13;
  bool use_deltas = true;
  bool use_delta_deltas = true;
  int delta_window = 2;
  double low_freq = 20.0;
  double high_freq = 0.0;  // <= 0 means Nyquist
  double preemphasis = 0.97;
  // Added to every mel energy before the log. Silence therefore maps to a
  // finite frame with c0 = sqrt(num_mel_bins) * log(energy_floor) != 0.
  double energy_floor = 1e-10;
  bool apply_cmvn = true;

  int feature_dim() const {
    return num_ceps * (1 + (use_deltas ? 1 : 0) + (use_delta_deltas ? 1 : 0));
  }
};

struct Audio {
  std::vector<float> samples;  // mono, nominally in [-1, 1]
  int sample_rate = 16000;
};

// Frame count for a signal of `num_samples` samples.
int NumFrames(int64_t num_samples, int window_samples, int shift_samples);

// MFCC (+ deltas) of one utterance. Throws EmptyInput when the audio is
// shorter than one window, CorruptAudio on non-finite samples or a sample rate
// below 8 kHz. CMVN is not applied here even if config.apply_cmvn is set.
FeatureSequence ExtractMfcc(const Audio& audio, const MfccConfig& config,
                            const std::string& source_id = "");

// Appends regression deltas of `frames` (window +-N, edge replicated).
FrameMatrix ComputeDeltas(const FrameMatrix& frames, int window);

// Per-utterance mean and variance normalization. Columns with zero variance
// are only mean-subtracted. Throws TooShort for fewer than two frames.
FeatureSequence NormalizeCmvn(const FeatureSequence& seq);

// Throws ZeroNormFrame / CorruptArchive (non-finite) if the sequence can not be
// used with cosine distance.
void ValidateSequence(const FeatureSequence& seq);

// Binary archive, little endian:
//   "KWFA" | u32 version | u32 D | f64 frame_shift_ms | u64 config_tag
//   per entry: u32 id_len | id bytes | u32 T | T*D f32 row-major
//   u64 CRC-64 of everything above
// Throws DimensionMismatch, ZeroNormFrame, EmptyInput on write and
// CorruptArchive / VersionError on read.
// Returns the checksum written.
uint64_t WriteArchive(const FeatureArchive& archive, const std::string& path);
FeatureArchive ReadArchive(const std::string& path);

// Rounds every value to float32 in place so the in-memory archive matches its
// serialized form.
void QuantizeToFloat(FrameMatrix& frames);

}  // namespace kws

#endif  // KWS_FEATURES_H_
