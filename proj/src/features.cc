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

#include "kws/features.h"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <set>

#include "kws/binary_io.h"
#include "kws/error.h"

namespace kws {

namespace {

constexpr char kArchiveMagic[] = "KWFA";
constexpr uint32_t kArchiveVersion = 1;

// FFTW planning is not thread-safe; execution with new-array functions is.
std::mutex& FftwPlanMutex() {
  static std::mutex mu;
  return mu;
}

double HzToMel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(FftwPlanMutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(FftwPlanMutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // power[k] = |X_k|^2 for k in [0, n/2].
  void PowerSpectrum(const std::vector<double>& frame, std::vector<double>* power) {
    std::copy(frame.begin(), frame.end(), in_);
    std::fill(in_ + frame.size(), in_ + n_, 0.0);
    fftw_execute(plan_);
    power->resize(n_ / 2 + 1);
    for (int k = 0; k <= n_ / 2; ++k) {
      (*power)[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }
  }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

}  // namespace

const FeatureSequence* FeatureArchive::Find(const std::string& source_id) const {
  for (const auto& e : entries) {
    if (e.source_id == source_id) return &e;
  }
  return nullptr;
}

int NumFrames(int64_t num_samples, int window_samples, int shift_samples) {
  if (num_samples < window_samples) return 0;
  return static_cast<int>((num_samples - window_samples) / shift_samples) + 1;
}

FeatureSequence ExtractMfcc(const Audio& audio, const MfccConfig& config,
                            const std::string& source_id) {
  if (audio.sample_rate < 8000) {
    Fail(ErrorCode::kCorruptAudio,
         "sample rate " + std::to_string(audio.sample_rate) + " below 8000 Hz");
  }
  for (float s : audio.samples) {
    if (!std::isfinite(s)) Fail(ErrorCode::kCorruptAudio, "non-finite sample in " + source_id);
  }
  const int win =
      static_cast<int>(std::lround(audio.sample_rate * config.frame_length_ms / 1000.0));
  const int shift =
      static_cast<int>(std::lround(audio.sample_rate * config.frame_shift_ms / 1000.0));
  if (win < 2 || shift < 1 || config.num_ceps < 1 || config.num_mel_bins < config.num_ceps) {
    Fail(ErrorCode::kConfigError, "invalid MFCC framing configuration");
  }
  const int num_frames = NumFrames(static_cast<int64_t>(audio.samples.size()), win, shift);
  if (num_frames < 1) {
    Fail(ErrorCode::kEmptyInput, "audio of " + std::to_string(audio.samples.size()) +
                                     " samples is shorter than one window of " +
                                     std::to_string(win));
  }

  int fft_size = 1;
  while (fft_size < win) fft_size <<= 1;
  const int num_bins = fft_size / 2 + 1;
  const double nyquist = audio.sample_rate / 2.0;
  const double high = config.high_freq > 0 ? std::min(config.high_freq, nyquist) : nyquist;
  const double mel_low = HzToMel(config.low_freq);
  const double mel_high = HzToMel(high);
  const int num_mel = config.num_mel_bins;

  // Triangular filters on the mel scale, evaluated at FFT bin centres.
  Eigen::MatrixXd filters = Eigen::MatrixXd::Zero(num_mel, num_bins);
  const double mel_step = (mel_high - mel_low) / (num_mel + 1);
  for (int m = 0; m < num_mel; ++m) {
    const double left = mel_low + m * mel_step;
    const double centre = left + mel_step;
    const double right = centre + mel_step;
    for (int k = 0; k < num_bins; ++k) {
      const double mel = HzToMel(k * static_cast<double>(audio.sample_rate) / fft_size);
      if (mel > left && mel < right) {
        filters(m, k) =
            mel <= centre ? (mel - left) / (centre - left) : (right - mel) / (right - centre);
      }
    }
  }

  // Orthonormal DCT-II.
  Eigen::MatrixXd dct(config.num_ceps, num_mel);
  for (int c = 0; c < config.num_ceps; ++c) {
    const double scale = std::sqrt((c == 0 ? 1.0 : 2.0) / num_mel);
    for (int m = 0; m < num_mel; ++m) {
      dct(c, m) = scale * std::cos(std::numbers::pi * c * (m + 0.5) / num_mel);
    }
  }

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (win - 1));
  }

  RealFft fft(fft_size);
  FrameMatrix ceps(num_frames, config.num_ceps);
  std::vector<double> frame(win);
  std::vector<double> power;
  Eigen::VectorXd log_mel(num_mel);
  for (int t = 0; t < num_frames; ++t) {
    const float* src = audio.samples.data() + static_cast<size_t>(t) * shift;
    double mean = 0.0;
    for (int i = 0; i < win; ++i) mean += src[i];
    mean /= win;
    for (int i = 0; i < win; ++i) frame[i] = src[i] - mean;
    for (int i = win - 1; i > 0; --i) frame[i] -= config.preemphasis * frame[i - 1];
    frame[0] -= config.preemphasis * frame[0];
    for (int i = 0; i < win; ++i) frame[i] *= window[i];
    fft.PowerSpectrum(frame, &power);
    Eigen::Map<const Eigen::VectorXd> spec(power.data(), num_bins);
    log_mel = ((filters * spec).array() + config.energy_floor).log();
    ceps.row(t) = (dct * log_mel).transpose();
  }

  FeatureSequence out;
  out.source_id = source_id;
  out.frame_shift_ms = config.frame_shift_ms;
  if (!config.use_deltas && !config.use_delta_deltas) {
    out.frames = std::move(ceps);
    return out;
  }
  FrameMatrix deltas = ComputeDeltas(ceps, config.delta_window);
  out.frames.resize(num_frames, config.feature_dim());
  int col = 0;
  out.frames.middleCols(col, config.num_ceps) = ceps;
  col += config.num_ceps;
  if (config.use_deltas) {
    out.frames.middleCols(col, config.num_ceps) = deltas;
    col += config.num_ceps;
  }
  if (config.use_delta_deltas) {
    out.frames.middleCols(col, config.num_ceps) = ComputeDeltas(deltas, config.delta_window);
  }
  return out;
}

FrameMatrix ComputeDeltas(const FrameMatrix& frames, int window) {
  const int t_max = static_cast<int>(frames.rows());
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += 2.0 * n * n;
  FrameMatrix out = FrameMatrix::Zero(frames.rows(), frames.cols());
  for (int t = 0; t < t_max; ++t) {
    for (int n = 1; n <= window; ++n) {
      const int ahead = std::min(t + n, t_max - 1);
      const int behind = std::max(t - n, 0);
      out.row(t) += n * (frames.row(ahead) - frames.row(behind));
    }
    out.row(t) /= denom;
  }
  return out;
}

FeatureSequence NormalizeCmvn(const FeatureSequence& seq) {
  const int t_max = seq.num_frames();
  if (t_max < 2) {
    Fail(ErrorCode::kTooShort, "CMVN needs at least 2 frames, got " + std::to_string(t_max) +
                                   " for '" + seq.source_id + "'");
  }
  FeatureSequence out = seq;
  for (int d = 0; d < seq.dim(); ++d) {
    auto col = seq.frames.col(d);
    const double mean = col.mean();
    bool constant = true;
    for (int t = 1; t < t_max; ++t) {
      if (col(t) != col(0)) {
        constant = false;
        break;
      }
    }
    if (constant) {
      out.frames.col(d).setZero();
      continue;
    }
    const double var = (col.array() - mean).square().sum() / t_max;
    const double inv_std = 1.0 / std::sqrt(var);
    out.frames.col(d) = (col.array() - mean) * inv_std;
  }
  return out;
}

void ValidateSequence(const FeatureSequence& seq) {
  if (seq.num_frames() < 1 || seq.dim() < 1) {
    Fail(ErrorCode::kEmptyInput, "empty feature sequence '" + seq.source_id + "'");
  }
  if (!seq.frames.allFinite()) {
    Fail(ErrorCode::kCorruptArchive, "non-finite value in '" + seq.source_id + "'");
  }
  for (int t = 0; t < seq.num_frames(); ++t) {
    if (seq.frames.row(t).cwiseAbs().maxCoeff() == 0.0) {
      Fail(ErrorCode::kZeroNormFrame,
           "frame " + std::to_string(t) + " of '" + seq.source_id + "' is all zero");
    }
  }
}

void QuantizeToFloat(FrameMatrix& frames) {
  for (Eigen::Index i = 0; i < frames.size(); ++i) {
    frames.data()[i] = static_cast<double>(static_cast<float>(frames.data()[i]));
  }
}

uint64_t WriteArchive(const FeatureArchive& archive, const std::string& path) {
  if (archive.entries.empty()) Fail(ErrorCode::kEmptyInput, "archive has no entries");
  const int dim = archive.dimension > 0 ? archive.dimension : archive.entries.front().dim();
  std::set<std::string> ids;
  ByteWriter w;
  w.PutBytes(std::string_view(kArchiveMagic, 4));
  w.PutU32(kArchiveVersion);
  w.PutU32(static_cast<uint32_t>(dim));
  w.PutF64(archive.frame_shift_ms);
  w.PutU64(archive.config_tag);
  for (const auto& e : archive.entries) {
    if (e.dim() != dim) {
      Fail(ErrorCode::kDimensionMismatch, "entry '" + e.source_id +
                                              "' has D=" + std::to_string(e.dim()) +
                                              ", archive D=" + std::to_string(dim));
    }
    if (!ids.insert(e.source_id).second) {
      Fail(ErrorCode::kConfigError, "duplicate source id '" + e.source_id + "'");
    }
    ValidateSequence(e);
    w.PutString(e.source_id);
    w.PutU32(static_cast<uint32_t>(e.num_frames()));
    for (Eigen::Index i = 0; i < e.frames.size(); ++i) {
      w.PutF32(static_cast<float>(e.frames.data()[i]));
    }
  }
  w.PutChecksum();
  WriteFileAtomic(path, w.bytes());
  ByteReader tail(std::span(w.bytes()).last(8), ErrorCode::kCorruptArchive);
  return tail.GetU64();
}

FeatureArchive ReadArchive(const std::string& path) {
  CheckedFile file = ReadChecked(path, std::string_view(kArchiveMagic, 4), kArchiveVersion,
                                 ErrorCode::kCorruptArchive);
  ByteReader r = PayloadReader(file, ErrorCode::kCorruptArchive);
  FeatureArchive archive;
  archive.dimension = static_cast<int>(r.GetU32());
  archive.frame_shift_ms = r.GetF64();
  archive.config_tag = r.GetU64();
  if (archive.dimension < 1) r.Corrupt("dimension must be positive");
  std::set<std::string> ids;
  while (!r.AtEnd()) {
    FeatureSequence seq;
    seq.source_id = r.GetString();
    seq.frame_shift_ms = archive.frame_shift_ms;
    const uint32_t frames = r.GetU32();
    const uint64_t values = static_cast<uint64_t>(frames) * archive.dimension;
    if (frames == 0 || values * 4 > r.remaining()) r.Corrupt("bad frame count");
    if (!ids.insert(seq.source_id).second) r.Corrupt("duplicate id '" + seq.source_id + "'");
    seq.frames.resize(frames, archive.dimension);
    for (uint64_t i = 0; i < values; ++i) seq.frames.data()[i] = r.GetF32();
    archive.entries.push_back(std::move(seq));
  }
  ByteReader tail(std::span(file.bytes).last(8), ErrorCode::kCorruptArchive);
  archive.checksum = tail.GetU64();
  return archive;
}

}  // namespace kws
