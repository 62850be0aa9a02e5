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

#include "kws/wav.h"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "kws/binary_io.h"
#include "kws/error.h"
#include "kws/parallel.h"

namespace kws {

Audio ReadWav(const std::string& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  ByteReader r(bytes, ErrorCode::kCorruptAudio);
  if (r.GetBytes(4) != "RIFF") r.Corrupt(path + ": not a RIFF file");
  r.GetU32();
  if (r.GetBytes(4) != "WAVE") r.Corrupt(path + ": not a WAVE file");

  int channels = 0;
  int bits = 0;
  Audio audio;
  bool have_fmt = false;
  while (r.remaining() >= 8) {
    const std::string id = r.GetBytes(4);
    const uint32_t size = r.GetU32();
    if (size > r.remaining()) r.Corrupt(path + ": chunk '" + id + "' overruns file");
    if (id == "fmt ") {
      ByteReader fmt(std::span<const uint8_t>(bytes).subspan(r.position(), size),
                     ErrorCode::kCorruptAudio);
      const uint32_t word0 = fmt.GetU32();  // format tag | channel count
      const uint32_t format = word0 & 0xffff;
      channels = static_cast<int>(word0 >> 16);
      audio.sample_rate = static_cast<int>(fmt.GetU32());
      fmt.GetU32();                         // byte rate
      const uint32_t word3 = fmt.GetU32();  // block align | bits per sample
      bits = static_cast<int>(word3 >> 16);
      if (format != 1 || bits != 16 || channels < 1) {
        r.Corrupt(path + ": only 16-bit PCM is supported");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) r.Corrupt(path + ": data chunk before fmt chunk");
      const size_t frames = size / (2 * static_cast<size_t>(channels));
      ByteReader data(std::span<const uint8_t>(bytes).subspan(r.position(), size),
                      ErrorCode::kCorruptAudio);
      audio.samples.resize(frames);
      for (size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
          const uint16_t lo = data.GetU8();
          const uint16_t hi = data.GetU8();
          acc += static_cast<int16_t>(static_cast<uint16_t>(lo | (hi << 8)));
        }
        audio.samples[i] = static_cast<float>(acc / channels / 32768.0);
      }
      return audio;
    }
    r.GetBytes(size + (size & 1));
  }
  r.Corrupt(path + ": no data chunk");
}

void WriteWav(const Audio& audio, const std::string& path) {
  ByteWriter w;
  const uint32_t data_bytes = static_cast<uint32_t>(audio.samples.size() * 2);
  w.PutBytes("RIFF");
  w.PutU32(36 + data_bytes);
  w.PutBytes("WAVE");
  w.PutBytes("fmt ");
  w.PutU32(16);
  w.PutU32(1u | (1u << 16));  // PCM, mono
  w.PutU32(static_cast<uint32_t>(audio.sample_rate));
  w.PutU32(static_cast<uint32_t>(audio.sample_rate) * 2);
  w.PutU32(2u | (16u << 16));  // block align, bits per sample
  w.PutBytes("data");
  w.PutU32(data_bytes);
  for (float s : audio.samples) {
    const long scaled = std::lround(static_cast<double>(s) * 32768.0);
    const auto v = static_cast<int16_t>(std::clamp(scaled, -32768L, 32767L));
    const auto u = static_cast<uint16_t>(v);
    w.PutU8(static_cast<uint8_t>(u & 0xff));
    w.PutU8(static_cast<uint8_t>(u >> 8));
  }
  WriteFileAtomic(path, w.bytes());
}

FeatureArchive ExtractWavDirectory(const std::string& dir, const MfccConfig& config, int workers) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) Fail(ErrorCode::kMissingInput, dir + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      files.push_back(entry.path());
  }
  if (files.empty()) Fail(ErrorCode::kMissingInput, dir + ": no .wav files");
  std::sort(files.begin(), files.end());

  FeatureArchive archive;
  archive.dimension = config.feature_dim();
  archive.frame_shift_ms = config.frame_shift_ms;
  archive.entries.resize(files.size());
  ParallelFor(files.size(), workers, [&](size_t i) {
    const std::string id = fs::relative(files[i], dir).replace_extension().generic_string();
    FeatureSequence seq = ExtractMfcc(ReadWav(files[i].string()), config, id);
    if (config.apply_cmvn) seq = NormalizeCmvn(seq);
    QuantizeToFloat(seq.frames);
    ValidateSequence(seq);
    archive.entries[i] = std::move(seq);
  });
  return archive;
}

}  // namespace kws
