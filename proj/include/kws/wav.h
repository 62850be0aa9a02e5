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

#ifndef KWS_WAV_H_
#define KWS_WAV_H_

#include <string>
#include <vector>

#include "kws/features.h"

namespace kws {

// Reads a RIFF/WAVE file holding 16-bit PCM. Multi-channel audio is
// downmixed by averaging channels. Throws CorruptAudio on anything else.
Audio ReadWav(const std::string& path);

// Writes 16-bit mono PCM: samples are scaled by 32768 and clipped to the
// int16 range.
void WriteWav(const Audio& audio, const std::string& path);

// MFCC archive of every *.wav under `dir` (recursively, sorted). Entry ids
// are the relative paths without extension, so keywords_dir/<kw>/<name>.wav
// becomes "<kw>/<name>". CMVN is applied when the config asks for it.
FeatureArchive ExtractWavDirectory(const std::string& dir, const MfccConfig& config,
                                   int workers = 1);

}  // namespace kws

#endif  // KWS_WAV_H_
