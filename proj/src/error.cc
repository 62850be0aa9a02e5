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

#include "kws/error.h"

namespace kws {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kCorruptAudio: return "CorruptAudio";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kCorruptArchive: return "CorruptArchive";
    case ErrorCode::kVersionError: return "VersionError";
    case ErrorCode::kZeroNormFrame: return "ZeroNormFrame";
    case ErrorCode::kBandTooNarrow: return "BandTooNarrow";
    case ErrorCode::kRangeError: return "RangeError";
    case ErrorCode::kInputTooShort: return "InputTooShort";
    case ErrorCode::kStaleActivations: return "StaleActivations";
    case ErrorCode::kCorruptModel: return "CorruptModel";
    case ErrorCode::kMissingTarget: return "MissingTarget";
    case ErrorCode::kInvalidExemplar: return "InvalidExemplar";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kMissingInput: return "MissingInput";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace kws
