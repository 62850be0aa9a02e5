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

#ifndef KWS_ERROR_H_
#define KWS_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace kws {

enum class ErrorCode {
  kEmptyInput,
  kCorruptAudio,
  kTooShort,
  kDimensionMismatch,
  kCorruptArchive,
  kVersionError,
  kZeroNormFrame,
  kBandTooNarrow,
  kRangeError,
  kInputTooShort,
  kStaleActivations,
  kCorruptModel,
  kMissingTarget,
  kInvalidExemplar,
  kDegenerateLabels,
  kMissingInput,
  kConfigError,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure in the toolkit surfaces as an Error carrying a code, so
// callers (and tests) can dispatch on the kind without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace kws

#endif  // KWS_ERROR_H_
