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

#ifndef KWS_BINARY_IO_H_
#define KWS_BINARY_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kws/error.h"

namespace kws {

// CRC-64/XZ over a byte range.
uint64_t Crc64(std::span<const uint8_t> bytes);

// Appends little-endian encoded values to an in-memory buffer. Files are
// assembled in memory, checksummed, then written in one go.
class ByteWriter {
 public:
  void PutU8(uint8_t v) { buf_.push_back(v); }
  void PutU32(uint32_t v);
  void PutU64(uint64_t v);
  void PutF32(float v);
  void PutF64(double v);
  void PutBytes(std::string_view bytes);
  // u32 length prefix followed by the raw bytes.
  void PutString(std::string_view s);

  // Appends the CRC-64 of everything written so far.
  void PutChecksum();

  const std::vector<uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<uint8_t> buf_;
};

// Bounds-checked little-endian reader. Running off the end throws with the
// error code supplied at construction (CorruptArchive, CorruptModel, ...).
class ByteReader {
 public:
  ByteReader(std::span<const uint8_t> bytes, ErrorCode corrupt_code)
      : bytes_(bytes), corrupt_code_(corrupt_code) {}

  uint8_t GetU8();
  uint32_t GetU32();
  uint64_t GetU64();
  float GetF32();
  double GetF64();
  std::string GetBytes(size_t n);
  std::string GetString(size_t max_len = 1 << 20);

  size_t position() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }
  bool AtEnd() const { return pos_ == bytes_.size(); }

  [[noreturn]] void Corrupt(const std::string& what) const;

 private:
  void Need(size_t n) const;

  std::span<const uint8_t> bytes_;
  ErrorCode corrupt_code_;
  size_t pos_ = 0;
};

// Common header layout of every file the toolkit writes:
//   4-byte magic | u32 version | ... payload ... | u64 CRC-64 of all prior bytes
// ReadChecked() loads a file, validates magic, then version, then checksum,
// and returns a reader positioned right after the version field whose range
// excludes the trailing checksum.
struct CheckedFile {
  std::vector<uint8_t> bytes;
  uint32_t version = 0;
};

CheckedFile ReadChecked(const std::string& path, std::string_view magic, uint32_t max_version,
                        ErrorCode corrupt_code);

// Payload view of a CheckedFile (after magic+version, before checksum).
ByteReader PayloadReader(const CheckedFile& file, ErrorCode corrupt_code);

std::vector<uint8_t> ReadFileBytes(const std::string& path);

// Writes to "<path>.tmp" and renames over `path`.
void WriteFileAtomic(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace kws

#endif  // KWS_BINARY_IO_H_
