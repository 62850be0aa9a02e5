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

#include "kws/binary_io.h"

#include <bit>
#include <boost/crc.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace kws {

uint64_t Crc64(std::span<const uint8_t> bytes) {
  // CRC-64/XZ parameters.
  boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, 0xFFFFFFFFFFFFFFFFULL, 0xFFFFFFFFFFFFFFFFULL, true,
                     true>
      crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

void ByteWriter::PutU32(uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::PutU64(uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::PutF32(float v) { PutU32(std::bit_cast<uint32_t>(v)); }

void ByteWriter::PutF64(double v) { PutU64(std::bit_cast<uint64_t>(v)); }

void ByteWriter::PutBytes(std::string_view bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::PutString(std::string_view s) {
  PutU32(static_cast<uint32_t>(s.size()));
  PutBytes(s);
}

void ByteWriter::PutChecksum() { PutU64(Crc64(buf_)); }

void ByteReader::Corrupt(const std::string& what) const {
  Fail(corrupt_code_, what + " (at byte " + std::to_string(pos_) + ")");
}

void ByteReader::Need(size_t n) const {
  if (remaining() < n) Corrupt("unexpected end of data");
}

uint8_t ByteReader::GetU8() {
  Need(1);
  return bytes_[pos_++];
}

uint32_t ByteReader::GetU32() {
  Need(4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

uint64_t ByteReader::GetU64() {
  Need(8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

float ByteReader::GetF32() { return std::bit_cast<float>(GetU32()); }

double ByteReader::GetF64() { return std::bit_cast<double>(GetU64()); }

std::string ByteReader::GetBytes(size_t n) {
  Need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::string ByteReader::GetString(size_t max_len) {
  uint32_t n = GetU32();
  if (n > max_len) Corrupt("string length " + std::to_string(n) + " too large");
  return GetBytes(n);
}

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot open " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

CheckedFile ReadChecked(const std::string& path, std::string_view magic, uint32_t max_version,
                        ErrorCode corrupt_code) {
  CheckedFile file;
  file.bytes = ReadFileBytes(path);
  const auto& b = file.bytes;
  if (b.size() < magic.size() + 4 ||
      std::string_view(reinterpret_cast<const char*>(b.data()), magic.size()) != magic) {
    Fail(corrupt_code, path + ": bad magic, expected '" + std::string(magic) + "'");
  }
  ByteReader header(std::span<const uint8_t>(b).subspan(magic.size(), 4), corrupt_code);
  file.version = header.GetU32();
  if (file.version == 0 || file.version > max_version) {
    Fail(ErrorCode::kVersionError,
         path + ": unsupported format version " + std::to_string(file.version));
  }
  if (b.size() < magic.size() + 4 + 8) Fail(corrupt_code, path + ": truncated");
  const size_t body = b.size() - 8;
  ByteReader tail(std::span<const uint8_t>(b).subspan(body), corrupt_code);
  const uint64_t stored = tail.GetU64();
  if (stored != Crc64(std::span<const uint8_t>(b).first(body))) {
    Fail(corrupt_code, path + ": checksum mismatch");
  }
  return file;
}

ByteReader PayloadReader(const CheckedFile& file, ErrorCode corrupt_code) {
  const size_t begin = 8;  // magic + version
  const size_t end = file.bytes.size() - 8;
  return ByteReader(std::span(file.bytes).subspan(begin, end - begin), corrupt_code);
}

void WriteFileAtomic(const std::string& path, std::span<const uint8_t> bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorCode::kIoError, "cannot open " + tmp + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(ErrorCode::kIoError, "write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) Fail(ErrorCode::kIoError, "rename " + tmp + " -> " + path + ": " + ec.message());
}

}  // namespace kws
