// Copyright 2026 The Gemel Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gemel/binary_io.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gemel/errors.h"

namespace gemel {

uint32_t Crc32(std::span<const std::byte> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* data = reinterpret_cast<const Bytef*>(bytes.data());
  size_t left = bytes.size();
  while (left > 0) {
    auto chunk = static_cast<uInt>(std::min<size_t>(left, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    left -= chunk;
  }
  return static_cast<uint32_t>(crc);
}

std::string ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path);
  return buf.str();
}

void WriteFileBytes(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

void ByteWriter::PutF32(float v) { PutU32(std::bit_cast<uint32_t>(v)); }
void ByteWriter::PutF64(double v) { PutU64(std::bit_cast<uint64_t>(v)); }

void ByteWriter::PutCrc32() {
  PutU32(Crc32(std::as_bytes(std::span(buffer_.data(), buffer_.size()))));
}

float ByteReader::GetF32() { return std::bit_cast<float>(GetU32()); }
double ByteReader::GetF64() { return std::bit_cast<double>(GetU64()); }

std::string_view ByteReader::GetBytes(size_t n) {
  if (n > remaining()) {
    throw ValidationError("unexpected end of data at offset " +
                          std::to_string(pos_));
  }
  std::string_view out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::Seek(size_t pos) {
  if (pos > data_.size()) throw ValidationError("seek past end of data");
  pos_ = pos;
}

std::string_view VerifyTrailingCrc32(std::string_view file, const std::string& what) {
  if (file.size() < 4) throw ValidationError(what + ": checksum missing (truncated)");
  std::string_view payload = file.substr(0, file.size() - 4);
  ByteReader tail(file.substr(file.size() - 4));
  uint32_t stored = tail.GetU32();
  uint32_t actual = Crc32(std::as_bytes(std::span(payload.data(), payload.size())));
  if (stored != actual) throw ValidationError(what + ": checksum mismatch");
  return payload;
}

}  // namespace gemel
