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

#ifndef GEMEL_BINARY_IO_H_
#define GEMEL_BINARY_IO_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gemel {

uint32_t Crc32(std::span<const std::byte> bytes);

std::string ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::string_view bytes);

// Little-endian append-only encoder.
class ByteWriter {
 public:
  void PutU32(uint32_t v) { PutLe(v); }
  void PutU64(uint64_t v) { PutLe(v); }
  void PutF32(float v);
  void PutF64(double v);
  void PutBytes(std::string_view bytes) { buffer_.append(bytes); }
  // Appends the CRC32 of everything written so far.
  void PutCrc32();

  const std::string& buffer() const { return buffer_; }
  size_t size() const { return buffer_.size(); }

 private:
  template <typename T>
  void PutLe(T v) {
    for (size_t i = 0; i < sizeof(T); ++i) {
      buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
  }
  std::string buffer_;
};

// Little-endian decoder over a borrowed buffer. Reads past the end throw
// ValidationError.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  uint32_t GetU32() { return GetLe<uint32_t>(); }
  uint64_t GetU64() { return GetLe<uint64_t>(); }
  float GetF32();
  double GetF64();
  std::string_view GetBytes(size_t n);

  size_t position() const { return pos_; }
  size_t remaining() const { return data_.size() - pos_; }
  void Seek(size_t pos);

 private:
  template <typename T>
  T GetLe() {
    std::string_view raw = GetBytes(sizeof(T));
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<uint8_t>(raw[i])) << (8 * i);
    }
    return v;
  }
  std::string_view data_;
  size_t pos_ = 0;
};

// Splits `file` into payload and trailing CRC32 and verifies it. Throws
// ValidationError("checksum ...") when short or mismatched.
std::string_view VerifyTrailingCrc32(std::string_view file, const std::string& what);

}  // namespace gemel

#endif  // GEMEL_BINARY_IO_H_
