// Copyright 2026 The Bitext Authors.
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

#ifndef BITEXT_BINARY_IO_H_
#define BITEXT_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "bitext/error.h"

namespace bitext {

inline void WriteU64(std::ostream &out, uint64_t value) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char *>(bytes), 8);
}

inline void WriteF64(std::ostream &out, double value) {
  WriteU64(out, std::bit_cast<uint64_t>(value));
}

inline void WriteF64s(std::ostream &out, std::span<const double> values) {
  for (double v : values) WriteF64(out, v);
}

inline void WriteF32(std::ostream &out, float value) {
  uint32_t bits = std::bit_cast<uint32_t>(value);
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char *>(bytes), 4);
}

// Little-endian reader that reports the byte offset of any short read.
class BinaryReader {
 public:
  explicit BinaryReader(std::istream &in) : in_(in) {}

  uint64_t offset() const { return offset_; }

  void ReadBytes(char *dst, size_t n, const char *what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) {
      throw DataError(std::string("truncated input reading ") + what +
                      " at byte offset " + std::to_string(offset_ + in_.gcount()));
    }
    offset_ += n;
  }

  uint64_t ReadU64(const char *what) {
    unsigned char bytes[8];
    ReadBytes(reinterpret_cast<char *>(bytes), 8, what);
    uint64_t value = 0;
    for (int i = 0; i < 8; ++i) value |= static_cast<uint64_t>(bytes[i]) << (8 * i);
    return value;
  }

  double ReadF64(const char *what) { return std::bit_cast<double>(ReadU64(what)); }

  void ReadF64s(std::span<double> dst, const char *what) {
    for (double &v : dst) v = ReadF64(what);
  }

  float ReadF32(const char *what) {
    unsigned char bytes[4];
    ReadBytes(reinterpret_cast<char *>(bytes), 4, what);
    uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(bytes[i]) << (8 * i);
    return std::bit_cast<float>(bits);
  }

  // Fails unless the stream is exhausted.
  void ExpectEnd() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw DataError("trailing bytes after byte offset " + std::to_string(offset_));
    }
  }

 private:
  std::istream &in_;
  uint64_t offset_ = 0;
};

}  // namespace bitext

#endif  // BITEXT_BINARY_IO_H_
