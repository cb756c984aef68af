// Copyright 2026 The RSIC Authors. All Rights Reserved.
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


#include "rsic/bytes.hpp"

#include <bit>
#include <cstring>

namespace rsic {

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n, const char* field) {
  if (n > remaining()) {
    throw ParseError(field, "needs " + std::to_string(n) + " bytes, " + std::to_string(remaining()) +
                                " left");
  }
  const auto out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8(const char* field) { return bytes(1, field)[0]; }

std::uint16_t ByteReader::u16(const char* field) {
  const auto b = bytes(2, field);
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t ByteReader::u32(const char* field) {
  std::uint32_t v = 0;
  for (std::uint8_t b : bytes(4, field)) v = (v << 8) | b;
  return v;
}

std::uint64_t ByteReader::u64(const char* field) {
  std::uint64_t v = 0;
  for (std::uint8_t b : bytes(8, field)) v = (v << 8) | b;
  return v;
}

double ByteReader::f64(const char* field) { return std::bit_cast<double>(u64(field)); }

std::uint64_t fnv1a64(std::span<const std::uint8_t> data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : data) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace rsic
