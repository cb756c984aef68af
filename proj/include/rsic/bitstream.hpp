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


// The .rsic container and the compressed global description.
//
// Layout (all integers big-endian, see docs/FORMATS.md):
//
//   offset  size  field
//   0       4     magic "RSIC"
//   4       1     version
//   5       4     image height
//   9       4     image width
//   13      1     map levels
//   14      8     model hash
//   22      2     description length D
//   24      D     description, raw DEFLATE
//   24+D    P     packed weight map, P = packed_size(dims, levels)
//   ...           4 x (u32 length, bytes): latent streams for scales 0..3

#ifndef RSIC_BITSTREAM_HPP_
#define RSIC_BITSTREAM_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsic/bytes.hpp"
#include "rsic/weight_map.hpp"

namespace rsic {

inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 22;
inline constexpr std::size_t kMaxDescriptionBytes = 1024;
inline constexpr int kMaxImageSide = 1 << 16;
inline constexpr int kLatentScales = 4;

using ModelHash = std::array<std::uint8_t, 8>;

ModelHash model_hash_from_u64(std::uint64_t v);

// Containers built with one set of checkpoints and decoded with another.
class ModelMismatch : public Error {
 public:
  using Error::Error;
};

struct RsicContainer {
  std::uint8_t version = kContainerVersion;
  ImageDims dims;
  int levels = 1;
  ModelHash model_hash{};
  std::vector<std::uint8_t> description;  // compressed
  std::vector<std::uint8_t> map_bytes;    // packed WeightMap
  std::array<std::vector<std::uint8_t>, kLatentScales> streams;

  bool operator==(const RsicContainer&) const = default;
};

// Raw DEFLATE (RFC 1951) of UTF-8 text of at most 1024 bytes.
std::vector<std::uint8_t> compress_description(const std::string& text);
std::string decompress_description(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> pack_container(const RsicContainer& c);
// Throws ParseError naming the failing field.
RsicContainer unpack_container(std::span<const std::uint8_t> bytes);
// Throws ModelMismatch when the container was produced by other models.
void check_model_hash(const RsicContainer& c, const ModelHash& expected);

struct BppBreakdown {
  double header = 0.0;
  double description = 0.0;  // includes its length prefix
  double map = 0.0;
  std::array<double, kLatentScales> scales{};  // include their length prefixes
  double total = 0.0;
  std::size_t header_bytes = 0;
  std::size_t description_bytes = 0;
  std::size_t map_bytes = 0;
  std::array<std::size_t, kLatentScales> scale_bytes{};
  std::size_t total_bytes = 0;

  double latent() const { return scales[0] + scales[1] + scales[2] + scales[3]; }
};

BppBreakdown total_bpp(const RsicContainer& c);

}  // namespace rsic

#endif  // RSIC_BITSTREAM_HPP_
