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


#include "rsic/bitstream.hpp"

#include <zlib.h>

#include <algorithm>

namespace rsic {

namespace {

constexpr std::uint8_t kMagic[4] = {'R', 'S', 'I', 'C'};

bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (int k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += extra + 1;
  }
  return true;
}

}  // namespace

ModelHash model_hash_from_u64(std::uint64_t v) {
  ModelHash h{};
  for (int i = 0; i < 8; ++i) h[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
  return h;
}

std::vector<std::uint8_t> compress_description(const std::string& text) {
  if (text.size() > kMaxDescriptionBytes) {
    throw InvalidArgument("description is " + std::to_string(text.size()) + " bytes; limit is 1024");
  }
  if (!valid_utf8(text)) throw InvalidArgument("description is not valid UTF-8");
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -15, 9, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error("deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(text.size())));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(text.data()));
  zs.avail_in = static_cast<uInt>(text.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  const std::size_t produced = out.size() - zs.avail_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error("deflate did not finish");
  out.resize(produced);
  return out;
}

std::string decompress_description(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) throw Error("inflateInit2 failed");
  std::string out(kMaxDescriptionBytes + 1, '\0');
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = out.size() - zs.avail_out;
  const uInt left = zs.avail_in;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw ParseError("description", "malformed or truncated DEFLATE stream");
  if (left != 0) throw ParseError("description", "trailing bytes after DEFLATE stream");
  if (produced > kMaxDescriptionBytes) throw ParseError("description", "longer than 1024 bytes");
  out.resize(produced);
  if (!valid_utf8(out)) throw ParseError("description", "not valid UTF-8");
  return out;
}

std::vector<std::uint8_t> pack_container(const RsicContainer& c) {
  if (c.dims.height <= 0 || c.dims.width <= 0 || c.dims.height > kMaxImageSide ||
      c.dims.width > kMaxImageSide) {
    throw InvalidArgument("container image dims out of range");
  }
  if (c.levels < 1 || c.levels > kMaxLevels) throw InvalidArgument("container levels out of range");
  if (c.description.size() > 0xFFFF) throw InvalidArgument("container description too long");
  if (c.map_bytes.size() != packed_size(c.dims, c.levels)) {
    throw InvalidArgument("container map is " + std::to_string(c.map_bytes.size()) + " bytes, expected " +
                          std::to_string(packed_size(c.dims, c.levels)));
  }
  ByteWriter w;
  w.bytes(kMagic);
  w.u8(c.version);
  w.u32(static_cast<std::uint32_t>(c.dims.height));
  w.u32(static_cast<std::uint32_t>(c.dims.width));
  w.u8(static_cast<std::uint8_t>(c.levels));
  w.bytes(c.model_hash);
  w.u16(static_cast<std::uint16_t>(c.description.size()));
  w.bytes(c.description);
  w.bytes(c.map_bytes);
  for (const auto& s : c.streams) {
    if (s.size() > 0xFFFFFFFFu) throw InvalidArgument("latent stream too long");
    w.u32(static_cast<std::uint32_t>(s.size()));
    w.bytes(s);
  }
  return w.take();
}

RsicContainer unpack_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  RsicContainer c;
  const auto magic = r.bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) throw ParseError("magic", "not an RSIC file");
  c.version = r.u8("version");
  if (c.version != kContainerVersion) {
    throw ParseError("version", "unsupported version " + std::to_string(c.version));
  }
  const std::uint32_t h = r.u32("height");
  if (h == 0 || h > static_cast<std::uint32_t>(kMaxImageSide)) {
    throw ParseError("height", "value " + std::to_string(h) + " out of range");
  }
  const std::uint32_t w = r.u32("width");
  if (w == 0 || w > static_cast<std::uint32_t>(kMaxImageSide)) {
    throw ParseError("width", "value " + std::to_string(w) + " out of range");
  }
  c.dims = {static_cast<int>(h), static_cast<int>(w)};
  c.levels = r.u8("levels");
  if (c.levels < 1 || c.levels > kMaxLevels) {
    throw ParseError("levels", "value " + std::to_string(c.levels) + " out of range");
  }
  const auto hash = r.bytes(8, "model_hash");
  std::copy(hash.begin(), hash.end(), c.model_hash.begin());
  const std::uint16_t dlen = r.u16("description_length");
  const auto desc = r.bytes(dlen, "description");
  c.description.assign(desc.begin(), desc.end());
  const auto map = r.bytes(packed_size(c.dims, c.levels), "map");
  c.map_bytes.assign(map.begin(), map.end());
  try {
    // Padding bits must be zero so the packing stays bijective.
    if (pack(unpack(c.map_bytes, c.dims, c.levels)) != c.map_bytes) {
      throw ParseError("map", "nonzero padding bits");
    }
  } catch (const ParseError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ParseError("map", e.what());
  }
  static const char* kLenFields[] = {"stream0_length", "stream1_length", "stream2_length", "stream3_length"};
  static const char* kFields[] = {"stream0", "stream1", "stream2", "stream3"};
  for (int i = 0; i < kLatentScales; ++i) {
    const std::uint32_t n = r.u32(kLenFields[i]);
    const auto s = r.bytes(n, kFields[i]);
    c.streams[i].assign(s.begin(), s.end());
  }
  if (!r.done()) throw ParseError("trailer", std::to_string(r.remaining()) + " unexpected trailing bytes");
  return c;
}

void check_model_hash(const RsicContainer& c, const ModelHash& expected) {
  if (c.model_hash != expected) {
    throw ModelMismatch("container was produced by different model checkpoints");
  }
}

BppBreakdown total_bpp(const RsicContainer& c) {
  const double px = static_cast<double>(c.dims.height) * c.dims.width;
  if (!(px > 0.0)) throw InvalidArgument("total_bpp: empty image");
  BppBreakdown b;
  b.header_bytes = kContainerHeaderBytes;
  b.description_bytes = 2 + c.description.size();
  b.map_bytes = c.map_bytes.size();
  for (int i = 0; i < kLatentScales; ++i) b.scale_bytes[i] = 4 + c.streams[i].size();
  std::size_t total = kContainerHeaderBytes;
  b.header = 8.0 * kContainerHeaderBytes / px;
  b.description = 8.0 * (2 + c.description.size()) / px;
  total += 2 + c.description.size();
  b.map = 8.0 * c.map_bytes.size() / px;
  total += c.map_bytes.size();
  for (int i = 0; i < kLatentScales; ++i) {
    b.scales[i] = 8.0 * (4 + c.streams[i].size()) / px;
    total += 4 + c.streams[i].size();
  }
  b.total_bytes = total;
  b.total = 8.0 * total / px;
  return b;
}

}  // namespace rsic
