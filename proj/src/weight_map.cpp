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

#include "rsic/weight_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rsic {

namespace {

void check_unit(double m, const char* what) {
  if (!(m >= 0.0 && m <= 1.0)) {
    throw InvalidArgument(std::string(what) + ": weight " + std::to_string(m) + " outside [0, 1]");
  }
}

void check_levels(int levels) {
  if (levels < 1 || levels > kMaxLevels) {
    throw InvalidArgument("weight map levels must be in [1, 8], got " + std::to_string(levels));
  }
}

void check_dims(ImageDims dims) {
  if (dims.height <= 0 || dims.width <= 0) throw InvalidArgument("image dims must be positive");
}

}  // namespace

int map_rows(int height) { return (height + kMapBlock - 1) / kMapBlock; }
int map_cols(int width) { return (width + kMapBlock - 1) / kMapBlock; }

RegionSpec parse_region(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidArgument("region '" + text + "': expected x,y,w,h:weight");
  std::istringstream rect_in(text.substr(0, colon));
  RegionSpec spec;
  int* fields[] = {&spec.rect.x, &spec.rect.y, &spec.rect.w, &spec.rect.h};
  for (int i = 0; i < 4; ++i) {
    if (!(rect_in >> *fields[i])) throw InvalidArgument("region '" + text + "': bad rectangle");
    if (i < 3) {
      char comma = 0;
      if (!(rect_in >> comma) || comma != ',') throw InvalidArgument("region '" + text + "': bad rectangle");
    }
  }
  rect_in >> std::ws;
  if (!rect_in.eof()) throw InvalidArgument("region '" + text + "': trailing characters");
  try {
    std::size_t used = 0;
    const std::string w = text.substr(colon + 1);
    spec.weight = std::stod(w, &used);
    if (used != w.size()) throw InvalidArgument("region '" + text + "': bad weight");
  } catch (const std::logic_error&) {
    throw InvalidArgument("region '" + text + "': bad weight");
  }
  check_unit(spec.weight, "region");
  return spec;
}

WeightMap::WeightMap(ImageDims dims, int levels)
    : WeightMap(dims, levels,
                std::vector<std::uint8_t>(static_cast<std::size_t>(map_rows(dims.height)) *
                                              map_cols(dims.width),
                                          0)) {}

WeightMap::WeightMap(ImageDims dims, int levels, std::vector<std::uint8_t> grid)
    : dims_(dims), levels_(levels), grid_(std::move(grid)) {
  check_dims(dims);
  check_levels(levels);
  rows_ = map_rows(dims.height);
  cols_ = map_cols(dims.width);
  if (grid_.size() != static_cast<std::size_t>(rows_) * cols_) {
    throw InvalidArgument("weight map grid has " + std::to_string(grid_.size()) + " cells, expected " +
                          std::to_string(rows_ * cols_));
  }
  for (std::uint8_t v : grid_) {
    if (v >= levels_) throw InvalidArgument("weight map entry exceeds level count");
  }
}

WeightMap WeightMap::constant(ImageDims dims, int levels, int level) {
  check_levels(levels);
  if (level < 0 || level >= levels) throw InvalidArgument("constant map level out of range");
  return WeightMap(dims, levels,
                   std::vector<std::uint8_t>(static_cast<std::size_t>(map_rows(dims.height)) *
                                                 map_cols(dims.width),
                                             static_cast<std::uint8_t>(level)));
}

int WeightMap::level(int r, int c) const {
  if (r < 0 || r >= rows_ || c < 0 || c >= cols_) {
    throw InvalidArgument("weight map position (" + std::to_string(r) + ", " + std::to_string(c) +
                          ") out of bounds");
  }
  return grid_[static_cast<std::size_t>(r) * cols_ + c];
}

double WeightMap::value_at(int r, int c) const {
  const int lv = level(r, c);
  return levels_ == 1 ? 0.0 : static_cast<double>(lv) / (levels_ - 1);
}

double WeightMap::max_value() const {
  if (levels_ == 1 || grid_.empty()) return 0.0;
  return static_cast<double>(*std::max_element(grid_.begin(), grid_.end())) / (levels_ - 1);
}

int quantize_weight(double weight, int levels) {
  check_levels(levels);
  check_unit(weight, "quantize_weight");
  return static_cast<int>(std::lround(weight * (levels - 1)));
}

WeightMap build_from_regions(ImageDims dims, std::span<const RegionSpec> regions, int levels) {
  check_dims(dims);
  check_levels(levels);
  for (const RegionSpec& r : regions) {
    check_unit(r.weight, "region");
    if (r.rect.x < 0 || r.rect.y < 0 || r.rect.w <= 0 || r.rect.h <= 0 ||
        r.rect.x + r.rect.w > dims.width || r.rect.y + r.rect.h > dims.height) {
      throw InvalidArgument("region rectangle lies outside the image");
    }
  }
  const int rows = map_rows(dims.height);
  const int cols = map_cols(dims.width);
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(rows) * cols, 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int bx0 = c * kMapBlock;
      const int by0 = r * kMapBlock;
      const int bx1 = std::min(bx0 + kMapBlock, dims.width);
      const int by1 = std::min(by0 + kMapBlock, dims.height);
      const long area = static_cast<long>(bx1 - bx0) * (by1 - by0);
      double best = 0.0;
      for (const RegionSpec& reg : regions) {
        const int ox = std::max(0, std::min(bx1, reg.rect.x + reg.rect.w) - std::max(bx0, reg.rect.x));
        const int oy = std::max(0, std::min(by1, reg.rect.y + reg.rect.h) - std::max(by0, reg.rect.y));
        if (2L * ox * oy >= area) best = std::max(best, reg.weight);
      }
      grid[static_cast<std::size_t>(r) * cols + c] = static_cast<std::uint8_t>(quantize_weight(best, levels));
    }
  }
  return WeightMap(dims, levels, std::move(grid));
}

WeightMap build_from_mask(const Tensor& mask, int levels) {
  if (mask.channels() != 1) throw InvalidArgument("mask must have one channel");
  const ImageDims dims{mask.height(), mask.width()};
  check_dims(dims);
  check_levels(levels);
  const int rows = map_rows(dims.height);
  const int cols = map_cols(dims.width);
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(rows) * cols, 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      int n = 0;
      for (int y = r * kMapBlock; y < std::min((r + 1) * kMapBlock, dims.height); ++y) {
        for (int x = c * kMapBlock; x < std::min((c + 1) * kMapBlock, dims.width); ++x) {
          s += std::clamp(mask.at(0, y, x), 0.0, 1.0);
          ++n;
        }
      }
      grid[static_cast<std::size_t>(r) * cols + c] =
          static_cast<std::uint8_t>(quantize_weight(s / n, levels));
    }
  }
  return WeightMap(dims, levels, std::move(grid));
}

double lambda_of(double m) {
  check_unit(m, "lambda_of");
  return 0.01 * std::exp(7.0 * m);
}

double omega_of(double m) {
  check_unit(m, "omega_of");
  return 3.0 * (1.0 - 0.7 * m);
}

int scales_enabled(double m) {
  check_unit(m, "scales_enabled");
  if (m >= 7.0 / 8.0) return 4;
  if (m >= 3.0 / 4.0) return 3;
  if (m >= 1.0 / 2.0) return 2;
  return 1;
}

int bits_per_cell(int levels) {
  check_levels(levels);
  int bits = 0;
  while ((1 << bits) < levels) ++bits;
  return bits;
}

double bpp_of(const WeightMap& map) {
  const ImageDims d = map.image_dims();
  return static_cast<double>(map.rows()) * map.cols() * bits_per_cell(map.levels()) /
         (static_cast<double>(d.height) * d.width);
}

Tensor upsample_to(const WeightMap& map, int height, int width) {
  if (height <= 0 || width <= 0) throw InvalidArgument("upsample_to: zero-sized target");
  if (height % map.rows() != 0 || width % map.cols() != 0) {
    throw InvalidArgument("upsample_to: target " + std::to_string(height) + "x" + std::to_string(width) +
                          " is not a multiple of the grid");
  }
  const int fy = height / map.rows();
  const int fx = width / map.cols();
  Tensor out(1, height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.at(0, y, x) = map.value_at(y / fy, x / fx);
  }
  return out;
}

std::size_t packed_size(ImageDims dims, int levels) {
  const std::size_t bits = static_cast<std::size_t>(map_rows(dims.height)) * map_cols(dims.width) *
                           bits_per_cell(levels);
  return (bits + 7) / 8;
}

std::vector<std::uint8_t> pack(const WeightMap& map) {
  const int bits = bits_per_cell(map.levels());
  std::vector<std::uint8_t> out(packed_size(map.image_dims(), map.levels()), 0);
  std::size_t pos = 0;
  for (std::uint8_t v : map.grid()) {
    for (int b = bits - 1; b >= 0; --b, ++pos) {
      if ((v >> b) & 1) out[pos / 8] |= static_cast<std::uint8_t>(0x80 >> (pos % 8));
    }
  }
  return out;
}

WeightMap unpack(std::span<const std::uint8_t> bytes, ImageDims dims, int levels) {
  check_dims(dims);
  const int bits = bits_per_cell(levels);
  const std::size_t need = packed_size(dims, levels);
  if (bytes.size() < need) {
    throw InvalidArgument("packed weight map truncated: " + std::to_string(bytes.size()) + " of " +
                          std::to_string(need) + " bytes");
  }
  const std::size_t cells = static_cast<std::size_t>(map_rows(dims.height)) * map_cols(dims.width);
  std::vector<std::uint8_t> grid(cells, 0);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < cells; ++i) {
    int v = 0;
    for (int b = 0; b < bits; ++b, ++pos) v = (v << 1) | ((bytes[pos / 8] >> (7 - pos % 8)) & 1);
    grid[i] = static_cast<std::uint8_t>(v);
  }
  return WeightMap(dims, levels, std::move(grid));
}

}  // namespace rsic
