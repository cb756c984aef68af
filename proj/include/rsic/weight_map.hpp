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

#ifndef RSIC_WEIGHT_MAP_HPP_
#define RSIC_WEIGHT_MAP_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rsic/tensor.hpp"

namespace rsic {

// Side length in pixels of one weight-map cell.
inline constexpr int kMapBlock = 64;
inline constexpr int kMaxLevels = 8;

struct ImageDims {
  int height = 0;
  int width = 0;
  bool operator==(const ImageDims&) const = default;
};

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

struct RegionSpec {
  Rect rect;
  double weight = 0.0;
};

// Parses "x,y,w,h:weight".
RegionSpec parse_region(const std::string& text);

// Quantized importance grid, one cell per 64x64 image block.
class WeightMap {
 public:
  // All-zero map.
  WeightMap(ImageDims dims, int levels);
  // Takes ownership of row-major level indices; validates every invariant.
  WeightMap(ImageDims dims, int levels, std::vector<std::uint8_t> grid);

  static WeightMap constant(ImageDims dims, int levels, int level);

  ImageDims image_dims() const { return dims_; }
  int levels() const { return levels_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int level(int r, int c) const;
  std::span<const std::uint8_t> grid() const { return grid_; }

  // Cell value level / (levels - 1), or 0 for a single-level map.
  double value_at(int r, int c) const;
  double max_value() const;

  bool operator==(const WeightMap&) const = default;

 private:
  ImageDims dims_;
  int levels_ = 1;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> grid_;
};

int map_rows(int height);
int map_cols(int width);

// Blocks take the largest weight among regions that cover at least half of
// the block, then get rounded onto `levels` uniform steps.
WeightMap build_from_regions(ImageDims dims, std::span<const RegionSpec> regions, int levels);

// `mask` is a (1, H, W) array in [0, 1]; each block is averaged then quantized.
WeightMap build_from_mask(const Tensor& mask, int levels);

// Nearest level index for a real weight in [0, 1].
int quantize_weight(double weight, int levels);

// Rate-distortion multiplier 0.01 * e^(7m).
double lambda_of(double m);
// Spatial guidance scale 3 * (1 - 0.7 m).
double omega_of(double m);
// Number of coding scales kept for a cell (1..4). Breakpoints 1/2, 3/4, 7/8;
// a value on a breakpoint selects the finer tier.
int scales_enabled(double m);

int bits_per_cell(int levels);
// Raw map cost in bits per image pixel.
double bpp_of(const WeightMap& map);

// (1, h, w) replication of the cell values; (h, w) must be a multiple of the
// grid shape or at least cover it with an integer factor per axis.
Tensor upsample_to(const WeightMap& map, int height, int width);

// Fixed-width bit packing, row-major, MSB first, zero-padded to a byte.
std::vector<std::uint8_t> pack(const WeightMap& map);
WeightMap unpack(std::span<const std::uint8_t> bytes, ImageDims dims, int levels);
std::size_t packed_size(ImageDims dims, int levels);

}  // namespace rsic

#endif  // RSIC_WEIGHT_MAP_HPP_
