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


// Procedural toy corpus and the on-disk dataset layout used by every
// training and evaluation command.
//
// A dataset directory holds images/<name>.png, masks/<name>.png and a
// captions.tsv with one line per image:
//   name <TAB> caption <TAB> x,y,w,h
// where the rectangle is the 64-pixel block that contains the foreground
// object.

#ifndef RSIC_TOY_DATA_HPP_
#define RSIC_TOY_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rsic/rng.hpp"
#include "rsic/tensor.hpp"
#include "rsic/weight_map.hpp"

namespace rsic {

struct ToySample {
  Tensor image;  // (3, size, size)
  Tensor mask;   // (1, size, size), 1 on the object
  std::string caption;
  Rect block;
};

// One image: smooth two-colour background plus one soft-edged shape placed
// inside a random 64-pixel block. `size` must be a positive multiple of 64.
ToySample generate_toy_sample(Rng& rng, int size);

void write_toy_dataset(const std::filesystem::path& dir, int count, std::uint64_t seed, int size);

// 8-bit pixels kept compactly; converted to tensors on demand.
struct DatasetImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;  // interleaved

  Tensor tensor() const;
  static DatasetImage from_tensor(const Tensor& image);
};

struct DatasetEntry {
  std::string name;
  std::string caption;
  Rect block;
  std::filesystem::path image_path;
  std::filesystem::path mask_path;
};

std::vector<DatasetEntry> read_dataset_index(const std::filesystem::path& dir);
std::vector<DatasetImage> load_dataset_images(const std::vector<DatasetEntry>& entries);

}  // namespace rsic

#endif  // RSIC_TOY_DATA_HPP_
