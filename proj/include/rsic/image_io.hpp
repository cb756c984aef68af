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


// PNG reading and writing, plus the pad/crop helpers that bring arbitrary
// image sizes onto the 64-pixel grid used by the models.

#ifndef RSIC_IMAGE_IO_HPP_
#define RSIC_IMAGE_IO_HPP_

#include <filesystem>

#include "rsic/tensor.hpp"

namespace rsic {

// (3, H, W) in [0, 1]. Grey and alpha inputs are converted.
Tensor read_png_rgb(const std::filesystem::path& path);
// (1, H, W) in [0, 1].
Tensor read_png_gray(const std::filesystem::path& path);
// Writes 8-bit RGB for 3 channels or 8-bit grey for 1 channel. Values are
// clamped to [0, 1] and rounded.
void write_png(const std::filesystem::path& path, const Tensor& image);

// Replicates the last row and column until both sides are multiples of
// `multiple`.
Tensor pad_to_multiple(const Tensor& image, int multiple);
Tensor crop(const Tensor& image, int height, int width);

// Rounds every value to the nearest 8-bit level, as a PNG round trip would.
Tensor quantize_8bit(const Tensor& image);

}  // namespace rsic

#endif  // RSIC_IMAGE_IO_HPP_
