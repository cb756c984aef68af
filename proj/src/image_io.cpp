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


#include "rsic/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace rsic {

namespace {

Tensor read_png(const std::filesystem::path& path, int channels) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw InvalidArgument("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw InvalidArgument("cannot decode PNG " + path.string() + ": " + msg);
  }
  const int h = static_cast<int>(img.height);
  const int w = static_cast<int>(img.width);
  Tensor out(channels, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        out.at(c, y, x) = buf[(static_cast<std::size_t>(y) * w + x) * channels + c] / 255.0;
      }
    }
  }
  return out;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Tensor read_png_rgb(const std::filesystem::path& path) { return read_png(path, 3); }

Tensor read_png_gray(const std::filesystem::path& path) { return read_png(path, 1); }

void write_png(const std::filesystem::path& path, const Tensor& image) {
  const int channels = image.channels();
  if (channels != 1 && channels != 3) throw InvalidArgument("write_png: need 1 or 3 channels");
  if (image.empty()) throw InvalidArgument("write_png: empty image");
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        buf[(static_cast<std::size_t>(y) * image.width() + x) * channels + c] = to_byte(image.at(c, y, x));
      }
    }
  }
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw Error("cannot write PNG " + path.string() + ": " + img.message);
  }
}

Tensor pad_to_multiple(const Tensor& image, int multiple) {
  if (multiple <= 0 || image.empty()) throw InvalidArgument("pad_to_multiple: bad arguments");
  const int h = (image.height() + multiple - 1) / multiple * multiple;
  const int w = (image.width() + multiple - 1) / multiple * multiple;
  Tensor out(image.channels(), h, w);
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      const int sy = std::min(y, image.height() - 1);
      for (int x = 0; x < w; ++x) out.at(c, y, x) = image.at(c, sy, std::min(x, image.width() - 1));
    }
  }
  return out;
}

Tensor crop(const Tensor& image, int height, int width) {
  if (height <= 0 || width <= 0 || height > image.height() || width > image.width()) {
    throw InvalidArgument("crop: target " + std::to_string(height) + "x" + std::to_string(width) +
                          " outside " + image.shape().str());
  }
  Tensor out(image.channels(), height, width);
  for (int c = 0; c < image.channels(); ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out.at(c, y, x) = image.at(c, y, x);
  return out;
}

Tensor quantize_8bit(const Tensor& image) {
  Tensor out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = to_byte(image[i]) / 255.0;
  return out;
}

}  // namespace rsic
