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


#include "rsic/toy_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rsic/image_io.hpp"

namespace rsic {

namespace {

struct NamedColor {
  const char* name;
  std::array<double, 3> rgb;
};

constexpr NamedColor kObjectColors[] = {
    {"red", {0.86, 0.12, 0.10}},   {"orange", {0.96, 0.55, 0.10}}, {"yellow", {0.95, 0.88, 0.20}},
    {"green", {0.15, 0.70, 0.25}}, {"blue", {0.15, 0.30, 0.90}},   {"purple", {0.55, 0.20, 0.75}},
    {"white", {0.97, 0.97, 0.95}}, {"black", {0.06, 0.06, 0.08}},
};

constexpr NamedColor kBackgroundColors[] = {
    {"gray", {0.50, 0.50, 0.52}}, {"sand", {0.80, 0.72, 0.52}}, {"sky", {0.55, 0.75, 0.92}},
    {"grass", {0.42, 0.62, 0.35}}, {"night", {0.12, 0.14, 0.28}},
};

constexpr const char* kShapes[] = {"circle", "square", "triangle", "diamond"};

struct Distractor {
  int shape;
  double cx, cy, radius;
  std::array<double, 3> rgb;
};

// Signed distance (negative inside) to each shape of half-size r centred at 0.
double shape_distance(int shape, double x, double y, double r) {
  switch (shape) {
    case 0:
      return std::hypot(x, y) - r;
    case 1:
      return std::max(std::abs(x), std::abs(y)) - r;
    case 2: {
      // Upward triangle bounded by three half-planes.
      const double k = std::sqrt(3.0);
      const double base = y - r * 0.6;
      const double left = (-k * x - y) / 2.0 - r * 0.5;
      const double right = (k * x - y) / 2.0 - r * 0.5;
      return std::max({base, left, right});
    }
    default:
      return (std::abs(x) + std::abs(y)) / std::numbers::sqrt2 - r * 0.8;
  }
}

void check_size(int size) {
  if (size <= 0 || size % kMapBlock != 0) throw InvalidArgument("toy image size must be a multiple of 64");
}

}  // namespace

ToySample generate_toy_sample(Rng& rng, int size) {
  check_size(size);
  const auto& bg = kBackgroundColors[rng.below(std::size(kBackgroundColors))];
  const auto& fg = kObjectColors[rng.below(std::size(kObjectColors))];
  const int shape = static_cast<int>(rng.below(std::size(kShapes)));
  const int blocks = size / kMapBlock;
  const int br = static_cast<int>(rng.below(static_cast<std::uint64_t>(blocks)));
  const int bc = static_cast<int>(rng.below(static_cast<std::uint64_t>(blocks)));
  const double radius = rng.uniform(14.0, 22.0);
  const double cx = bc * kMapBlock + rng.uniform(radius + 4.0, kMapBlock - radius - 4.0);
  const double cy = br * kMapBlock + rng.uniform(radius + 4.0, kMapBlock - radius - 4.0);

  // Background: tinted gradient, a low-frequency wave and a mid-frequency texture.
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double shade = rng.uniform(0.15, 0.3) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  const double freq = rng.uniform(1.0, 3.0) * 2.0 * std::numbers::pi / size;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::array<double, 3> tint;
  for (double& t : tint) t = rng.uniform(-0.06, 0.06);
  const double tex_amp = rng.uniform(0.04, 0.08);
  const double tex_fx = 2.0 * std::numbers::pi / rng.uniform(12.0, 24.0);
  const double tex_fy = 2.0 * std::numbers::pi / rng.uniform(12.0, 24.0);

  // Clutter: small shapes kept clear of the object block.
  std::vector<Distractor> clutter;
  const double bx0 = bc * kMapBlock, by0 = br * kMapBlock;
  const int want = blocks > 1 ? static_cast<int>(rng.uniform_int(3, 3 + 2 * blocks)) : 0;
  for (int tries = 0; static_cast<int>(clutter.size()) < want && tries < 50 * want; ++tries) {
    Distractor d;
    d.shape = static_cast<int>(rng.below(std::size(kShapes)));
    d.radius = rng.uniform(4.0, 10.0);
    d.cx = rng.uniform(d.radius, size - d.radius);
    d.cy = rng.uniform(d.radius, size - d.radius);
    for (double& c : d.rgb) c = rng.uniform(0.1, 0.9);
    const double m = d.radius + 2.0;
    if (d.cx + m > bx0 && d.cx - m < bx0 + kMapBlock && d.cy + m > by0 && d.cy - m < by0 + kMapBlock) continue;
    clutter.push_back(d);
  }

  ToySample s;
  s.image = Tensor(3, size, size);
  s.mask = Tensor(1, size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = ((x - size / 2.0) * std::cos(angle) + (y - size / 2.0) * std::sin(angle)) / size;
      const double wave = 0.04 * std::sin(freq * (x + 0.7 * y) + phase) +
                          tex_amp * std::sin(tex_fx * x) * std::sin(tex_fy * y);
      const double d = shape_distance(shape, x + 0.5 - cx, y + 0.5 - cy, radius);
      const double cover = std::clamp(0.5 - d / 1.5, 0.0, 1.0);
      s.mask.at(0, y, x) = cover > 0.5 ? 1.0 : 0.0;
      std::array<double, 3> back;
      for (int c = 0; c < 3; ++c) back[c] = std::clamp(bg.rgb[c] + tint[c] + shade * u + wave, 0.0, 1.0);
      for (const Distractor& k : clutter) {
        const double dk = shape_distance(k.shape, x + 0.5 - k.cx, y + 0.5 - k.cy, k.radius);
        const double ck = std::clamp(0.5 - dk / 1.5, 0.0, 1.0);
        for (int c = 0; c < 3; ++c) back[c] = ck * k.rgb[c] + (1.0 - ck) * back[c];
      }
      for (int c = 0; c < 3; ++c) s.image.at(c, y, x) = cover * fg.rgb[c] + (1.0 - cover) * back[c];
    }
  }
  s.caption = std::string("a ") + fg.name + " " + kShapes[shape] + " on a " + bg.name + " background";
  s.block = {bc * kMapBlock, br * kMapBlock, kMapBlock, kMapBlock};
  return s;
}

void write_toy_dataset(const std::filesystem::path& dir, int count, std::uint64_t seed, int size) {
  if (count <= 0) throw InvalidArgument("toy dataset needs at least one image");
  check_size(size);
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  std::ofstream index(dir / "captions.tsv");
  if (!index) throw Error("cannot write " + (dir / "captions.tsv").string());
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const ToySample s = generate_toy_sample(rng, size);
    char name[16];
    std::snprintf(name, sizeof(name), "%05d", i);
    write_png(dir / "images" / (std::string(name) + ".png"), s.image);
    write_png(dir / "masks" / (std::string(name) + ".png"), s.mask);
    index << name << '\t' << s.caption << '\t' << s.block.x << ',' << s.block.y << ',' << s.block.w << ','
          << s.block.h << '\n';
  }
}

Tensor DatasetImage::tensor() const {
  Tensor t(3, height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c] / 255.0;
  return t;
}

DatasetImage DatasetImage::from_tensor(const Tensor& image) {
  if (image.channels() != 3) throw InvalidArgument("dataset images must have 3 channels");
  DatasetImage d;
  d.height = image.height();
  d.width = image.width();
  d.rgb.resize(static_cast<std::size_t>(d.height) * d.width * 3);
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x)
      for (int c = 0; c < 3; ++c)
        d.rgb[(static_cast<std::size_t>(y) * d.width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(std::clamp(image.at(c, y, x), 0.0, 1.0) * 255.0));
  return d;
}

std::vector<DatasetEntry> read_dataset_index(const std::filesystem::path& dir) {
  std::ifstream in(dir / "captions.tsv");
  if (!in) throw InvalidArgument("no captions.tsv in " + dir.string());
  std::vector<DatasetEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    DatasetEntry e;
    std::string rect;
    if (!std::getline(fields, e.name, '\t') || !std::getline(fields, e.caption, '\t') ||
        !std::getline(fields, rect)) {
      throw InvalidArgument("captions.tsv line " + std::to_string(lineno) + ": expected 3 tab-separated fields");
    }
    const RegionSpec r = parse_region(rect + ":1");
    e.block = r.rect;
    e.image_path = dir / "images" / (e.name + ".png");
    e.mask_path = dir / "masks" / (e.name + ".png");
    out.push_back(std::move(e));
  }
  if (out.empty()) throw InvalidArgument("dataset " + dir.string() + " is empty");
  return out;
}

std::vector<DatasetImage> load_dataset_images(const std::vector<DatasetEntry>& entries) {
  std::vector<DatasetImage> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(DatasetImage::from_tensor(read_png_rgb(e.image_path)));
  return out;
}

}  // namespace rsic
