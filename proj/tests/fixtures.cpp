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


#include "fixtures.hpp"

#include <cmath>
#include <unistd.h>

#include "rsic/autoencoder.hpp"
#include "rsic/checkpoint.hpp"
#include "rsic/diffusion.hpp"
#include "rsic/pipeline.hpp"
#include "rsic/toy_data.hpp"

namespace rsic::fixture {

Tensor smooth_latent(Rng& rng, int h, int w) {
  Tensor z(kLatentChannels, h, w);
  for (int c = 0; c < kLatentChannels; ++c) {
    const double a = rng.normal(), b = rng.normal(), fa = rng.uniform(0.2, 0.8), fb = rng.uniform(0.2, 0.8);
    const double off = rng.normal() * 0.5;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) z.at(c, y, x) = off + a * std::sin(fa * x + c) + b * std::cos(fb * y - c);
  }
  return z;
}

std::vector<Tensor> latent_set(std::uint64_t seed, int n, int h, int w) {
  Rng rng(seed);
  std::vector<Tensor> out;
  for (int i = 0; i < n; ++i) out.push_back(smooth_latent(rng, h, w));
  return out;
}

WeightMap half_map(ImageDims dims) {
  const int rows = map_rows(dims.height);
  const int cols = map_cols(dims.width);
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(rows) * cols, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols / 2; ++c) grid[static_cast<std::size_t>(r) * cols + c] = 7;
  return WeightMap(dims, 8, grid);
}

CodecTrainConfig small_codec_config() {
  CodecTrainConfig c;
  c.codec.channels = 8;
  c.epochs = 1;
  c.batch_size = 4;
  c.holdout_fraction = 0.2;
  return c;
}

const Codec& small_codec() {
  static const Codec codec = train_codec(latent_set(1, 20, 16, 16), small_codec_config());
  return codec;
}

namespace {

std::filesystem::path build_workspace() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("rsic_tests_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const fs::path data = root / "data";
  const fs::path models = root / "models";
  fs::create_directories(models);
  write_toy_dataset(data, 6, 3, 128);
  const auto entries = read_dataset_index(data);
  const auto images = load_dataset_images(entries);

  AutoencoderConfig ac;
  ac.epochs = 1;
  ac.batch_size = 4;
  ac.holdout_fraction = 0.2;
  const Autoencoder ae = train_autoencoder(images, ac);
  write_file(models / kAutoencoderFile, serialize_checkpoint(ae.to_checkpoint()));

  std::vector<Tensor> latents;
  std::vector<std::string> captions;
  for (std::size_t i = 0; i < images.size(); ++i) {
    latents.push_back(ae.encode(images[i].tensor()));
    captions.push_back(entries[i].caption);
  }
  CodecTrainConfig cc = small_codec_config();
  write_file(models / kCodecFile, serialize_checkpoint(train_codec(latents, cc).to_checkpoint()));
  cc.codec.single_scale = true;
  write_file(models / kSingleScaleCodecFile, serialize_checkpoint(train_codec(latents, cc).to_checkpoint()));

  EpsilonTrainConfig ec;
  ec.epochs = 1;
  ec.batch_size = 4;
  ec.holdout_fraction = 0.2;
  ec.model.channels = 8;
  ec.model.embed_dim = 8;
  write_file(models / kDiffusionFile, serialize_checkpoint(train_epsilon(latents, captions, ec).to_checkpoint()));
  return root;
}

struct WorkspaceGuard {
  std::filesystem::path path = build_workspace();
  ~WorkspaceGuard() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace

const std::filesystem::path& tiny_workspace() {
  static const WorkspaceGuard guard;
  return guard.path;
}

}  // namespace rsic::fixture
