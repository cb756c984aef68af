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


// End-to-end encode and decode over a directory of trained checkpoints.

#ifndef RSIC_PIPELINE_HPP_
#define RSIC_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rsic/autoencoder.hpp"
#include "rsic/bitstream.hpp"
#include "rsic/diffusion.hpp"
#include "rsic/guided_decoder.hpp"
#include "rsic/hsvlc.hpp"

namespace rsic {

inline constexpr const char* kAutoencoderFile = "autoencoder.ckpt";
inline constexpr const char* kCodecFile = "codec.ckpt";
inline constexpr const char* kSingleScaleCodecFile = "codec_single.ckpt";
inline constexpr const char* kDiffusionFile = "diffusion.ckpt";

class MissingModel : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct ModelSet {
  Autoencoder autoencoder;
  Codec codec;
  std::optional<Codec> single_scale_codec;
  EpsilonModel diffusion;
  std::uint64_t autoencoder_digest = 0;
  std::uint64_t codec_digest = 0;
  std::uint64_t single_scale_digest = 0;
  std::uint64_t diffusion_digest = 0;

  // Reads the checkpoints of `dir`; the single-scale codec is optional.
  static ModelSet load(const std::filesystem::path& dir);

  // FNV-1a over the digests of the autoencoder, the codec variant and the
  // noise predictor checkpoints.
  ModelHash hash(bool single_scale = false) const;
  // Codec variant whose hash matches; throws ModelMismatch otherwise.
  const Codec& codec_for(const ModelHash& hash) const;
};

struct EncodeOptions {
  std::string caption;
  bool single_scale = false;
  // False writes no latent streams: the decoder samples from the caption alone.
  bool latent = true;
};

struct EncodeResult {
  RsicContainer container;
  std::vector<std::uint8_t> bytes;
  BppBreakdown bpp;
};

// image: (3, H, W) in [0, 1] with H, W matching the map dims.
EncodeResult encode_image(const ModelSet& models, const Tensor& image, const WeightMap& map,
                          const EncodeOptions& options);

struct DecodeResult {
  Tensor image;    // (3, H, W), cropped to the container dims
  Tensor z_hat0;   // codec reconstruction (empty without latent streams)
  Tensor z0;       // final latent
  WeightMap map;
  std::string description;
};

DecodeResult decode_container(const ModelSet& models, const RsicContainer& container, const GuidanceConfig& config);

// Latent of a padded image.
Tensor encode_latent(const Autoencoder& ae, const Tensor& image);

}  // namespace rsic

#endif  // RSIC_PIPELINE_HPP_
