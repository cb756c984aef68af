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


#include "rsic/pipeline.hpp"

#include <algorithm>

#include "rsic/bytes.hpp"
#include "rsic/image_io.hpp"

namespace rsic {

namespace fs = std::filesystem;

namespace {

struct Loaded {
  Checkpoint checkpoint;
  std::uint64_t digest;
};

Loaded load_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw MissingModel("missing model checkpoint " + path.string());
  const auto bytes = read_file(path);
  return {parse_checkpoint(bytes), fnv1a64(bytes)};
}

}  // namespace

ModelSet ModelSet::load(const fs::path& dir) {
  const Loaded ae = load_checkpoint(dir / kAutoencoderFile);
  const Loaded codec = load_checkpoint(dir / kCodecFile);
  const Loaded diffusion = load_checkpoint(dir / kDiffusionFile);
  ModelSet set{Autoencoder::from_checkpoint(ae.checkpoint), Codec::from_checkpoint(codec.checkpoint), std::nullopt,
               EpsilonModel::from_checkpoint(diffusion.checkpoint)};
  set.autoencoder_digest = ae.digest;
  set.codec_digest = codec.digest;
  set.diffusion_digest = diffusion.digest;
  if (fs::exists(dir / kSingleScaleCodecFile)) {
    const Loaded single = load_checkpoint(dir / kSingleScaleCodecFile);
    set.single_scale_codec = Codec::from_checkpoint(single.checkpoint);
    set.single_scale_digest = single.digest;
  }
  return set;
}

ModelHash ModelSet::hash(bool single_scale) const {
  if (single_scale && !single_scale_codec) throw MissingModel(std::string("missing model checkpoint ") + kSingleScaleCodecFile);
  ByteWriter w;
  w.u64(autoencoder_digest);
  w.u64(single_scale ? single_scale_digest : codec_digest);
  w.u64(diffusion_digest);
  return model_hash_from_u64(fnv1a64(w.take()));
}

const Codec& ModelSet::codec_for(const ModelHash& h) const {
  if (h == hash(false)) return codec;
  if (single_scale_codec && h == hash(true)) return *single_scale_codec;
  throw ModelMismatch("container was produced by different models");
}

Tensor encode_latent(const Autoencoder& ae, const Tensor& image) {
  return ae.encode(pad_to_multiple(image, kMapBlock));
}

EncodeResult encode_image(const ModelSet& models, const Tensor& image, const WeightMap& map,
                          const EncodeOptions& options) {
  if (image.channels() != 3) throw InvalidArgument("encode: expected an RGB image");
  const ImageDims dims = map.image_dims();
  if (image.height() != dims.height || image.width() != dims.width) {
    throw InvalidArgument("encode: image is " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                          " but the weight map was built for " + std::to_string(dims.width) + "x" +
                          std::to_string(dims.height));
  }
  const Codec& codec = options.single_scale ? (models.hash(true), *models.single_scale_codec) : models.codec;
  EncodeResult r;
  RsicContainer& c = r.container;
  c.dims = dims;
  c.levels = map.levels();
  c.model_hash = models.hash(options.single_scale);
  c.description = compress_description(options.caption);
  c.map_bytes = pack(map);
  if (options.latent) {
    const Tensor z = encode_latent(models.autoencoder, image);
    c.streams = codec.compress(z, map).streams;
  }
  r.bytes = pack_container(c);
  r.bpp = total_bpp(c);
  return r;
}

DecodeResult decode_container(const ModelSet& models, const RsicContainer& c, const GuidanceConfig& config) {
  config.validate();
  const Codec& codec = models.codec_for(c.model_hash);
  DecodeResult r{.image = {}, .z_hat0 = {}, .z0 = {}, .map = unpack(c.map_bytes, c.dims, c.levels),
                 .description = decompress_description(c.description)};
  const EpsilonModel& eps_model = models.diffusion;
  const NoisePredictor eps = guided_predictor(eps_model, eps_model.embed(r.description), r.map);
  const bool has_latent = std::any_of(c.streams.begin(), c.streams.end(), [](const auto& s) { return !s.empty(); });
  if (has_latent) {
    r.z_hat0 = codec.decompress(LatentBitstream{c.streams}, r.map);
    r.z0 = guided_decode_latent(eps_model.schedule(), eps, config.gamma_base > 0.0 ? &codec : nullptr, r.z_hat0, r.map,
                                config)
               .result;
  } else {
    r.z0 = sample_latent(eps_model.schedule(), eps, latent_shape_for(r.map), config);
  }
  r.image = crop(models.autoencoder.decode(r.z0), c.dims.height, c.dims.width);
  return r;
}

}  // namespace rsic
