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


#include "rsic/autoencoder.hpp"

#include <algorithm>
#include <cmath>

#include "rsic/metrics.hpp"

namespace rsic {

using namespace nn;

Autoencoder::Autoencoder(std::uint64_t seed) {
  Rng rng(seed);
  enc_.emplace_back(params_, "enc0", 3, 32, 3, 2, rng);
  enc_.emplace_back(params_, "enc1", 32, 48, 3, 2, rng);
  enc_.emplace_back(params_, "enc2", 48, 64, 3, 2, rng);
  enc_.emplace_back(params_, "enc3", 64, 64, 3, 1, rng);
  enc_.emplace_back(params_, "enc4", 64, kLatentChannels, 3, 1, rng);
  dec_.emplace_back(params_, "dec0", kLatentChannels, 64, 3, 1, rng);
  dec_.emplace_back(params_, "dec1", 64, 64, 3, 1, rng);
  dec_.emplace_back(params_, "dec2", 64, 48, 3, 1, rng);
  dec_.emplace_back(params_, "dec3", 48, 32, 3, 1, rng);
  dec_.emplace_back(params_, "dec4", 32, 16, 3, 1, rng);
  dec_.emplace_back(params_, "dec5", 16, 3, 3, 1, rng, 0.5);
}

void Autoencoder::check_image(const Tensor& image) const {
  if (!trained_) throw NotTrained("autoencoder is not trained");
  if (image.channels() != 3 || image.height() % kLatentFactor != 0 || image.width() % kLatentFactor != 0 ||
      image.empty()) {
    throw InvalidArgument("autoencoder input must be (3, H, W) with H, W multiples of 8, got " +
                          image.shape().str());
  }
}

Var Autoencoder::encode_graph(const Var& image) const {
  Var h = add_scalar(image, -0.5);
  for (std::size_t i = 0; i + 1 < enc_.size(); ++i) h = leaky_relu(enc_[i](h));
  return scale(enc_.back()(h), 1.0 / latent_scale_);
}

Var Autoencoder::decode_graph(const Var& latent) const {
  Var h = leaky_relu(dec_[0](scale(latent, latent_scale_)));
  h = leaky_relu(dec_[1](h));
  for (int i = 2; i <= 4; ++i) {
    h = upsample_nearest(h, 2, h.shape().height * 2, h.shape().width * 2);
    h = leaky_relu(dec_[i](h));
  }
  return add_scalar(dec_[5](h), 0.5);
}

Tensor Autoencoder::encode(const Tensor& image) const {
  check_image(image);
  NoGradGuard guard;
  return encode_graph(constant(image)).value();
}

Tensor Autoencoder::decode(const Tensor& latent) const {
  if (!trained_) throw NotTrained("autoencoder is not trained");
  if (latent.channels() != kLatentChannels || latent.empty()) {
    throw InvalidArgument("latent must be (4, h, w), got " + latent.shape().str());
  }
  NoGradGuard guard;
  Tensor out = decode_graph(constant(latent)).value();
  for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Checkpoint Autoencoder::to_checkpoint() const {
  if (!trained_) throw NotTrained("refusing to save an untrained autoencoder");
  Checkpoint ck;
  ck.kind = "autoencoder";
  ck.metadata = training_metadata;
  ck.metadata["latent_scale"] = latent_scale_;
  ck.metadata["channel_std"] = channel_std_;
  ck.tensors = snapshot_parameters(params_);
  return ck;
}

Autoencoder Autoencoder::from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "autoencoder") throw InvalidArgument("expected an autoencoder checkpoint, got " + ck.kind);
  Autoencoder ae(0);
  load_parameters(ck, ae.params_);
  ae.training_metadata = ck.metadata;
  ae.latent_scale_ = ck.metadata.at("latent_scale").get<double>();
  ae.channel_std_ = ck.metadata.at("channel_std").get<std::vector<double>>();
  if (!(ae.latent_scale_ > 0.0) || ae.channel_std_.size() != kLatentChannels) {
    throw InvalidArgument("autoencoder checkpoint has invalid latent statistics");
  }
  ae.trained_ = true;
  return ae;
}

namespace {

Tensor random_crop(const DatasetImage& img, int crop, Rng& rng) {
  const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.height - crop + 1)));
  const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.width - crop + 1)));
  Tensor t(3, crop, crop);
  for (int y = 0; y < crop; ++y)
    for (int x = 0; x < crop; ++x)
      for (int c = 0; c < 3; ++c)
        t.at(c, y, x) = img.rgb[(static_cast<std::size_t>(y0 + y) * img.width + x0 + x) * 3 + c] / 255.0;
  return t;
}

}  // namespace

Autoencoder train_autoencoder(const std::vector<DatasetImage>& images, const AutoencoderConfig& config,
                              AutoencoderReport* report, const LogFn& log) {
  if (images.empty()) throw InvalidArgument("train_autoencoder: empty dataset");
  if (config.epochs <= 0) throw InvalidArgument("train_autoencoder: epochs must be positive");
  if (config.batch_size <= 0 || config.crop <= 0 || config.crop % kLatentFactor != 0) {
    throw InvalidArgument("train_autoencoder: bad batch size or crop");
  }
  const auto holdout = std::min(images.size() - 1,
                                static_cast<std::size_t>(std::floor(images.size() * config.holdout_fraction)));
  const std::size_t n_train = images.size() - holdout;
  for (const auto& img : images) {
    if (img.height < config.crop || img.width < config.crop) {
      throw InvalidArgument("train_autoencoder: image smaller than the crop");
    }
  }

  Autoencoder ae(config.seed);
  Rng rng(config.seed ^ 0x5eed);
  Adam opt(ae.params_, {.learning_rate = config.learning_rate, .clip_norm = 1.0});
  const int steps_per_epoch = static_cast<int>(std::max<std::size_t>(1, n_train / config.batch_size));
  const int total_steps = steps_per_epoch * config.epochs;
  AutoencoderReport rep;
  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int s = 0; s < steps_per_epoch; ++s, ++step) {
      // Cosine decay to 5% of the base rate.
      const double progress = static_cast<double>(step) / total_steps;
      opt.set_learning_rate(config.learning_rate * (0.05 + 0.95 * 0.5 * (1.0 + std::cos(M_PI * progress))));
      for (int b = 0; b < config.batch_size; ++b) {
        const Tensor x = random_crop(images[rng.below(n_train)], config.crop, rng);
        const Var xv = constant(x);
        const Var err = sub(ae.decode_graph(ae.encode_graph(xv)), xv);
        const Var loss = mean(mul(err, err));
        backward(loss);
        epoch_loss += loss.value()[0];
      }
      opt.step(config.batch_size);
    }
    epoch_loss /= static_cast<double>(steps_per_epoch) * config.batch_size;
    if (!std::isfinite(epoch_loss) || !ae.params_.all_finite()) {
      throw Error("autoencoder training diverged in epoch " + std::to_string(epoch + 1));
    }
    rep.epoch_loss.push_back(epoch_loss);
    if (log) log("autoencoder epoch " + std::to_string(epoch + 1) + "/" + std::to_string(config.epochs) +
                 " mse " + std::to_string(epoch_loss));
  }

  // Latent statistics over the training split, full resolution.
  {
    NoGradGuard guard;
    std::vector<double> s1(kLatentChannels, 0.0), s2(kLatentChannels, 0.0);
    double count = 0.0;
    for (std::size_t i = 0; i < n_train; ++i) {
      const Tensor z = ae.encode_graph(constant(images[i].tensor())).value();
      const double per = static_cast<double>(z.height()) * z.width();
      for (int c = 0; c < kLatentChannels; ++c) {
        for (int y = 0; y < z.height(); ++y) {
          for (int x = 0; x < z.width(); ++x) {
            s1[c] += z.at(c, y, x);
            s2[c] += z.at(c, y, x) * z.at(c, y, x);
          }
        }
      }
      count += per;
    }
    double total2 = 0.0;
    for (int c = 0; c < kLatentChannels; ++c) {
      const double m = s1[c] / count;
      ae.channel_std_[c] = std::sqrt(std::max(s2[c] / count - m * m, 0.0));
      total2 += s2[c];
    }
    const double rms = std::sqrt(total2 / (count * kLatentChannels));
    if (!(rms > 0.0) || !std::isfinite(rms)) throw Error("autoencoder produced a degenerate latent");
    ae.latent_scale_ = rms;
    for (double& s : ae.channel_std_) s /= rms;
  }
  ae.trained_ = true;

  double mse = 0.0;
  for (std::size_t i = n_train; i < images.size(); ++i) {
    const Tensor x = images[i].tensor();
    mse += mean_squared_error(ae.decode(ae.encode(x)), x);
  }
  if (holdout > 0) {
    rep.heldout_mse = mse / static_cast<double>(holdout);
    rep.heldout_psnr = 10.0 * std::log10(1.0 / rep.heldout_mse);
  }
  ae.training_metadata = {{"seed", config.seed},
                          {"epochs", config.epochs},
                          {"learning_rate", config.learning_rate},
                          {"batch_size", config.batch_size},
                          {"crop", config.crop},
                          {"train_images", n_train},
                          {"loss_curve", rep.epoch_loss},
                          {"heldout_mse", rep.heldout_mse},
                          {"heldout_psnr", rep.heldout_psnr}};
  if (report) *report = rep;
  return ae;
}

}  // namespace rsic
