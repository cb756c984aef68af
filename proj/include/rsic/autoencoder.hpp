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


// Deterministic convolutional autoencoder: (3, H, W) images in [0, 1] to
// (4, H/8, W/8) latents and back. Latents are divided by a global scale
// measured on the training set so they have unit variance.

#ifndef RSIC_AUTOENCODER_HPP_
#define RSIC_AUTOENCODER_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rsic/checkpoint.hpp"
#include "rsic/nn.hpp"
#include "rsic/toy_data.hpp"

namespace rsic {

using LogFn = std::function<void(const std::string&)>;

inline constexpr int kLatentChannels = 4;
inline constexpr int kLatentFactor = 8;

class NotTrained : public Error {
 public:
  using Error::Error;
};

struct AutoencoderConfig {
  std::uint64_t seed = 1;
  int epochs = 8;
  double learning_rate = 2e-3;
  int batch_size = 8;
  int crop = 64;
  double holdout_fraction = 0.05;
};

struct AutoencoderReport {
  std::vector<double> epoch_loss;
  double heldout_mse = 0.0;
  double heldout_psnr = 0.0;
};

class Autoencoder {
 public:
  explicit Autoencoder(std::uint64_t seed);

  // Both require a trained model and H, W multiples of 8.
  Tensor encode(const Tensor& image) const;
  // Output clamped to [0, 1].
  Tensor decode(const Tensor& latent) const;

  // Differentiable paths used by training. encode_graph returns the
  // normalised latent, decode_graph is unclamped.
  nn::Var encode_graph(const nn::Var& image) const;
  nn::Var decode_graph(const nn::Var& latent) const;

  bool trained() const { return trained_; }
  double latent_scale() const { return latent_scale_; }
  const std::vector<double>& channel_std() const { return channel_std_; }
  nn::ParameterSet& parameters() { return params_; }

  Checkpoint to_checkpoint() const;
  static Autoencoder from_checkpoint(const Checkpoint& ck);

  nlohmann::json training_metadata = nlohmann::json::object();

 private:
  friend Autoencoder train_autoencoder(const std::vector<DatasetImage>&, const AutoencoderConfig&,
                                       AutoencoderReport*, const LogFn&);
  void check_image(const Tensor& image) const;

  nn::ParameterSet params_;
  std::vector<nn::Conv2d> enc_;
  std::vector<nn::Conv2d> dec_;
  double latent_scale_ = 1.0;
  std::vector<double> channel_std_ = std::vector<double>(kLatentChannels, 1.0);
  bool trained_ = false;
};

// Trains on random crops. The last `holdout_fraction` of images is held out
// for the reported reconstruction quality. Throws on empty data, zero epochs
// or a non-finite loss.
Autoencoder train_autoencoder(const std::vector<DatasetImage>& images, const AutoencoderConfig& config,
                              AutoencoderReport* report = nullptr, const LogFn& log = {});

}  // namespace rsic

#endif  // RSIC_AUTOENCODER_HPP_
