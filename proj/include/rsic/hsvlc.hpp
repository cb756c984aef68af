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


// Hierarchical spatially variable-rate latent codec.
//
// Analysis: four residual blocks, each halving resolution, turn a latent z0
// (4, h, w) into features f0..f3 at h/2, h/4, h/8, h/16 (sizes rounded up,
// never below 1). Every block is modulated by the weight map through spatial
// feature transforms (x * (1 + gamma(M)) + beta(M)).
//
// Coding runs coarse to fine. The entropy parameters (mean, scale) of f_i are
// predicted from the synthesis context decoded from f_{i+1}..f3 together with
// M; f3 is predicted from M alone. A cell of f_i is coded only when
// scales_enabled(m) >= 4 - i; otherwise it is set to its predicted mean and
// coded with a zero-cost deterministic symbol. f3 is always coded.
//
// The single-scale variant keeps f0 only, with a prior conditioned on M.

#ifndef RSIC_HSVLC_HPP_
#define RSIC_HSVLC_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "rsic/autoencoder.hpp"
#include "rsic/checkpoint.hpp"
#include "rsic/nn.hpp"
#include "rsic/weight_map.hpp"

namespace rsic {

inline constexpr int kCodecScales = 4;

using MultiScaleFeatures = std::array<Tensor, kCodecScales>;

struct LatentBitstream {
  std::array<std::vector<std::uint8_t>, kCodecScales> streams;
  std::array<double, kCodecScales> rates{};  // bits

  double total_bits() const { return rates[0] + rates[1] + rates[2] + rates[3]; }
};

struct CodecConfig {
  int channels = 64;
  bool single_scale = false;
};

struct CodecTrainConfig {
  std::uint64_t seed = 1;
  int epochs = 12;
  double learning_rate = 1e-3;
  int batch_size = 8;
  // Multiplies the lambda-weighted distortion term.
  double distortion_weight = 64.0;
  double holdout_fraction = 0.05;
  CodecConfig codec;
};

struct CodecReport {
  std::vector<double> epoch_loss;
  double heldout_loss_init = 0.0;
  double heldout_loss = 0.0;
};

struct RdTerms {
  double bits = 0.0;
  double distortion = 0.0;  // sum over latent cells of lambda(m) * MSE_cell
};

// Sum over latent cells of lambda(m) * (mean over channels of the squared error).
double lambda_weighted_distortion(const Tensor& z0, const Tensor& z_hat, const WeightMap& map);

// Latent shape expected for a map: 8 latent pixels per 64-pixel map cell.
Shape latent_shape_for(const WeightMap& map);

// Mean of the map cell values covering each pixel of an (h, w) grid, (1, h, w).
Tensor map_at(const WeightMap& map, int height, int width);

// Quantizer gain sqrt(lambda(m) / lambda(1)): residuals are coded as
// round(gain * (f - mu)), so the step shrinks as m rises.
double quantization_gain(double m);

// Per-scale 0/1 masks (1, h_i, w_i); 1 where scale i is coded.
std::array<Tensor, kCodecScales> gating_masks(const WeightMap& map, Shape latent, bool single_scale = false);

class Codec {
 public:
  Codec(CodecConfig config, std::uint64_t seed);

  const CodecConfig& config() const { return config_; }
  int scale_count() const { return config_.single_scale ? 1 : kCodecScales; }
  std::array<Shape, kCodecScales> feature_shapes(Shape latent) const;

  MultiScaleFeatures analyze(const Tensor& z0, const WeightMap& map) const;
  // Replaces gated cells by the entropy model's mean, computed with the
  // un-quantized coarser scales as context.
  MultiScaleFeatures gate(const MultiScaleFeatures& features, const WeightMap& map) const;

  LatentBitstream compress(const Tensor& z0, const WeightMap& map) const;
  Tensor decompress(const LatentBitstream& bits, const WeightMap& map) const;
  // Dequantized features of scales finest_scale..3. Streams of finer scales
  // are never read.
  MultiScaleFeatures decode_features(const LatentBitstream& bits, const WeightMap& map,
                                     int finest_scale = 0) const;

  // compress -> decompress with quantization replaced by the identity.
  nn::Var apply_differentiable(const nn::Var& z, const WeightMap& map) const;
  Tensor apply_differentiable(const Tensor& z, const WeightMap& map) const;

  // Rate (bits, uniform-noise surrogate) + distortion_weight * sum_cells
  // lambda(m) MSE_cell.
  nn::Var rd_loss_graph(const Tensor& z0, const WeightMap& map, Rng& noise, double distortion_weight,
                        RdTerms* terms = nullptr) const;
  double rd_loss(const Tensor& z0, const WeightMap& map, std::uint64_t noise_seed, double distortion_weight,
                 RdTerms* terms = nullptr) const;

  bool trained() const { return trained_; }
  nn::ParameterSet& parameters() { return params_; }

  Checkpoint to_checkpoint() const;
  static Codec from_checkpoint(const Checkpoint& ck);

  nlohmann::json training_metadata = nlohmann::json::object();

 private:
  friend Codec train_codec(const std::vector<Tensor>&, const CodecTrainConfig&, CodecReport*, const LogFn&);

  struct Sft {
    nn::Conv2d hidden, gamma, beta;
    nn::Var operator()(const nn::Var& x, const nn::Var& m) const;
  };
  struct Block {
    nn::Conv2d conv1, conv2, skip;
    Sft sft1, sft2;
  };
  struct Prior {
    nn::Conv2d conv1, conv2;
  };
  struct Synth {
    nn::Conv2d conv1, conv2, out;
    Sft sft1, sft2;
  };
  struct Maps {
    nn::Var latent;
    std::array<nn::Var, kCodecScales> scale;
    std::array<Tensor, kCodecScales> gate;
    std::array<Tensor, kCodecScales> gain;
  };
  enum class Quant { kNoise, kIdentity };
  struct Forward {
    nn::Var z_hat;
    nn::Var bits;
  };

  Sft make_sft(const std::string& name, Rng& rng);
  Maps make_maps(const WeightMap& map, Shape latent) const;
  void check_inputs(const Tensor& z0, const WeightMap& map) const;
  std::array<nn::Var, kCodecScales> analyze_graph(const nn::Var& z, const Maps& maps) const;
  // Entropy parameters for scale i; `context` is undefined for the coarsest.
  std::pair<nn::Var, nn::Var> prior(int i, const nn::Var& context, const Maps& maps) const;
  // Synthesis from scale i: next context, or the latent when i == 0.
  nn::Var synthesize(int i, const nn::Var& y_hat, const nn::Var& context, const Maps& maps) const;
  // Decodes scales 3..finest; returns the synthesis output of the last one.
  nn::Var decode_from(const LatentBitstream& bits, const Maps& maps, int finest, MultiScaleFeatures* features) const;
  Forward forward(const nn::Var& z, const WeightMap& map, Quant quant, Rng* noise) const;

  CodecConfig config_;
  nn::ParameterSet params_;
  std::vector<Block> analysis_;
  std::vector<Prior> priors_;
  std::vector<Synth> synthesis_;
  bool trained_ = false;
};

// Trains on latents from a frozen autoencoder. Each sample draws its map:
// 25% constant level 0, 25% constant top level, 50% a random rectangle at a
// random level over a random background level.
Codec train_codec(const std::vector<Tensor>& latents, const CodecTrainConfig& config, CodecReport* report = nullptr,
                  const LogFn& log = {});

// Map drawn by the training distribution above (8 levels).
WeightMap sample_training_map(Rng& rng, ImageDims dims);

}  // namespace rsic

#endif  // RSIC_HSVLC_HPP_
