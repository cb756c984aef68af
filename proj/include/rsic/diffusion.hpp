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


// Latent denoising diffusion: noise schedule, forward noising, a small
// conditional noise predictor and spatially varying classifier-free guidance.

#ifndef RSIC_DIFFUSION_HPP_
#define RSIC_DIFFUSION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "rsic/autoencoder.hpp"
#include "rsic/checkpoint.hpp"
#include "rsic/nn.hpp"
#include "rsic/weight_map.hpp"

namespace rsic {

enum class ScheduleKind { kLinear, kCosine };

ScheduleKind parse_schedule_kind(const std::string& name);
std::string schedule_kind_name(ScheduleKind kind);

struct NoiseSchedule {
  int T_train = 0;
  ScheduleKind kind = ScheduleKind::kCosine;
  std::vector<double> alpha_bar;  // T_train + 1 entries, alpha_bar[0] = 1

  // Bounds-checked access.
  double at(int t) const;
};

// Linear: beta from 1e-4 to 0.02. Cosine: offset 0.008, beta clipped at 0.999.
NoiseSchedule make_schedule(int T_train, ScheduleKind kind = ScheduleKind::kCosine);

// sqrt(alpha_bar[t]) z0 + sqrt(1 - alpha_bar[t]) noise.
Tensor q_sample(const NoiseSchedule& schedule, const Tensor& z0, int t, const Tensor& noise);

// Closed word vocabulary. Captions are lower-cased and split on whitespace;
// unknown words are dropped.
class CaptionVocabulary {
 public:
  CaptionVocabulary() = default;
  explicit CaptionVocabulary(std::vector<std::string> words);
  static CaptionVocabulary from_captions(const std::vector<std::string>& captions);

  std::vector<int> tokens(const std::string& caption) const;
  const std::vector<std::string>& words() const { return words_; }
  int size() const { return static_cast<int>(words_.size()); }

 private:
  std::vector<std::string> words_;  // sorted, unique
};

// (D, 1, 1) condition vector. The all-zero vector is the reserved NULL
// condition; captions without known words map to it.
struct ConditionEmbedding {
  Tensor vector;
  bool is_null() const;
};

struct EpsilonConfig {
  int channels = 32;
  int embed_dim = 32;
};

struct EpsilonTrainConfig {
  std::uint64_t seed = 1;
  int epochs = 40;
  double learning_rate = 2e-3;
  int batch_size = 16;
  double condition_dropout = 0.1;
  double holdout_fraction = 0.05;
  int T_train = 1000;
  ScheduleKind schedule = ScheduleKind::kLinear;
  EpsilonConfig model;
};

struct EpsilonReport {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_null_loss;  // samples trained with the NULL condition
  double heldout_mse_init = 0.0;
  double heldout_mse = 0.0;
};

class EpsilonModel {
 public:
  EpsilonModel(CaptionVocabulary vocabulary, NoiseSchedule schedule, EpsilonConfig config, std::uint64_t seed);

  const NoiseSchedule& schedule() const { return schedule_; }
  const CaptionVocabulary& vocabulary() const { return vocabulary_; }
  const EpsilonConfig& config() const { return config_; }
  bool trained() const { return trained_; }
  nn::ParameterSet& parameters() { return params_; }

  ConditionEmbedding embed(const std::string& caption) const;
  ConditionEmbedding null_condition() const;

  // z: (4, h, w) with even h, w; t in [0, T_train].
  Tensor predict_noise(const Tensor& z, int t, const ConditionEmbedding& c) const;
  // (1 - omega) eps(z, t) + omega eps(z, c, t) per latent position; omega_map is (1, h, w).
  Tensor cfg_noise(const Tensor& z, int t, const ConditionEmbedding& c, const Tensor& omega_map) const;

  nn::Var predict_graph(const nn::Var& z, int t, const nn::Var& condition) const;
  nn::Var embed_graph(const std::vector<int>& tokens) const;

  Checkpoint to_checkpoint() const;
  static EpsilonModel from_checkpoint(const Checkpoint& ck);

  nlohmann::json training_metadata = nlohmann::json::object();

 private:
  struct ResBlock {
    nn::Conv2d conv1, conv2, proj;
  };
  friend EpsilonModel train_epsilon(const std::vector<Tensor>&, const std::vector<std::string>&,
                                    const EpsilonTrainConfig&, EpsilonReport*, const LogFn&);

  ResBlock make_block(const std::string& name, int channels, Rng& rng);
  nn::Var block(const ResBlock& b, const nn::Var& x, const nn::Var& emb) const;
  void check_input(const Tensor& z, int t) const;

  CaptionVocabulary vocabulary_;
  NoiseSchedule schedule_;
  EpsilonConfig config_;
  nn::ParameterSet params_;
  nn::Var table_;
  nn::Conv2d time1_, time2_, cond_;
  nn::Conv2d in_, down_, merge_, out_;
  ResBlock rb1_, rb2_, rb3_, rb4_;
  bool trained_ = false;
};

// omega_of(M) at latent resolution, shape (1, h, w).
Tensor omega_latent_map(const WeightMap& map, int height, int width);

// Noise-prediction MSE with t uniform on [1, T_train]. Captions are replaced by
// NULL with probability condition_dropout.
EpsilonModel train_epsilon(const std::vector<Tensor>& latents, const std::vector<std::string>& captions,
                           const EpsilonTrainConfig& config, EpsilonReport* report = nullptr,
                           const LogFn& log = {});

}  // namespace rsic

#endif  // RSIC_DIFFUSION_HPP_
