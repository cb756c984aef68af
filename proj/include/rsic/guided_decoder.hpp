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


// Guided generative decoding: DDIM inversion of the codec reconstruction,
// denoising steered by the codec-distance gradient, and per-step
// self-recurrence.

#ifndef RSIC_GUIDED_DECODER_HPP_
#define RSIC_GUIDED_DECODER_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "rsic/diffusion.hpp"
#include "rsic/hsvlc.hpp"

namespace rsic {

struct GuidanceConfig {
  int T = 50;
  int T_r = 8;
  double gamma_base = 1000.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Guided noise estimate at latent z and training timestep t.
using NoisePredictor = std::function<Tensor(const Tensor& z, int t)>;

// Classifier-free guided predictor with the spatial omega map of `map`.
NoisePredictor guided_predictor(const EpsilonModel& model, const ConditionEmbedding& condition, const WeightMap& map);

// Training timesteps t_k = round(k T_train / T) for k = 0..T; t_0 = 0.
std::vector<int> sampling_grid(int T_train, int T);

// Deterministic DDIM move of z from alpha_bar a_from to a_to with noise estimate eps.
Tensor ddim_move(const Tensor& z, const Tensor& eps, double a_from, double a_to);

// Trajectory [z_0 .. z_T] on the sampling grid.
std::vector<Tensor> ddim_invert(const NoiseSchedule& schedule, const NoisePredictor& eps, const Tensor& z0,
                                const std::vector<int>& grid);

// Gradient of ||apply_differentiable(z, map) - target||_2 with respect to z;
// zero when the distance is below 1e-8.
Tensor guidance_gradient(const Codec& codec, const Tensor& z, const Tensor& target, const WeightMap& map,
                         double* distance = nullptr);

// gamma_base * sqrt(a_prev / a_t).
double guidance_scale(double gamma_base, double a_prev, double a_t);

// One guided step from grid index k to k - 1. The guidance term is
// -gamma / N times the gradient, N the latent element count, so it moves z
// toward lower codec distance. `codec` may be null when gamma_base is 0.
Tensor denoise_step(const NoiseSchedule& schedule, const NoisePredictor& eps, const Codec* codec, const Tensor& z,
                    int k, const std::vector<int>& grid, const WeightMap& map, const Tensor& target,
                    double gamma_base);

// sqrt(a_t / a_prev) z + sqrt(1 - a_t / a_prev) eps', eps' ~ N(0, I).
Tensor self_recur(const Tensor& z_prev, double a_t, double a_prev, Rng& rng);

struct GuidedTrace {
  std::vector<Tensor> inversion;  // [z_0 .. z_T]
  Tensor result;                  // final z_0
};

// Inversion of z_hat0, then T outer steps of T_r denoise/self-recurrence
// iterations (the last iteration of each outer step does not re-noise).
GuidedTrace guided_decode_latent(const NoiseSchedule& schedule, const NoisePredictor& eps, const Codec* codec,
                                 const Tensor& z_hat0, const WeightMap& map, const GuidanceConfig& config);

// Unguided DDIM sampling from seeded Gaussian noise of the given latent shape.
Tensor sample_latent(const NoiseSchedule& schedule, const NoisePredictor& eps, Shape shape,
                     const GuidanceConfig& config);

}  // namespace rsic

#endif  // RSIC_GUIDED_DECODER_HPP_
