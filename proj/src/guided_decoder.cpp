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


#include "rsic/guided_decoder.hpp"

#include <cmath>

namespace rsic {

void GuidanceConfig::validate() const {
  if (T < 1) throw InvalidArgument("diffusion steps T must be at least 1");
  if (T_r < 1) throw InvalidArgument("self-recurrence steps T_r must be at least 1");
  if (!(gamma_base >= 0.0) || !std::isfinite(gamma_base)) throw InvalidArgument("gamma must be finite and >= 0");
}

NoisePredictor guided_predictor(const EpsilonModel& model, const ConditionEmbedding& condition, const WeightMap& map) {
  const Shape latent = latent_shape_for(map);
  Tensor omega = omega_latent_map(map, latent.height, latent.width);
  return [&model, condition, omega = std::move(omega)](const Tensor& z, int t) {
    return model.cfg_noise(z, t, condition, omega);
  };
}

std::vector<int> sampling_grid(int T_train, int T) {
  if (T < 1 || T > T_train) {
    throw InvalidArgument("sampling steps T=" + std::to_string(T) + " must lie in [1, " + std::to_string(T_train) +
                          "]");
  }
  std::vector<int> grid(static_cast<std::size_t>(T) + 1);
  for (int k = 0; k <= T; ++k) {
    grid[static_cast<std::size_t>(k)] =
        static_cast<int>(std::lround(static_cast<double>(k) * T_train / T));
  }
  return grid;
}

Tensor ddim_move(const Tensor& z, const Tensor& eps, double a_from, double a_to) {
  require_same_shape(z, eps, "ddim_move");
  const double scale = std::sqrt(a_to / a_from);
  const double mix = std::sqrt(a_to) * (std::sqrt(1.0 / a_to - 1.0) - std::sqrt(1.0 / a_from - 1.0));
  Tensor out(z.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * z[i] + mix * eps[i];
  return out;
}

std::vector<Tensor> ddim_invert(const NoiseSchedule& schedule, const NoisePredictor& eps, const Tensor& z0,
                                const std::vector<int>& grid) {
  if (grid.size() < 2 || grid.front() != 0 || grid.back() > schedule.T_train) {
    throw InvalidArgument("ddim_invert: sampling grid does not match the schedule");
  }
  std::vector<Tensor> traj{z0};
  traj.reserve(grid.size());
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const Tensor e = eps(traj.back(), grid[k]);
    traj.push_back(ddim_move(traj.back(), e, schedule.at(grid[k]), schedule.at(grid[k + 1])));
  }
  return traj;
}

Tensor guidance_gradient(const Codec& codec, const Tensor& z, const Tensor& target, const WeightMap& map,
                         double* distance) {
  require_same_shape(z, target, "guidance_gradient");
  nn::Var zv = nn::variable(z);
  const nn::Var diff = nn::sub(codec.apply_differentiable(zv, map), nn::constant(target));
  const nn::Var sq = nn::sum(nn::mul(diff, diff));
  const double norm = std::sqrt(sq.value()[0]);
  if (distance) *distance = norm;
  if (norm < 1e-8) return Tensor(z.shape());
  nn::backward(sq);
  return zv.grad() * (0.5 / norm);
}

double guidance_scale(double gamma_base, double a_prev, double a_t) { return gamma_base * std::sqrt(a_prev / a_t); }

Tensor denoise_step(const NoiseSchedule& schedule, const NoisePredictor& eps, const Codec* codec, const Tensor& z,
                    int k, const std::vector<int>& grid, const WeightMap& map, const Tensor& target,
                    double gamma_base) {
  if (k < 1 || k >= static_cast<int>(grid.size())) throw InvalidArgument("denoise_step: step outside the grid");
  const double a_t = schedule.at(grid[static_cast<std::size_t>(k)]);
  const double a_prev = schedule.at(grid[static_cast<std::size_t>(k) - 1]);
  Tensor out = ddim_move(z, eps(z, grid[static_cast<std::size_t>(k)]), a_t, a_prev);
  if (gamma_base == 0.0) return out;
  if (!codec) throw InvalidArgument("denoise_step: guidance needs a codec");
  const double gamma = guidance_scale(gamma_base, a_prev, a_t) / static_cast<double>(z.size());
  const Tensor g = guidance_gradient(*codec, z, target, map);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= gamma * g[i];
  return out;
}

Tensor self_recur(const Tensor& z_prev, double a_t, double a_prev, Rng& rng) {
  const double ratio = a_t / a_prev;
  const double keep = std::sqrt(ratio);
  const double fresh = std::sqrt(std::max(0.0, 1.0 - ratio));
  Tensor out(z_prev.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = keep * z_prev[i] + fresh * rng.normal();
  return out;
}

GuidedTrace guided_decode_latent(const NoiseSchedule& schedule, const NoisePredictor& eps, const Codec* codec,
                                 const Tensor& z_hat0, const WeightMap& map, const GuidanceConfig& config) {
  config.validate();
  const auto grid = sampling_grid(schedule.T_train, config.T);
  GuidedTrace trace;
  trace.inversion = ddim_invert(schedule, eps, z_hat0, grid);
  Rng rng(config.seed);
  Tensor z = trace.inversion.back();
  for (int k = config.T; k >= 1; --k) {
    const double a_t = schedule.at(grid[static_cast<std::size_t>(k)]);
    const double a_prev = schedule.at(grid[static_cast<std::size_t>(k) - 1]);
    const Tensor& target = trace.inversion[static_cast<std::size_t>(k)];
    for (int r = 0; r < config.T_r; ++r) {
      Tensor next = denoise_step(schedule, eps, codec, z, k, grid, map, target, config.gamma_base);
      z = r + 1 < config.T_r ? self_recur(next, a_t, a_prev, rng) : std::move(next);
    }
  }
  trace.result = std::move(z);
  return trace;
}

Tensor sample_latent(const NoiseSchedule& schedule, const NoisePredictor& eps, Shape shape,
                     const GuidanceConfig& config) {
  config.validate();
  const auto grid = sampling_grid(schedule.T_train, config.T);
  Rng rng(config.seed);
  Tensor z = rng.normal_like(shape);
  for (int k = config.T; k >= 1; --k) {
    const double a_t = schedule.at(grid[static_cast<std::size_t>(k)]);
    const double a_prev = schedule.at(grid[static_cast<std::size_t>(k) - 1]);
    for (int r = 0; r < config.T_r; ++r) {
      Tensor next = ddim_move(z, eps(z, grid[static_cast<std::size_t>(k)]), a_t, a_prev);
      z = r + 1 < config.T_r ? self_recur(next, a_t, a_prev, rng) : std::move(next);
    }
  }
  return z;
}

}  // namespace rsic
