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


#include "rsic/diffusion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace rsic {

using nn::Var;

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "linear") return ScheduleKind::kLinear;
  if (name == "cosine") return ScheduleKind::kCosine;
  throw InvalidArgument("unknown noise schedule '" + name + "' (expected linear or cosine)");
}

std::string schedule_kind_name(ScheduleKind kind) { return kind == ScheduleKind::kLinear ? "linear" : "cosine"; }

double NoiseSchedule::at(int t) const {
  if (t < 0 || t > T_train) {
    throw InvalidArgument("timestep " + std::to_string(t) + " outside [0, " + std::to_string(T_train) + "]");
  }
  return alpha_bar[static_cast<std::size_t>(t)];
}

NoiseSchedule make_schedule(int T_train, ScheduleKind kind) {
  if (T_train < 2) throw InvalidArgument("make_schedule: T_train must be at least 2");
  NoiseSchedule s;
  s.T_train = T_train;
  s.kind = kind;
  s.alpha_bar.assign(static_cast<std::size_t>(T_train) + 1, 1.0);
  constexpr double kOffset = 0.008;
  auto f = [&](int t) {
    const double c = std::cos((static_cast<double>(t) / T_train + kOffset) / (1.0 + kOffset) * M_PI / 2.0);
    return c * c;
  };
  for (int t = 1; t <= T_train; ++t) {
    double beta;
    if (kind == ScheduleKind::kLinear) {
      beta = 1e-4 + (0.02 - 1e-4) * static_cast<double>(t - 1) / (T_train - 1);
    } else {
      beta = std::min(1.0 - f(t) / f(t - 1), 0.999);
    }
    s.alpha_bar[static_cast<std::size_t>(t)] = s.alpha_bar[static_cast<std::size_t>(t) - 1] * (1.0 - beta);
  }
  return s;
}

Tensor q_sample(const NoiseSchedule& schedule, const Tensor& z0, int t, const Tensor& noise) {
  require_same_shape(z0, noise, "q_sample");
  const double ab = schedule.at(t);
  if (t == 0) return z0;
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  Tensor out(z0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * z0[i] + b * noise[i];
  return out;
}

// ---- vocabulary ------------------------------------------------------------

namespace {

std::vector<std::string> split_words(const std::string& caption) {
  std::vector<std::string> out;
  std::istringstream in(caption);
  std::string word;
  while (in >> word) {
    std::string clean;
    for (char ch : word) {
      if (std::isalnum(static_cast<unsigned char>(ch))) clean += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    if (!clean.empty()) out.push_back(clean);
  }
  return out;
}

}  // namespace

CaptionVocabulary::CaptionVocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  std::sort(words_.begin(), words_.end());
  words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
}

CaptionVocabulary CaptionVocabulary::from_captions(const std::vector<std::string>& captions) {
  std::vector<std::string> all;
  for (const auto& c : captions) {
    for (auto& w : split_words(c)) all.push_back(std::move(w));
  }
  return CaptionVocabulary(std::move(all));
}

std::vector<int> CaptionVocabulary::tokens(const std::string& caption) const {
  std::vector<int> out;
  for (const auto& w : split_words(caption)) {
    const auto it = std::lower_bound(words_.begin(), words_.end(), w);
    if (it != words_.end() && *it == w) out.push_back(static_cast<int>(it - words_.begin()));
  }
  return out;
}

bool ConditionEmbedding::is_null() const {
  return std::all_of(vector.values().begin(), vector.values().end(), [](double v) { return v == 0.0; });
}

// ---- model -----------------------------------------------------------------

namespace {

Tensor timestep_features(int t, int dim) {
  Tensor v(dim, 1, 1);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    v[static_cast<std::size_t>(i)] = std::sin(t * freq);
    v[static_cast<std::size_t>(half + i)] = std::cos(t * freq);
  }
  return v;
}

}  // namespace

EpsilonModel::ResBlock EpsilonModel::make_block(const std::string& name, int channels, Rng& rng) {
  const int e = 2 * config_.channels;
  return {nn::Conv2d(params_, name + ".conv1", channels, channels, 3, 1, rng),
          nn::Conv2d(params_, name + ".conv2", channels, channels, 3, 1, rng, 0.1),
          nn::Conv2d(params_, name + ".proj", e, channels, 1, 1, rng)};
}

EpsilonModel::EpsilonModel(CaptionVocabulary vocabulary, NoiseSchedule schedule, EpsilonConfig config,
                           std::uint64_t seed)
    : vocabulary_(std::move(vocabulary)), schedule_(std::move(schedule)), config_(config) {
  if (config_.channels <= 0 || config_.embed_dim <= 0 || config_.embed_dim % 2 != 0) {
    throw InvalidArgument("EpsilonModel: channels must be positive and embed_dim positive and even");
  }
  if (schedule_.T_train < 2 || schedule_.alpha_bar.size() != static_cast<std::size_t>(schedule_.T_train) + 1) {
    throw InvalidArgument("EpsilonModel: invalid schedule");
  }
  Rng rng(seed);
  const int c = config_.channels;
  const int d = config_.embed_dim;
  const int e = 2 * c;
  Tensor table(std::max(vocabulary_.size(), 1), d, 1);
  for (double& v : table.values()) v = rng.normal();
  table_ = params_.add("cond.table", std::move(table));
  cond_ = nn::Conv2d(params_, "cond.proj", d, e, 1, 1, rng);
  time1_ = nn::Conv2d(params_, "time.fc1", d, e, 1, 1, rng);
  time2_ = nn::Conv2d(params_, "time.fc2", e, e, 1, 1, rng);
  in_ = nn::Conv2d(params_, "in", kLatentChannels, c, 3, 1, rng);
  rb1_ = make_block("rb1", c, rng);
  down_ = nn::Conv2d(params_, "down", c, 2 * c, 3, 2, rng);
  rb2_ = make_block("rb2", 2 * c, rng);
  rb3_ = make_block("rb3", 2 * c, rng);
  merge_ = nn::Conv2d(params_, "merge", 3 * c, c, 3, 1, rng);
  rb4_ = make_block("rb4", c, rng);
  out_ = nn::Conv2d(params_, "out", c, kLatentChannels, 3, 1, rng, 0.1);
}

Var EpsilonModel::block(const ResBlock& b, const Var& x, const Var& emb) const {
  Var h = b.conv1(nn::silu(x));
  h = nn::add_channel(h, b.proj(emb));
  h = b.conv2(nn::silu(h));
  return nn::add(x, h);
}

Var EpsilonModel::embed_graph(const std::vector<int>& tokens) const { return nn::embedding_mean(table_, tokens); }

ConditionEmbedding EpsilonModel::embed(const std::string& caption) const {
  nn::NoGradGuard guard;
  return {embed_graph(vocabulary_.tokens(caption)).value()};
}

ConditionEmbedding EpsilonModel::null_condition() const { return {Tensor(config_.embed_dim, 1, 1)}; }

Var EpsilonModel::predict_graph(const Var& z, int t, const Var& condition) const {
  if (condition.shape() != Shape{config_.embed_dim, 1, 1}) {
    throw InvalidArgument("condition embedding has shape " + condition.shape().str());
  }
  Var emb = time2_(nn::silu(time1_(nn::constant(timestep_features(t, config_.embed_dim)))));
  emb = nn::silu(nn::add(emb, cond_(condition)));
  const Var h0 = in_(z);
  const Var h1 = block(rb1_, h0, emb);
  Var h = down_(nn::silu(h1));
  h = block(rb2_, h, emb);
  h = block(rb3_, h, emb);
  h = nn::upsample_nearest(h, 2, h1.shape().height, h1.shape().width);
  h = merge_(nn::concat_channels(h, h1));
  h = block(rb4_, h, emb);
  return out_(nn::silu(h));
}

void EpsilonModel::check_input(const Tensor& z, int t) const {
  if (!trained_) throw NotTrained("noise predictor is not trained");
  if (z.channels() != kLatentChannels || z.height() < 2 || z.width() < 2) {
    throw InvalidArgument("predict_noise: expected a (4, h, w) latent, got " + z.shape().str());
  }
  schedule_.at(t);
}

Tensor EpsilonModel::predict_noise(const Tensor& z, int t, const ConditionEmbedding& c) const {
  check_input(z, t);
  nn::NoGradGuard guard;
  return predict_graph(nn::constant(z), t, nn::constant(c.vector)).value();
}

Tensor EpsilonModel::cfg_noise(const Tensor& z, int t, const ConditionEmbedding& c, const Tensor& omega_map) const {
  check_input(z, t);
  if (omega_map.shape() != Shape{1, z.height(), z.width()}) {
    throw InvalidArgument("cfg_noise: omega map " + omega_map.shape().str() + " does not match latent " +
                          z.shape().str());
  }
  const Tensor uncond = predict_noise(z, t, null_condition());
  if (c.is_null()) return uncond;
  const Tensor cond = predict_noise(z, t, c);
  Tensor out(z.shape());
  const std::size_t plane = static_cast<std::size_t>(z.height()) * z.width();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double w = omega_map[i % plane];
    out[i] = (1.0 - w) * uncond[i] + w * cond[i];
  }
  return out;
}

Checkpoint EpsilonModel::to_checkpoint() const {
  if (!trained_) throw NotTrained("refusing to save an untrained noise predictor");
  Checkpoint ck;
  ck.kind = "diffusion";
  ck.metadata = training_metadata;
  ck.metadata["vocabulary"] = vocabulary_.words();
  ck.metadata["T_train"] = schedule_.T_train;
  ck.metadata["schedule"] = schedule_kind_name(schedule_.kind);
  ck.metadata["channels"] = config_.channels;
  ck.metadata["embed_dim"] = config_.embed_dim;
  ck.tensors = snapshot_parameters(params_);
  return ck;
}

EpsilonModel EpsilonModel::from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "diffusion") throw InvalidArgument("expected a diffusion checkpoint, got " + ck.kind);
  const auto& m = ck.metadata;
  EpsilonModel model(CaptionVocabulary(m.at("vocabulary").get<std::vector<std::string>>()),
                     make_schedule(m.at("T_train").get<int>(), parse_schedule_kind(m.at("schedule").get<std::string>())),
                     {.channels = m.at("channels").get<int>(), .embed_dim = m.at("embed_dim").get<int>()}, 0);
  load_parameters(ck, model.params_);
  model.training_metadata = m;
  model.trained_ = true;
  return model;
}

Tensor omega_latent_map(const WeightMap& map, int height, int width) {
  Tensor out(1, height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int r = std::min(y * map.rows() / height, map.rows() - 1);
      const int c = std::min(x * map.cols() / width, map.cols() - 1);
      out.at(0, y, x) = omega_of(map.value_at(r, c));
    }
  }
  return out;
}

// ---- training --------------------------------------------------------------

namespace {

struct EvalDraw {
  std::size_t index;
  int t;
  Tensor noise;
};

}  // namespace

EpsilonModel train_epsilon(const std::vector<Tensor>& latents, const std::vector<std::string>& captions,
                           const EpsilonTrainConfig& config, EpsilonReport* report, const LogFn& log) {
  if (latents.empty()) throw InvalidArgument("train_epsilon: empty dataset");
  if (latents.size() != captions.size()) throw InvalidArgument("train_epsilon: latent and caption counts differ");
  if (config.epochs <= 0 || config.batch_size <= 0) throw InvalidArgument("train_epsilon: bad epochs or batch size");
  if (config.condition_dropout < 0.0 || config.condition_dropout > 1.0) {
    throw InvalidArgument("train_epsilon: condition_dropout must lie in [0, 1]");
  }
  for (const auto& z : latents) {
    if (z.channels() != kLatentChannels) throw InvalidArgument("train_epsilon: latents must have 4 channels");
  }
  const auto holdout = std::min(latents.size() - 1,
                                static_cast<std::size_t>(std::floor(latents.size() * config.holdout_fraction)));
  const std::size_t n_train = latents.size() - holdout;

  EpsilonModel model(CaptionVocabulary::from_captions(captions), make_schedule(config.T_train, config.schedule),
                     config.model, config.seed);
  model.trained_ = true;
  std::vector<std::vector<int>> tokens;
  for (const auto& c : captions) tokens.push_back(model.vocabulary_.tokens(c));

  // Fixed evaluation draws: held-out latents when available, else a training subset.
  std::vector<EvalDraw> draws;
  {
    Rng eval(config.seed ^ 0xe7a1);
    const std::size_t first = holdout > 0 ? n_train : 0;
    const std::size_t last = holdout > 0 ? latents.size() : std::min<std::size_t>(n_train, 32);
    for (int rep = 0; rep < 4; ++rep) {
      for (std::size_t i = first; i < last; ++i) {
        draws.push_back({i, eval.uniform_int(1, config.T_train), eval.normal_like(latents[i].shape())});
      }
    }
  }
  auto eval_mse = [&](bool null_condition) {
    nn::NoGradGuard guard;
    double total = 0.0;
    for (const auto& d : draws) {
      const Tensor zt = q_sample(model.schedule_, latents[d.index], d.t, d.noise);
      const ConditionEmbedding c = null_condition ? model.null_condition()
                                                  : ConditionEmbedding{model.embed_graph(tokens[d.index]).value()};
      total += mean_squared_error(model.predict_noise(zt, d.t, c), d.noise);
    }
    return total / static_cast<double>(draws.size());
  };

  EpsilonReport rep;
  rep.heldout_mse_init = eval_mse(false);
  nn::Adam opt(model.params_, {.learning_rate = config.learning_rate, .clip_norm = 1.0});
  Rng rng(config.seed ^ 0xd1ff);
  const int steps_per_epoch = static_cast<int>(std::max<std::size_t>(1, n_train / config.batch_size));
  const int total_steps = steps_per_epoch * config.epochs;
  const Var null_vector = nn::constant(model.null_condition().vector);
  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int s = 0; s < steps_per_epoch; ++s, ++step) {
      const double progress = static_cast<double>(step) / total_steps;
      opt.set_learning_rate(config.learning_rate * (0.05 + 0.95 * 0.5 * (1.0 + std::cos(M_PI * progress))));
      for (int b = 0; b < config.batch_size; ++b) {
        const std::size_t i = rng.below(n_train);
        const int t = rng.uniform_int(1, config.T_train);
        const Tensor noise = rng.normal_like(latents[i].shape());
        const bool drop = rng.uniform() < config.condition_dropout;
        const Var cond = drop ? null_vector : model.embed_graph(tokens[i]);
        const Var pred = model.predict_graph(nn::constant(q_sample(model.schedule_, latents[i], t, noise)), t, cond);
        const Var err = nn::sub(pred, nn::constant(noise));
        const Var loss = nn::mean(nn::mul(err, err));
        nn::backward(loss);
        epoch_loss += loss.value()[0];
      }
      opt.step(config.batch_size);
    }
    epoch_loss /= static_cast<double>(steps_per_epoch) * config.batch_size;
    if (!std::isfinite(epoch_loss) || !model.params_.all_finite()) {
      throw Error("noise predictor training diverged in epoch " + std::to_string(epoch + 1));
    }
    rep.epoch_loss.push_back(epoch_loss);
    rep.epoch_null_loss.push_back(eval_mse(true));
    if (log) {
      log("diffusion epoch " + std::to_string(epoch + 1) + "/" + std::to_string(config.epochs) + " mse " +
          std::to_string(epoch_loss) + " null-condition mse " + std::to_string(rep.epoch_null_loss.back()));
    }
  }
  rep.heldout_mse = eval_mse(false);
  model.training_metadata = {{"seed", config.seed},
                             {"epochs", config.epochs},
                             {"learning_rate", config.learning_rate},
                             {"batch_size", config.batch_size},
                             {"condition_dropout", config.condition_dropout},
                             {"train_latents", n_train},
                             {"loss_curve", rep.epoch_loss},
                             {"null_loss_curve", rep.epoch_null_loss},
                             {"heldout_mse_init", rep.heldout_mse_init},
                             {"heldout_mse", rep.heldout_mse}};
  if (report) *report = rep;
  return model;
}

}  // namespace rsic
