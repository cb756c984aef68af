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


#include "rsic/hsvlc.hpp"

#include <algorithm>
#include <cmath>

#include "rsic/entropy_coder.hpp"

namespace rsic {

using namespace nn;

namespace {

constexpr double kMinScale = 0.11;
constexpr int kSftHidden = 16;

int half_up(int n) { return std::max(1, (n + 1) / 2); }

// (1, h, w) tensor of lambda(m) per latent cell.
Tensor lambda_map(const WeightMap& map, Shape latent) {
  Tensor m = map_at(map, latent.height, latent.width);
  for (double& v : m.values()) v = lambda_of(std::clamp(v, 0.0, 1.0));
  return m;
}

const SymbolDistribution& gated_distribution() {
  static const SymbolDistribution d = SymbolDistribution::deterministic(0);
  return d;
}

}  // namespace

double lambda_weighted_distortion(const Tensor& z0, const Tensor& z_hat, const WeightMap& map) {
  require_same_shape(z0, z_hat, "lambda_weighted_distortion");
  const Tensor lambda = lambda_map(map, z0.shape());
  double total = 0.0;
  for (int c = 0; c < z0.channels(); ++c) {
    for (int y = 0; y < z0.height(); ++y) {
      for (int x = 0; x < z0.width(); ++x) {
        const double d = z_hat.at(c, y, x) - z0.at(c, y, x);
        total += lambda.at(0, y, x) * d * d;
      }
    }
  }
  return total / z0.channels();
}

Shape latent_shape_for(const WeightMap& map) {
  return {kLatentChannels, map.rows() * (kMapBlock / kLatentFactor), map.cols() * (kMapBlock / kLatentFactor)};
}

Tensor map_at(const WeightMap& map, int height, int width) {
  if (height <= 0 || width <= 0) throw InvalidArgument("map_at: empty target");
  const int rows = map.rows();
  const int cols = map.cols();
  Tensor out(1, height, width);
  for (int y = 0; y < height; ++y) {
    const double r0 = static_cast<double>(y) * rows / height;
    const double r1 = static_cast<double>(y + 1) * rows / height;
    for (int x = 0; x < width; ++x) {
      const double c0 = static_cast<double>(x) * cols / width;
      const double c1 = static_cast<double>(x + 1) * cols / width;
      double acc = 0.0;
      double area = 0.0;
      for (int r = static_cast<int>(std::floor(r0)); r < std::min(rows, static_cast<int>(std::ceil(r1))); ++r) {
        const double hr = std::min<double>(r + 1, r1) - std::max<double>(r, r0);
        for (int c = static_cast<int>(std::floor(c0)); c < std::min(cols, static_cast<int>(std::ceil(c1))); ++c) {
          const double wc = std::min<double>(c + 1, c1) - std::max<double>(c, c0);
          acc += hr * wc * map.value_at(r, c);
          area += hr * wc;
        }
      }
      out.at(0, y, x) = acc / area;
    }
  }
  return out;
}

double quantization_gain(double m) { return std::sqrt(lambda_of(m) / lambda_of(1.0)); }

std::array<Tensor, kCodecScales> gating_masks(const WeightMap& map, Shape latent, bool single_scale) {
  std::array<Tensor, kCodecScales> masks;
  int h = latent.height;
  int w = latent.width;
  for (int i = 0; i < kCodecScales; ++i) {
    h = half_up(h);
    w = half_up(w);
    masks[i] = Tensor(1, h, w, 1.0);
    if (single_scale || i == kCodecScales - 1) continue;
    if (h % map.rows() != 0 || w % map.cols() != 0) {
      throw InvalidArgument("gating: scale " + std::to_string(i) + " grid does not align with the weight map");
    }
    const int fy = h / map.rows();
    const int fx = w / map.cols();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int tiers = scales_enabled(map.value_at(y / fy, x / fx));
        masks[i].at(0, y, x) = tiers >= kCodecScales - i ? 1.0 : 0.0;
      }
    }
  }
  return masks;
}

// ---- layers ----------------------------------------------------------------

Var Codec::Sft::operator()(const Var& x, const Var& m) const {
  const Var h = silu(hidden(m));
  return add(mul(x, add_scalar(gamma(h), 1.0)), beta(h));
}

Codec::Sft Codec::make_sft(const std::string& name, Rng& rng) {
  const int c = config_.channels;
  return {Conv2d(params_, name + ".hidden", 1, kSftHidden, 1, 1, rng),
          Conv2d(params_, name + ".gamma", kSftHidden, c, 1, 1, rng, 0.1),
          Conv2d(params_, name + ".beta", kSftHidden, c, 1, 1, rng, 0.1)};
}

Codec::Codec(CodecConfig config, std::uint64_t seed) : config_(config) {
  if (config_.channels <= 0) throw InvalidArgument("codec channels must be positive");
  const int c = config_.channels;
  Rng rng(seed);
  const int scales = scale_count();
  for (int i = 0; i < scales; ++i) {
    const std::string n = "analysis" + std::to_string(i);
    const int cin = i == 0 ? kLatentChannels : c;
    Block b;
    b.conv1 = Conv2d(params_, n + ".conv1", cin, c, 3, 2, rng);
    b.sft1 = make_sft(n + ".sft1", rng);
    b.conv2 = Conv2d(params_, n + ".conv2", c, c, 3, 1, rng);
    b.sft2 = make_sft(n + ".sft2", rng);
    b.skip = Conv2d(params_, n + ".skip", cin, c, 1, 2, rng);
    analysis_.push_back(std::move(b));
  }
  for (int i = 0; i < scales; ++i) {
    const std::string n = "prior" + std::to_string(i);
    const bool coarsest = i == scales - 1;
    Prior p;
    p.conv1 = Conv2d(params_, n + ".conv1", coarsest ? 1 : c + 1, c, coarsest ? 1 : 3, 1, rng);
    p.conv2 = Conv2d(params_, n + ".conv2", c, 2 * c, coarsest ? 1 : 3, 1, rng, 0.1);
    priors_.push_back(std::move(p));
  }
  for (int i = 0; i < scales; ++i) {
    const std::string n = "synthesis" + std::to_string(i);
    const bool coarsest = i == scales - 1;
    Synth s;
    s.conv1 = Conv2d(params_, n + ".conv1", coarsest ? c : 2 * c, c, 3, 1, rng);
    s.sft1 = make_sft(n + ".sft1", rng);
    s.conv2 = Conv2d(params_, n + ".conv2", c, c, 3, 1, rng);
    s.sft2 = make_sft(n + ".sft2", rng);
    if (i == 0) s.out = Conv2d(params_, n + ".out", c, kLatentChannels, 3, 1, rng);
    synthesis_.push_back(std::move(s));
  }
}

std::array<Shape, kCodecScales> Codec::feature_shapes(Shape latent) const {
  std::array<Shape, kCodecScales> out;
  int h = latent.height;
  int w = latent.width;
  for (int i = 0; i < kCodecScales; ++i) {
    h = half_up(h);
    w = half_up(w);
    out[i] = i < scale_count() ? Shape{config_.channels, h, w} : Shape{0, 0, 0};
  }
  return out;
}

Codec::Maps Codec::make_maps(const WeightMap& map, Shape latent) const {
  Maps m;
  m.latent = constant(map_at(map, latent.height, latent.width));
  const auto shapes = feature_shapes(latent);
  m.gate = gating_masks(map, latent, config_.single_scale);
  for (int i = 0; i < scale_count(); ++i) {
    Tensor values = map_at(map, shapes[i].height, shapes[i].width);
    m.gain[i] = Tensor(values.shape());
    for (std::size_t k = 0; k < values.size(); ++k) m.gain[i][k] = quantization_gain(values[k]);
    m.scale[i] = constant(std::move(values));
  }
  return m;
}

void Codec::check_inputs(const Tensor& z0, const WeightMap& map) const {
  if (z0.shape() != latent_shape_for(map)) {
    throw InvalidArgument("latent " + z0.shape().str() + " does not match the weight map (expected " +
                          latent_shape_for(map).str() + ")");
  }
  if (!z0.all_finite()) throw InvalidArgument("latent contains non-finite values");
}

std::array<Var, kCodecScales> Codec::analyze_graph(const Var& z, const Maps& maps) const {
  std::array<Var, kCodecScales> f;
  Var x = z;
  for (int i = 0; i < scale_count(); ++i) {
    const Block& b = analysis_[i];
    Var h = silu(b.sft1(b.conv1(x), maps.scale[i]));
    h = b.sft2(b.conv2(h), maps.scale[i]);
    x = add(h, b.skip(x));
    f[i] = x;
  }
  return f;
}

std::pair<Var, Var> Codec::prior(int i, const Var& context, const Maps& maps) const {
  const Prior& p = priors_[i];
  const Var in = context.defined() ? concat_channels(context, maps.scale[i]) : maps.scale[i];
  const Var out = p.conv2(silu(p.conv1(in)));
  const int c = config_.channels;
  return {slice_channels(out, 0, c), add_scalar(softplus(slice_channels(out, c, c)), kMinScale)};
}

Var Codec::synthesize(int i, const Var& y_hat, const Var& context, const Maps& maps) const {
  const Synth& s = synthesis_[i];
  const Var in = context.defined() ? concat_channels(y_hat, context) : y_hat;
  Var h = silu(s.sft1(s.conv1(in), maps.scale[i]));
  const Var& next_map = i == 0 ? maps.latent : maps.scale[i - 1];
  const Shape target = next_map.shape();
  h = upsample_nearest(h, 2, target.height, target.width);
  h = s.sft2(s.conv2(h), next_map);
  if (i > 0) return h;
  return s.out(silu(h));
}

Codec::Forward Codec::forward(const Var& z, const WeightMap& map, Quant quant, Rng* noise) const {
  const Shape latent = z.shape();
  const Maps maps = make_maps(map, latent);
  const auto f = analyze_graph(z, maps);
  Var context;
  Var bits;
  for (int i = scale_count() - 1; i >= 0; --i) {
    const auto [mu, sigma] = prior(i, context, maps);
    const Var gate = constant(maps.gate[i]);
    Var residual = sub(f[i], mu);
    if (quant == Quant::kNoise) {
      const Var gain = constant(maps.gain[i]);
      const Var scaled = add(mul_spatial(residual, gain), constant(noise->uniform_like(residual.shape(), -0.5, 0.5)));
      const Var b = sum(mul_spatial(gaussian_bits(scaled, mul_spatial(sigma, gain)), gate));
      bits = bits.defined() ? add(bits, b) : b;
      Tensor inverse = maps.gain[i];
      for (std::size_t k = 0; k < inverse.size(); ++k) inverse[k] = 1.0 / inverse[k];
      residual = mul_spatial(scaled, constant(std::move(inverse)));
    }
    const Var y_hat = add(mu, mul_spatial(residual, gate));
    const bool last = i == 0;
    const Var next = synthesize(i, y_hat, config_.single_scale ? Var() : context, maps);
    if (last) return {next, bits};
    context = next;
  }
  throw Error("codec forward: unreachable");
}

MultiScaleFeatures Codec::analyze(const Tensor& z0, const WeightMap& map) const {
  check_inputs(z0, map);
  NoGradGuard guard;
  const auto f = analyze_graph(constant(z0), make_maps(map, z0.shape()));
  MultiScaleFeatures out;
  for (int i = 0; i < scale_count(); ++i) out[i] = f[i].value();
  return out;
}

MultiScaleFeatures Codec::gate(const MultiScaleFeatures& features, const WeightMap& map) const {
  NoGradGuard guard;
  const Shape latent = latent_shape_for(map);
  const Maps maps = make_maps(map, latent);
  const auto shapes = feature_shapes(latent);
  MultiScaleFeatures out;
  Var context;
  for (int i = scale_count() - 1; i >= 0; --i) {
    if (features[i].shape() != shapes[i]) throw InvalidArgument("gate: feature shape mismatch at scale " + std::to_string(i));
    const auto [mu, sigma] = prior(i, context, maps);
    // Enabled cells keep their feature exactly, gated cells take the prior mean.
    Tensor selected = mu.value();
    const std::size_t plane = static_cast<std::size_t>(selected.height()) * selected.width();
    for (std::size_t k = 0; k < selected.size(); ++k) {
      if (maps.gate[i][k % plane] != 0.0) selected[k] = features[i][k];
    }
    out[i] = selected;
    const Var y_hat = constant(std::move(selected));
    if (i > 0) context = synthesize(i, y_hat, config_.single_scale ? Var() : context, maps);
  }
  return out;
}

LatentBitstream Codec::compress(const Tensor& z0, const WeightMap& map) const {
  if (!trained_) throw NotTrained("codec is not trained");
  check_inputs(z0, map);
  NoGradGuard guard;
  const Shape latent = z0.shape();
  const Maps maps = make_maps(map, latent);
  const auto f = analyze_graph(constant(z0), maps);
  const auto& bank = GaussianBank::instance();
  LatentBitstream out;
  Var context;
  for (int i = scale_count() - 1; i >= 0; --i) {
    const auto [mu, sigma] = prior(i, context, maps);
    const Tensor& y = f[i].value();
    if (!y.all_finite()) throw Error("codec analysis produced non-finite features");
    const Tensor& m = mu.value();
    const Tensor& s = sigma.value();
    const Tensor& g = maps.gate[i];
    const Tensor& q = maps.gain[i];
    std::vector<int> symbols(y.size());
    std::vector<const SymbolDistribution*> dists(y.size());
    Tensor y_hat(y.shape());
    const std::size_t plane = static_cast<std::size_t>(y.height()) * y.width();
    for (std::size_t k = 0; k < y.size(); ++k) {
      if (g[k % plane] == 0.0) {
        dists[k] = &gated_distribution();
        symbols[k] = 0;
      } else {
        const double gain = q[k % plane];
        dists[k] = &bank.distribution(bank.index_for(s[k] * gain));
        const double r = std::nearbyint((y[k] - m[k]) * gain);
        symbols[k] = static_cast<int>(std::clamp(r, static_cast<double>(dists[k]->min_symbol()),
                                                 static_cast<double>(dists[k]->max_symbol())));
      }
      y_hat[k] = m[k] + symbols[k] / q[k % plane];
    }
    // A fully gated scale carries no symbols, so its stream is empty.
    if (g.sum() > 0.0) out.streams[i] = encode_symbols(symbols, dists);
    out.rates[i] = 8.0 * static_cast<double>(out.streams[i].size());
    if (i > 0) context = synthesize(i, constant(y_hat), config_.single_scale ? Var() : context, maps);
  }
  return out;
}

Var Codec::decode_from(const LatentBitstream& bits, const Maps& maps, int finest,
                       MultiScaleFeatures* features) const {
  const auto& bank = GaussianBank::instance();
  Var context;
  for (int i = scale_count() - 1; i >= finest; --i) {
    const auto [mu, sigma] = prior(i, context, maps);
    const Tensor& m = mu.value();
    const Tensor& s = sigma.value();
    const Tensor& g = maps.gate[i];
    const Tensor& q = maps.gain[i];
    std::vector<const SymbolDistribution*> dists(m.size());
    const std::size_t plane = static_cast<std::size_t>(m.height()) * m.width();
    for (std::size_t k = 0; k < m.size(); ++k) {
      dists[k] = g[k % plane] == 0.0 ? &gated_distribution() : &bank.distribution(bank.index_for(s[k] * q[k % plane]));
    }
    std::vector<int> symbols(m.size(), 0);
    if (g.sum() > 0.0) {
      symbols = decode_symbols(bits.streams[i], dists, m.size());
    } else if (!bits.streams[i].empty()) {
      throw CorruptStream("latent stream " + std::to_string(i) + " should be empty for a fully gated scale");
    }
    Tensor y_hat(m.shape());
    for (std::size_t k = 0; k < m.size(); ++k) y_hat[k] = m[k] + symbols[k] / q[k % plane];
    if (features) (*features)[i] = y_hat;
    context = synthesize(i, constant(y_hat), config_.single_scale ? Var() : context, maps);
  }
  return context;
}

Tensor Codec::decompress(const LatentBitstream& bits, const WeightMap& map) const {
  if (!trained_) throw NotTrained("codec is not trained");
  NoGradGuard guard;
  const Maps maps = make_maps(map, latent_shape_for(map));
  return decode_from(bits, maps, 0, nullptr).value();
}

MultiScaleFeatures Codec::decode_features(const LatentBitstream& bits, const WeightMap& map, int finest_scale) const {
  if (!trained_) throw NotTrained("codec is not trained");
  if (finest_scale < 0 || finest_scale >= scale_count()) throw InvalidArgument("decode_features: bad scale");
  NoGradGuard guard;
  const Maps maps = make_maps(map, latent_shape_for(map));
  MultiScaleFeatures out;
  decode_from(bits, maps, finest_scale, &out);
  return out;
}

Var Codec::apply_differentiable(const Var& z, const WeightMap& map) const {
  if (!trained_) throw NotTrained("codec is not trained");
  check_inputs(z.value(), map);
  return forward(z, map, Quant::kIdentity, nullptr).z_hat;
}

Tensor Codec::apply_differentiable(const Tensor& z, const WeightMap& map) const {
  NoGradGuard guard;
  return apply_differentiable(constant(z), map).value();
}

Var Codec::rd_loss_graph(const Tensor& z0, const WeightMap& map, Rng& noise, double distortion_weight,
                         RdTerms* terms) const {
  check_inputs(z0, map);
  const Forward fw = forward(constant(z0), map, Quant::kNoise, &noise);
  const Var err = sub(fw.z_hat, constant(z0));
  // Channel mean of the squared error is the per-cell MSE.
  const Var weighted = mul_spatial(mul(err, err), constant(lambda_map(map, z0.shape())));
  const Var distortion = scale(sum(weighted), 1.0 / kLatentChannels);
  if (terms) {
    terms->bits = fw.bits.value()[0];
    terms->distortion = distortion.value()[0];
  }
  const Var loss = add(fw.bits, scale(distortion, distortion_weight));
  if (!std::isfinite(loss.value()[0])) throw Error("rd_loss is not finite");
  return loss;
}

double Codec::rd_loss(const Tensor& z0, const WeightMap& map, std::uint64_t noise_seed, double distortion_weight,
                      RdTerms* terms) const {
  NoGradGuard guard;
  Rng noise(noise_seed);
  return rd_loss_graph(z0, map, noise, distortion_weight, terms).value()[0];
}

Checkpoint Codec::to_checkpoint() const {
  if (!trained_) throw NotTrained("refusing to save an untrained codec");
  Checkpoint ck;
  ck.kind = "codec";
  ck.metadata = training_metadata;
  ck.metadata["channels"] = config_.channels;
  ck.metadata["single_scale"] = config_.single_scale;
  ck.tensors = snapshot_parameters(params_);
  return ck;
}

Codec Codec::from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "codec") throw InvalidArgument("expected a codec checkpoint, got " + ck.kind);
  CodecConfig cfg;
  cfg.channels = ck.metadata.at("channels").get<int>();
  cfg.single_scale = ck.metadata.at("single_scale").get<bool>();
  Codec codec(cfg, 0);
  load_parameters(ck, codec.params_);
  codec.training_metadata = ck.metadata;
  codec.trained_ = true;
  return codec;
}

WeightMap sample_training_map(Rng& rng, ImageDims dims) {
  const int levels = kMaxLevels;
  const double u = rng.uniform();
  if (u < 0.25) return WeightMap::constant(dims, levels, 0);
  if (u < 0.5) return WeightMap::constant(dims, levels, levels - 1);
  const int rows = map_rows(dims.height);
  const int cols = map_cols(dims.width);
  const int r0 = rng.uniform_int(0, rows - 1);
  const int r1 = rng.uniform_int(r0, rows - 1);
  const int c0 = rng.uniform_int(0, cols - 1);
  const int c1 = rng.uniform_int(c0, cols - 1);
  const auto background = static_cast<std::uint8_t>(rng.uniform_int(0, levels - 1));
  const auto inside = static_cast<std::uint8_t>(rng.uniform_int(0, levels - 1));
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(rows) * cols, background);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) grid[static_cast<std::size_t>(r) * cols + c] = inside;
  return WeightMap(dims, levels, std::move(grid));
}

Codec train_codec(const std::vector<Tensor>& latents, const CodecTrainConfig& config, CodecReport* report,
                  const LogFn& log) {
  if (latents.empty()) throw InvalidArgument("train_codec: empty dataset");
  if (config.epochs <= 0 || config.batch_size <= 0) throw InvalidArgument("train_codec: bad epochs or batch size");
  const auto holdout = std::min(latents.size() - 1,
                                static_cast<std::size_t>(std::floor(latents.size() * config.holdout_fraction)));
  const std::size_t n_train = latents.size() - holdout;
  auto dims_of = [](const Tensor& z) {
    if (z.channels() != kLatentChannels || z.height() % 8 != 0 || z.width() % 8 != 0) {
      throw InvalidArgument("train_codec: latents must be (4, 8k, 8k)");
    }
    return ImageDims{z.height() * kLatentFactor, z.width() * kLatentFactor};
  };

  Codec codec(config.codec, config.seed);
  codec.trained_ = true;
  Rng rng(config.seed ^ 0xc0dec);

  // Fixed held-out maps and noise so the before/after losses are comparable.
  auto heldout_loss = [&]() {
    if (holdout == 0) return 0.0;
    Rng maps(config.seed ^ 0x4e1d);
    double total = 0.0;
    for (std::size_t i = n_train; i < latents.size(); ++i) {
      total += codec.rd_loss(latents[i], sample_training_map(maps, dims_of(latents[i])), 1000 + i,
                             config.distortion_weight);
    }
    return total / static_cast<double>(holdout);
  };

  CodecReport rep;
  rep.heldout_loss_init = heldout_loss();
  Adam opt(codec.params_, {.learning_rate = config.learning_rate, .clip_norm = 50.0});
  const int steps_per_epoch = static_cast<int>(std::max<std::size_t>(1, n_train / config.batch_size));
  const int total_steps = steps_per_epoch * config.epochs;
  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int s = 0; s < steps_per_epoch; ++s, ++step) {
      const double progress = static_cast<double>(step) / total_steps;
      opt.set_learning_rate(config.learning_rate * (0.05 + 0.95 * 0.5 * (1.0 + std::cos(M_PI * progress))));
      for (int b = 0; b < config.batch_size; ++b) {
        const Tensor& z = latents[rng.below(n_train)];
        const WeightMap map = sample_training_map(rng, dims_of(z));
        const Var loss = codec.rd_loss_graph(z, map, rng, config.distortion_weight);
        const double px = static_cast<double>(z.height()) * z.width();
        backward(scale(loss, 1.0 / px));
        epoch_loss += loss.value()[0];
      }
      opt.step(config.batch_size);
    }
    epoch_loss /= static_cast<double>(steps_per_epoch) * config.batch_size;
    if (!std::isfinite(epoch_loss) || !codec.params_.all_finite()) {
      throw Error("codec training diverged in epoch " + std::to_string(epoch + 1));
    }
    rep.epoch_loss.push_back(epoch_loss);
    if (log) log("codec epoch " + std::to_string(epoch + 1) + "/" + std::to_string(config.epochs) + " rd_loss " +
                 std::to_string(epoch_loss));
  }
  rep.heldout_loss = heldout_loss();
  codec.training_metadata = {{"seed", config.seed},
                             {"epochs", config.epochs},
                             {"learning_rate", config.learning_rate},
                             {"batch_size", config.batch_size},
                             {"distortion_weight", config.distortion_weight},
                             {"train_latents", n_train},
                             {"loss_curve", rep.epoch_loss},
                             {"heldout_loss_init", rep.heldout_loss_init},
                             {"heldout_loss", rep.heldout_loss}};
  if (report) *report = rep;
  return codec;
}

}  // namespace rsic
