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


#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "rsic/entropy_coder.hpp"
#include "rsic/hsvlc.hpp"

using namespace rsic;

using namespace rsic::fixture;

TEST_CASE("feature shapes") {
  const Codec& codec = small_codec();
  Rng rng(2);
  const auto f = codec.analyze(smooth_latent(rng, 8, 8), WeightMap({64, 64}, 8));
  CHECK(f[0].shape() == Shape{8, 4, 4});
  CHECK(f[1].shape() == Shape{8, 2, 2});
  CHECK(f[2].shape() == Shape{8, 1, 1});
  CHECK(f[3].shape() == Shape{8, 1, 1});
  const auto g = codec.feature_shapes({4, 64, 96});
  CHECK(g[0] == Shape{8, 32, 48});
  CHECK(g[3] == Shape{8, 4, 6});
  CHECK(codec.feature_shapes({4, 24, 8})[3] == Shape{8, 2, 1});
}

TEST_CASE("analysis is conditioned on the map and deterministic") {
  const Codec& codec = small_codec();
  Rng rng(3);
  const Tensor z = smooth_latent(rng, 16, 16);
  const auto zero = codec.analyze(z, WeightMap::constant({128, 128}, 8, 0));
  const auto one = codec.analyze(z, WeightMap::constant({128, 128}, 8, 7));
  CHECK(zero[0] != one[0]);
  CHECK(codec.analyze(z, WeightMap::constant({128, 128}, 8, 0))[0] == zero[0]);
  CHECK_THROWS_AS(codec.analyze(z, WeightMap::constant({64, 128}, 8, 0)), InvalidArgument);
}

TEST_CASE("gating masks") {
  const Shape latent{4, 16, 16};
  const auto zero = gating_masks(WeightMap::constant({128, 128}, 8, 0), latent);
  for (int i = 0; i < 3; ++i) CHECK(zero[i].sum() == 0.0);
  CHECK(zero[3].sum() == static_cast<double>(zero[3].size()));
  const auto one = gating_masks(WeightMap::constant({128, 128}, 8, 7), latent);
  for (int i = 0; i < 4; ++i) CHECK(one[i].sum() == static_cast<double>(one[i].size()));
  const auto half = gating_masks(half_map({128, 128}), latent);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(half[0].at(0, y, x) == (x < 4 ? 1.0 : 0.0));
  // Level 5/7 = 0.714 enables two tiers: f3 and f2.
  const auto five = gating_masks(WeightMap::constant({128, 128}, 8, 5), latent);
  CHECK(five[2].sum() == 4.0);
  CHECK(five[1].sum() == 0.0);
  const auto six = gating_masks(WeightMap::constant({128, 128}, 8, 6), latent);
  CHECK(six[1].sum() == 16.0);
  CHECK(six[0].sum() == 0.0);
}

TEST_CASE("gate keeps enabled cells and replaces the rest") {
  const Codec& codec = small_codec();
  Rng rng(4);
  const Tensor z = smooth_latent(rng, 16, 16);
  const WeightMap map = half_map({128, 128});
  const auto f = codec.analyze(z, map);
  const auto g = codec.gate(f, map);
  CHECK(g[3] == f[3]);
  for (int c = 0; c < 8; ++c) {
    for (int y = 0; y < 8; ++y) {
      CHECK(g[0].at(c, y, 0) == doctest::Approx(f[0].at(c, y, 0)).epsilon(1e-12));
    }
  }
  const auto all = codec.gate(f, WeightMap::constant({128, 128}, 8, 7));
  for (int i = 0; i < 4; ++i) CHECK(oracle::relative_error(all[i], f[i]) < 1e-12);
}

TEST_CASE("compress and decompress") {
  const Codec& codec = small_codec();
  Rng rng(5);
  const Tensor z = smooth_latent(rng, 16, 16);
  for (const WeightMap& map : {WeightMap::constant({128, 128}, 8, 0), half_map({128, 128}),
                               WeightMap::constant({128, 128}, 8, 7)}) {
    const auto bits = codec.compress(z, map);
    CHECK(codec.compress(z, map).streams == bits.streams);
    const Tensor a = codec.decompress(bits, map);
    CHECK(a.shape() == z.shape());
    CHECK(codec.decompress(bits, map) == a);
    for (int i = 0; i < 4; ++i) CHECK(bits.rates[i] == 8.0 * bits.streams[i].size());
  }
}

TEST_CASE("quantizer gain") {
  CHECK(quantization_gain(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(quantization_gain(0.0) == doctest::Approx(std::sqrt(0.01 / (0.01 * std::exp(7.0)))).epsilon(1e-12));
  CHECK(quantization_gain(0.5) == doctest::Approx(std::exp(-1.75)).epsilon(1e-12));
  for (int l = 1; l < 8; ++l) CHECK(quantization_gain(l / 7.0) > quantization_gain((l - 1) / 7.0));
}

TEST_CASE("coded residuals sit on the gain lattice") {
  const Codec& codec = small_codec();
  Rng rng(15);
  const Tensor z = smooth_latent(rng, 16, 16);
  for (int level : {0, 3, 5, 7}) {
    const WeightMap map = WeightMap::constant({128, 128}, 8, level);
    const double step = 1.0 / quantization_gain(level / 7.0);
    const auto f = codec.gate(codec.analyze(z, map), map);
    const auto y = codec.decode_features(codec.compress(z, map), map);
    std::size_t within = 0, total = 0;
    for (int i = 0; i < 4; ++i) {
      for (std::size_t k = 0; k < f[i].size(); ++k) {
        ++total;
        if (std::abs(y[i][k] - f[i][k]) <= 0.5 * step * (1.0 + 1e-9)) ++within;
      }
    }
    CHECK(within >= total * 99 / 100);
  }
}

TEST_CASE("gated cells cost nothing") {
  const Codec& codec = small_codec();
  Rng rng(6);
  const Tensor z = smooth_latent(rng, 16, 16);
  const WeightMap zero = WeightMap::constant({128, 128}, 8, 0);
  auto bits = codec.compress(z, zero);
  for (int i = 0; i < 3; ++i) CHECK(bits.streams[i].empty());
  CHECK_FALSE(bits.streams[3].empty());
  // Half-gated finest scale: under 1 bit per gated cell on top of the coded half.
  const WeightMap half = half_map({128, 128});
  const auto full = codec.compress(z, WeightMap::constant({128, 128}, 8, 7));
  const auto part = codec.compress(z, half);
  CHECK(part.rates[0] < full.rates[0]);
  const std::vector<int> zeros(4096, 0);
  const std::vector<SymbolDistribution> certain(4096, SymbolDistribution::deterministic(0));
  CHECK(8.0 * encode_symbols(zeros, certain).size() < 4096.0);
  bits.streams[0].push_back(0);
  CHECK_THROWS_AS(codec.decompress(bits, zero), CorruptStream);
}

TEST_CASE("coarser scales decode without reading finer streams") {
  const Codec& codec = small_codec();
  Rng rng(7);
  const WeightMap map = WeightMap::constant({128, 128}, 8, 7);
  auto bits = codec.compress(smooth_latent(rng, 16, 16), map);
  const auto clean = codec.decode_features(bits, map);
  bits.streams[0].assign(bits.streams[0].size(), 0x5A);
  CHECK_THROWS_AS(codec.decode_features(bits, map), CorruptStream);
  const auto partial = codec.decode_features(bits, map, 1);
  for (int i = 1; i < 4; ++i) CHECK(partial[i] == clean[i]);
  bits.streams[1].push_back(0x11);
  const auto coarse = codec.decode_features(bits, map, 2);
  CHECK(coarse[2] == clean[2]);
  CHECK(coarse[3] == clean[3]);
}

TEST_CASE("apply_differentiable gradient matches finite differences") {
  const Codec& codec = small_codec();
  Rng rng(8);
  const WeightMap map = half_map({64, 128});
  for (int trial = 0; trial < 3; ++trial) {
    const Tensor z0 = smooth_latent(rng, 8, 16);
    const Tensor target = rng.normal_like(z0.shape());
    auto f = [&](const Tensor& z) { return l2_distance(codec.apply_differentiable(z, map), target); };
    nn::Var z = nn::variable(z0);
    const nn::Var d = nn::sub(codec.apply_differentiable(z, map), nn::constant(target));
    nn::backward(nn::sum(nn::mul(d, d)));
    // d||d|| = d(||d||^2) / (2 ||d||).
    Tensor grad = z.grad() * (0.5 / l2_distance(codec.apply_differentiable(z0, map), target));
    CHECK(oracle::relative_error(grad, oracle::central_difference(f, z0, 1e-4)) < 1e-3);
  }
}

TEST_CASE("lambda-weighted distortion") {
  const WeightMap map = half_map({64, 128});
  Rng rng(9);
  const Tensor z = rng.normal_like({4, 8, 16});
  CHECK(lambda_weighted_distortion(z, z, map) == 0.0);
  Tensor hi = z;
  Tensor lo = z;
  // One latent cell inside the M = 1 half, one inside the M = 0 half.
  for (int c = 0; c < 4; ++c) {
    hi.at(c, 2, 3) += 1.0;
    lo.at(c, 2, 12) += 1.0;
  }
  CHECK(lambda_weighted_distortion(z, hi, map) == doctest::Approx(10.9663).epsilon(1e-5));
  CHECK(lambda_weighted_distortion(z, lo, map) == doctest::Approx(0.01));
}

TEST_CASE("rd_loss is finite with finite gradients") {
  Codec codec({.channels = 8}, 3);
  Rng rng(10);
  const Tensor z = smooth_latent(rng, 16, 16);
  RdTerms terms;
  const double loss = codec.rd_loss(z, half_map({128, 128}), 1, 64.0, &terms);
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(terms.bits + 64.0 * terms.distortion));
  CHECK(terms.bits > 0.0);
  Rng noise(1);
  nn::backward(codec.rd_loss_graph(z, half_map({128, 128}), noise, 64.0));
  for (const auto& p : codec.parameters().items()) CHECK(p.var.grad().all_finite());
  // A cell coded exactly at the smallest scale costs ~0 bits.
  const nn::Var certain = nn::gaussian_bits(nn::constant(Tensor(1, 1, 1, 0.0)), nn::constant(Tensor(1, 1, 1, 0.11)));
  CHECK(certain.value()[0] < 1e-4);
}

TEST_CASE("training is seed-reproducible and lowers held-out loss") {
  const auto data = latent_set(11, 20, 16, 16);
  auto cfg = small_codec_config();
  cfg.epochs = 3;
  CodecReport rep;
  const Codec a = train_codec(data, cfg, &rep);
  const Codec b = train_codec(data, cfg);
  CHECK(serialize_checkpoint(a.to_checkpoint()) == serialize_checkpoint(b.to_checkpoint()));
  CHECK(rep.heldout_loss < rep.heldout_loss_init);
  const Codec c = Codec::from_checkpoint(parse_checkpoint(serialize_checkpoint(a.to_checkpoint())));
  Rng rng(12);
  const Tensor z = smooth_latent(rng, 16, 16);
  const WeightMap map = half_map({128, 128});
  CHECK(c.compress(z, map).streams == a.compress(z, map).streams);
}

TEST_CASE("single-scale variant") {
  auto cfg = small_codec_config();
  cfg.codec.single_scale = true;
  const Codec codec = train_codec(latent_set(13, 12, 16, 16), cfg);
  CHECK(codec.scale_count() == 1);
  Rng rng(14);
  const Tensor z = smooth_latent(rng, 16, 16);
  const WeightMap map = half_map({128, 128});
  const auto bits = codec.compress(z, map);
  for (int i = 1; i < 4; ++i) CHECK(bits.streams[i].empty());
  CHECK(codec.decompress(bits, map).shape() == z.shape());
}

TEST_CASE("codec errors") {
  Codec untrained({.channels = 4}, 1);
  Rng rng(15);
  const Tensor z = smooth_latent(rng, 8, 8);
  CHECK_THROWS_AS(untrained.compress(z, WeightMap({64, 64}, 8)), NotTrained);
  CHECK_THROWS_AS(train_codec({}, small_codec_config()), InvalidArgument);
  auto cfg = small_codec_config();
  cfg.epochs = 0;
  CHECK_THROWS_AS(train_codec(latent_set(1, 4, 8, 8), cfg), InvalidArgument);
  Tensor bad = z;
  bad[0] = std::nan("");
  CHECK_THROWS_AS(small_codec().compress(bad, WeightMap({64, 64}, 8)), InvalidArgument);
}
