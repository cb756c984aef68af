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
#include "rsic/metrics.hpp"
#include "rsic/rng.hpp"

using namespace rsic;

namespace {

// Direct 2-D windowed SSIM, no separability, clipped window renormalised.
double ssim_brute_force(const Tensor& a, const Tensor& b, int cy, int cx, int c) {
  double wsum = 0.0, ma = 0.0, mb = 0.0;
  for (int dy = -5; dy <= 5; ++dy) {
    for (int dx = -5; dx <= 5; ++dx) {
      const int y = cy + dy, x = cx + dx;
      if (y < 0 || x < 0 || y >= a.height() || x >= a.width()) continue;
      const double w = std::exp(-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5));
      wsum += w;
      ma += w * a.at(c, y, x);
      mb += w * b.at(c, y, x);
    }
  }
  ma /= wsum;
  mb /= wsum;
  double va = 0.0, vb = 0.0, cov = 0.0;
  for (int dy = -5; dy <= 5; ++dy) {
    for (int dx = -5; dx <= 5; ++dx) {
      const int y = cy + dy, x = cx + dx;
      if (y < 0 || x < 0 || y >= a.height() || x >= a.width()) continue;
      const double w = std::exp(-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5)) / wsum;
      va += w * (a.at(c, y, x) - ma) * (a.at(c, y, x) - ma);
      vb += w * (b.at(c, y, x) - mb) * (b.at(c, y, x) - mb);
      cov += w * (a.at(c, y, x) - ma) * (b.at(c, y, x) - mb);
    }
  }
  const double c1 = 1e-4, c2 = 9e-4;
  return (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

Tensor clamp01(Tensor t) {
  for (double& v : t.values()) v = std::clamp(v, 0.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("psnr") {
  Rng rng(1);
  const Tensor a = rng.uniform_like({3, 16, 16}, 0.0, 1.0);
  CHECK(psnr(a, a) == kPsnrIdentical);
  Tensor b = a;
  for (double& v : b.values()) v = v > 0.5 ? v - 16.0 / 255.0 : v + 16.0 / 255.0;
  CHECK(std::abs(psnr(a, b) - 20.0 * std::log10(255.0 / 16.0)) < 1e-3);
  CHECK(std::abs(psnr(a, b) - 24.0485) < 1e-3);
  Tensor sixteenth = a;
  for (double& v : sixteenth.values()) v = v > 0.5 ? v - 1.0 / 16.0 : v + 1.0 / 16.0;
  CHECK(std::abs(psnr(a, sixteenth) - 24.0824) < 1e-3);
  const Tensor ones(1, 16, 16, 1.0);
  const Tensor c = clamp01(a + rng.normal_like(a.shape()) * 0.05);
  CHECK(masked_psnr(a, c, ones) == psnr(a, c));
  CHECK(psnr(a, c) == psnr(c, a));
}

TEST_CASE("masked psnr ignores pixels outside the mask") {
  Rng rng(2);
  const Tensor a = rng.uniform_like({3, 32, 32}, 0.0, 1.0);
  const Tensor b = clamp01(a + rng.normal_like(a.shape()) * 0.1);
  Tensor mask(1, 32, 32, 0.0);
  for (int y = 8; y < 20; ++y)
    for (int x = 4; x < 16; ++x) mask.at(0, y, x) = 1.0;
  const double before = masked_psnr(a, b, mask);
  const double ssim_before = masked_ssim(a, b, mask);
  Tensor b2 = b;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        if (y >= 26 || x >= 22) b2.at(c, y, x) = rng.uniform();
  CHECK(masked_psnr(a, b2, mask) == before);
  CHECK(masked_ssim(a, b2, mask) == ssim_before);
  CHECK(psnr(a, b2) != psnr(a, b));
}

TEST_CASE("ssim matches a brute-force window oracle") {
  Rng rng(3);
  const Tensor a = rng.uniform_like({3, 13, 17}, 0.0, 1.0);
  const Tensor b = clamp01(a + rng.normal_like(a.shape()) * 0.2);
  const Tensor m = ssim_map(a, b);
  double total = 0.0;
  for (int y = 0; y < 13; ++y) {
    for (int x = 0; x < 17; ++x) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += ssim_brute_force(a, b, y, x, c) / 3.0;
      CHECK(m.at(0, y, x) == doctest::Approx(s).epsilon(1e-10));
      total += s;
    }
  }
  CHECK(ssim(a, b) == doctest::Approx(total / (13 * 17)).epsilon(1e-10));
}

TEST_CASE("ssim properties") {
  Rng rng(4);
  const Tensor a = rng.uniform_like({3, 24, 24}, 0.0, 1.0);
  CHECK(ssim(a, a) == 1.0);
  Tensor board(1, 32, 32);
  Tensor inverse(1, 32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      board.at(0, y, x) = ((y / 4 + x / 4) % 2) ? 1.0 : 0.0;
      inverse.at(0, y, x) = 1.0 - board.at(0, y, x);
    }
  }
  CHECK(ssim(board, inverse) < 0.5);
  const Tensor b = clamp01(a + rng.normal_like(a.shape()) * 0.1);
  CHECK(ssim(a, b) == ssim(b, a));
  CHECK(masked_ssim(a, b, Tensor(1, 24, 24, 1.0)) == ssim(a, b));
  CHECK(ssim(a, b) < 1.0);
}

TEST_CASE("metric errors") {
  const Tensor a(3, 8, 8, 0.5);
  const Tensor b(3, 8, 9, 0.5);
  CHECK_THROWS_AS(psnr(a, b), InvalidArgument);
  CHECK_THROWS_AS(ssim(a, b), InvalidArgument);
  CHECK_THROWS_AS(masked_psnr(a, a, Tensor(1, 8, 8, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(masked_ssim(a, a, Tensor(1, 8, 8, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(masked_psnr(a, a, Tensor(1, 4, 8, 1.0)), InvalidArgument);
}
