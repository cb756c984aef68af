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


#include "rsic/metrics.hpp"

#include <array>
#include <cmath>

namespace rsic {

namespace {

constexpr int kRadius = 5;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_pair(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "metric inputs");
  if (a.empty()) throw InvalidArgument("metric inputs are empty");
}

void check_mask(const Tensor& a, const Tensor& mask) {
  if (mask.shape() != Shape{1, a.height(), a.width()}) {
    throw InvalidArgument("mask shape " + mask.shape().str() + " does not match image " + a.shape().str());
  }
  for (double v : mask.values()) {
    if (v > 0.5) return;
  }
  throw InvalidArgument("mask selects no pixels");
}

double psnr_from_mse(double mse) {
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / mse);
}

std::array<double, 2 * kRadius + 1> gaussian_taps() {
  std::array<double, 2 * kRadius + 1> w{};
  for (int i = -kRadius; i <= kRadius; ++i) w[i + kRadius] = std::exp(-0.5 * i * i / (kSigma * kSigma));
  return w;
}

// Separable weighted average with the window clipped to the image.
Tensor local_mean(const Tensor& x) {
  static const auto taps = gaussian_taps();
  const int h = x.height();
  const int w = x.width();
  Tensor tmp(x.shape());
  Tensor out(x.shape());
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int i = 0; i < w; ++i) {
        double s = 0.0;
        double n = 0.0;
        for (int k = -kRadius; k <= kRadius; ++k) {
          const int j = i + k;
          if (j < 0 || j >= w) continue;
          s += taps[k + kRadius] * x.at(c, y, j);
          n += taps[k + kRadius];
        }
        tmp.at(c, y, i) = s / n;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int i = 0; i < w; ++i) {
        double s = 0.0;
        double n = 0.0;
        for (int k = -kRadius; k <= kRadius; ++k) {
          const int j = y + k;
          if (j < 0 || j >= h) continue;
          s += taps[k + kRadius] * tmp.at(c, j, i);
          n += taps[k + kRadius];
        }
        out.at(c, y, i) = s / n;
      }
    }
  }
  return out;
}

Tensor product(const Tensor& a, const Tensor& b) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b) {
  check_pair(a, b);
  return psnr_from_mse(mean_squared_error(a, b));
}

double masked_psnr(const Tensor& a, const Tensor& b, const Tensor& mask) {
  check_pair(a, b);
  check_mask(a, mask);
  double se = 0.0;
  std::size_t n = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        if (mask.at(0, y, x) <= 0.5) continue;
        const double d = a.at(c, y, x) - b.at(c, y, x);
        se += d * d;
        ++n;
      }
    }
  }
  return psnr_from_mse(se / static_cast<double>(n));
}

Tensor ssim_map(const Tensor& a, const Tensor& b) {
  check_pair(a, b);
  const Tensor mu_a = local_mean(a);
  const Tensor mu_b = local_mean(b);
  const Tensor aa = local_mean(product(a, a));
  const Tensor bb = local_mean(product(b, b));
  const Tensor ab = local_mean(product(a, b));
  Tensor out(1, a.height(), a.width());
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        const double ma = mu_a.at(c, y, x);
        const double mb = mu_b.at(c, y, x);
        const double va = aa.at(c, y, x) - ma * ma;
        const double vb = bb.at(c, y, x) - mb * mb;
        const double cov = ab.at(c, y, x) - ma * mb;
        const double s = ((2.0 * (ma * mb) + kC1) * (2.0 * cov + kC2)) /
                         ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
        out.at(0, y, x) += s / a.channels();
      }
    }
  }
  return out;
}

double ssim(const Tensor& a, const Tensor& b) {
  const Tensor m = ssim_map(a, b);
  return m.sum() / static_cast<double>(m.size());
}

double masked_ssim(const Tensor& a, const Tensor& b, const Tensor& mask) {
  check_pair(a, b);
  check_mask(a, mask);
  const Tensor m = ssim_map(a, b);
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (mask[i] <= 0.5) continue;
    s += m[i];
    ++n;
  }
  return s / static_cast<double>(n);
}

}  // namespace rsic
