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

// Test-only reference computations. Nothing here calls into the code paths
// it is used to check.

#ifndef RSIC_TESTS_ORACLES_HPP_
#define RSIC_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "rsic/tensor.hpp"

namespace rsic::oracle {

// Central finite differences of a scalar function of a tensor.
inline Tensor central_difference(const std::function<double(const Tensor&)>& f, const Tensor& at,
                                 double step) {
  Tensor grad(at.shape());
  Tensor probe = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = f(probe);
    probe[i] = orig - step;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

// ||a - b|| / max(||b||, floor).
inline double relative_error(const Tensor& a, const Tensor& b, double floor = 1e-12) {
  double diff = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    ref += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), floor);
}

inline double shannon_entropy_bits(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

// Discretized Gaussian bin probabilities by midpoint-rule quadrature of the
// density, independent of the erfc-based construction in the coder.
inline std::vector<double> gaussian_bins_by_quadrature(double sigma, int half_width) {
  const int sub = 2000;
  std::vector<double> p(2 * half_width + 1, 0.0);
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
  const double lo_edge = -half_width - 0.5 - 12.0 * sigma;
  const double hi_edge = half_width + 0.5 + 12.0 * sigma;
  const int total = static_cast<int>((hi_edge - lo_edge) * sub);
  const double dx = (hi_edge - lo_edge) / total;
  for (int i = 0; i < total; ++i) {
    const double x = lo_edge + (i + 0.5) * dx;
    int bin = static_cast<int>(std::floor(x + 0.5));
    bin = std::clamp(bin, -half_width, half_width);
    p[bin + half_width] += norm * std::exp(-0.5 * x * x / (sigma * sigma)) * dx;
  }
  return p;
}

}  // namespace rsic::oracle

#endif  // RSIC_TESTS_ORACLES_HPP_
