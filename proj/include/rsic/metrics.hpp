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


// Full-image and foreground-masked PSNR / SSIM for images in [0, 1].

#ifndef RSIC_METRICS_HPP_
#define RSIC_METRICS_HPP_

#include <limits>

#include "rsic/tensor.hpp"

namespace rsic {

// Returned by the PSNR functions when the compared pixels are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

// a, b: (C, H, W) with peak value 1. mask: (1, H, W); pixels > 0.5 count.
double psnr(const Tensor& a, const Tensor& b);
double masked_psnr(const Tensor& a, const Tensor& b, const Tensor& mask);

// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, averaged over channels. Windows are clipped at the border and
// renormalised. The masked variant averages the windows whose centre pixel is
// masked.
double ssim(const Tensor& a, const Tensor& b);
double masked_ssim(const Tensor& a, const Tensor& b, const Tensor& mask);

// Per-pixel SSIM averaged over channels, (1, H, W).
Tensor ssim_map(const Tensor& a, const Tensor& b);

}  // namespace rsic

#endif  // RSIC_METRICS_HPP_
