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


#ifndef RSIC_TESTS_FIXTURES_HPP_
#define RSIC_TESTS_FIXTURES_HPP_

#include <filesystem>
#include <vector>

#include "rsic/hsvlc.hpp"

namespace rsic::fixture {

// Smooth random latent: a few low-frequency waves per channel.
Tensor smooth_latent(Rng& rng, int h, int w);
std::vector<Tensor> latent_set(std::uint64_t seed, int n, int h, int w);

// Map at level 7 on the left half of the blocks and 0 elsewhere.
WeightMap half_map(ImageDims dims);

CodecTrainConfig small_codec_config();
// 8-channel codec trained for one epoch on smooth latents; built once.
const Codec& small_codec();

// Temporary directory holding a toy dataset under data/ and a complete set of
// tiny trained checkpoints under models/.
const std::filesystem::path& tiny_workspace();

}  // namespace rsic::fixture

#endif  // RSIC_TESTS_FIXTURES_HPP_
