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


// Versioned binary checkpoints shared by every model:
//
//   "RSCK" | u8 version | u8 kind length | kind | u32 metadata length |
//   metadata (JSON) | u32 tensor count | per tensor: u16 name length, name,
//   u32 channels, u32 height, u32 width, big-endian IEEE-754 doubles.

#ifndef RSIC_CHECKPOINT_HPP_
#define RSIC_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsic/nn.hpp"

namespace rsic {

inline constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string kind;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor>> tensors;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ck);
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Copies tensors into `params`, requiring the same names, order and shapes.
void load_parameters(const Checkpoint& ck, nn::ParameterSet& params);
std::vector<std::pair<std::string, Tensor>> snapshot_parameters(const nn::ParameterSet& params);

}  // namespace rsic

#endif  // RSIC_CHECKPOINT_HPP_
