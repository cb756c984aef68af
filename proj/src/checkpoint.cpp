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


#include "rsic/checkpoint.hpp"

#include <fstream>

#include "rsic/bytes.hpp"

namespace rsic {

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ck) {
  if (ck.kind.empty() || ck.kind.size() > 255) throw InvalidArgument("checkpoint kind must be 1..255 bytes");
  ByteWriter w;
  w.str("RSCK");
  w.u8(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(ck.kind.size()));
  w.str(ck.kind);
  const std::string meta = ck.metadata.dump();
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.str(meta);
  w.u32(static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& [name, t] : ck.tensors) {
    if (name.size() > 0xFFFF) throw InvalidArgument("tensor name too long");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.channels()));
    w.u32(static_cast<std::uint32_t>(t.height()));
    w.u32(static_cast<std::uint32_t>(t.width()));
    for (double v : t.values()) w.f64(v);
  }
  return w.take();
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.bytes(4, "magic");
  if (std::string(magic.begin(), magic.end()) != "RSCK") throw ParseError("magic", "not an RSIC checkpoint");
  const std::uint8_t version = r.u8("version");
  if (version != kCheckpointVersion) throw ParseError("version", "unsupported version " + std::to_string(version));
  Checkpoint ck;
  const auto kind = r.bytes(r.u8("kind_length"), "kind");
  ck.kind.assign(kind.begin(), kind.end());
  const auto meta = r.bytes(r.u32("metadata_length"), "metadata");
  try {
    ck.metadata = nlohmann::json::parse(meta.begin(), meta.end());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("metadata", e.what());
  }
  const std::uint32_t count = r.u32("tensor_count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = r.bytes(r.u16("tensor_name_length"), "tensor_name");
    Shape shape;
    shape.channels = static_cast<int>(r.u32("tensor_shape"));
    shape.height = static_cast<int>(r.u32("tensor_shape"));
    shape.width = static_cast<int>(r.u32("tensor_shape"));
    if (shape.channels < 0 || shape.height < 0 || shape.width < 0 || shape.size() * 8 > r.remaining()) {
      throw ParseError("tensor_shape", "shape " + shape.str() + " exceeds the file");
    }
    Tensor t(shape);
    for (double& v : t.values()) v = r.f64("tensor_data");
    ck.tensors.emplace_back(std::string(name.begin(), name.end()), std::move(t));
  }
  if (!r.done()) throw ParseError("trailer", "unexpected trailing bytes");
  return ck;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void load_parameters(const Checkpoint& ck, nn::ParameterSet& params) {
  auto& items = params.items();
  if (items.size() != ck.tensors.size()) {
    throw InvalidArgument(ck.kind + " checkpoint has " + std::to_string(ck.tensors.size()) +
                          " tensors, model expects " + std::to_string(items.size()));
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& [name, t] = ck.tensors[i];
    if (name != items[i].name || t.shape() != items[i].var.shape()) {
      throw InvalidArgument(ck.kind + " checkpoint tensor '" + name + "' " + t.shape().str() +
                            " does not match model tensor '" + items[i].name + "' " +
                            items[i].var.shape().str());
    }
    if (!t.all_finite()) throw InvalidArgument(ck.kind + " checkpoint tensor '" + name + "' is not finite");
    items[i].var.mutable_value() = t;
  }
}

std::vector<std::pair<std::string, Tensor>> snapshot_parameters(const nn::ParameterSet& params) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& p : params.items()) out.emplace_back(p.name, p.var.value());
  return out;
}

}  // namespace rsic
