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

// Range coding of integer symbols against explicit discrete distributions.
//
// Stream layout (stable across versions; see docs/FORMATS.md):
//   * 32-bit range, 16-bit probability precision, byte-wise renormalisation
//     whenever the range drops below 2^24, carries propagated into pending
//     0xFF runs.
//   * encode_symbols() appends a 16-bit sentinel (0xA5, 0x3C under a uniform
//     256-ary model) after the payload symbols.
//   * At the end the encoder picks the value inside its final interval with
//     the most trailing zero bits and flushes it.
//   * The always-zero leading byte and all trailing zero bytes are dropped;
//     the decoder reads zeros past the end of the buffer.
//   * Decoding re-encodes the decoded symbols and requires a byte-identical
//     match, so truncated or altered streams raise CorruptStream.

#ifndef RSIC_ENTROPY_CODER_HPP_
#define RSIC_ENTROPY_CODER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "rsic/tensor.hpp"

namespace rsic {

inline constexpr int kProbabilityBits = 16;
inline constexpr std::uint32_t kProbabilityTotal = 1u << kProbabilityBits;

class CorruptStream : public Error {
 public:
  using Error::Error;
};

// Integer CDF over a contiguous support [min_symbol, max_symbol]. Every
// symbol has a mass of at least 1 out of 2^16.
class SymbolDistribution {
 public:
  // Validates: cdf.front() == 0, strictly increasing, cdf.back() == 2^16.
  SymbolDistribution(int min_symbol, std::vector<std::uint32_t> cdf);

  // Quantizes non-negative weights onto the 16-bit grid. Every symbol keeps
  // mass >= 1; rounding leftovers go to the most probable symbol.
  static SymbolDistribution from_weights(int min_symbol, std::span<const double> weights);
  static SymbolDistribution uniform(int min_symbol, int count);
  static SymbolDistribution deterministic(int symbol);
  // Zero-mean Gaussian integrated over unit bins on [-half_width, half_width];
  // tail mass is folded into the two end symbols.
  static SymbolDistribution discretized_gaussian(double sigma, int half_width);

  int min_symbol() const { return min_symbol_; }
  int max_symbol() const { return min_symbol_ + count() - 1; }
  int count() const { return static_cast<int>(cdf_.size()) - 1; }
  bool contains(int symbol) const { return symbol >= min_symbol_ && symbol <= max_symbol(); }
  std::uint32_t cumulative(int index) const { return cdf_[index]; }
  std::uint32_t frequency(int index) const { return cdf_[index + 1] - cdf_[index]; }
  double probability(int symbol) const;

 private:
  int min_symbol_ = 0;
  std::vector<std::uint32_t> cdf_;
};

// Fixed bank of discretized Gaussians indexed by scale, shared by encoder
// and decoder so both sides agree bit-exactly on every CDF.
class GaussianBank {
 public:
  static const GaussianBank& instance();

  // Smallest tabulated scale >= sigma (clamped to the table range).
  int index_for(double sigma) const;
  double scale(int index) const { return scales_[index]; }
  const SymbolDistribution& distribution(int index) const { return dists_[index]; }
  int size() const { return static_cast<int>(scales_.size()); }

  static constexpr double kMinScale = 0.11;
  static constexpr double kMaxScale = 64.0;
  static constexpr int kLevels = 64;

 private:
  GaussianBank();
  std::vector<double> scales_;
  std::vector<SymbolDistribution> dists_;
};

class RangeEncoder {
 public:
  void encode(int symbol, const SymbolDistribution& dist);
  // Finalises the stream; the encoder must not be used afterwards.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
  bool finished_ = false;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  int decode(const SymbolDistribution& dist);

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

std::vector<std::uint8_t> encode_symbols(std::span<const int> symbols,
                                         std::span<const SymbolDistribution* const> dists);
std::vector<std::uint8_t> encode_symbols(std::span<const int> symbols,
                                         std::span<const SymbolDistribution> dists);

std::vector<int> decode_symbols(std::span<const std::uint8_t> bytes,
                                std::span<const SymbolDistribution* const> dists, std::size_t n);
std::vector<int> decode_symbols(std::span<const std::uint8_t> bytes,
                                std::span<const SymbolDistribution> dists, std::size_t n);

// Sum of -log2 p over the sequence.
double ideal_rate(std::span<const double> probabilities);

}  // namespace rsic

#endif  // RSIC_ENTROPY_CODER_HPP_
