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

#include "rsic/entropy_coder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rsic {

namespace {

constexpr std::uint32_t kTop = 1u << 24;

// Appended after every symbol sequence so truncation is detected.
constexpr int kSentinel[] = {0xA5, 0x3C};

const SymbolDistribution& sentinel_distribution() {
  static const SymbolDistribution d = SymbolDistribution::uniform(0, 256);
  return d;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * (1.0 / std::numbers::sqrt2)); }

}  // namespace

// ---- SymbolDistribution ----------------------------------------------------

SymbolDistribution::SymbolDistribution(int min_symbol, std::vector<std::uint32_t> cdf)
    : min_symbol_(min_symbol), cdf_(std::move(cdf)) {
  if (cdf_.size() < 2) throw InvalidArgument("symbol distribution is empty");
  if (cdf_.front() != 0 || cdf_.back() != kProbabilityTotal) {
    throw InvalidArgument("symbol distribution cdf must span [0, 2^16]");
  }
  for (std::size_t i = 1; i < cdf_.size(); ++i) {
    if (cdf_[i] <= cdf_[i - 1]) throw InvalidArgument("symbol distribution cdf must be strictly increasing");
  }
}

SymbolDistribution SymbolDistribution::from_weights(int min_symbol, std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw InvalidArgument("symbol distribution is empty");
  if (n > kProbabilityTotal) throw InvalidArgument("too many symbols for 16-bit precision");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("symbol weights must be finite and >= 0");
    total += w;
  }
  const std::uint32_t spare = kProbabilityTotal - static_cast<std::uint32_t>(n);
  std::vector<std::uint32_t> freq(n, 1);
  std::uint32_t assigned = static_cast<std::uint32_t>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double share = total > 0.0 ? weights[i] / total : 1.0 / static_cast<double>(n);
    const auto extra = static_cast<std::uint32_t>(std::floor(share * spare));
    freq[i] += extra;
    assigned += extra;
  }
  const auto top = std::max_element(weights.begin(), weights.end()) - weights.begin();
  freq[top] += kProbabilityTotal - assigned;
  std::vector<std::uint32_t> cdf(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) cdf[i + 1] = cdf[i] + freq[i];
  return SymbolDistribution(min_symbol, std::move(cdf));
}

SymbolDistribution SymbolDistribution::uniform(int min_symbol, int count) {
  if (count <= 0) throw InvalidArgument("symbol distribution is empty");
  std::vector<double> w(static_cast<std::size_t>(count), 1.0);
  return from_weights(min_symbol, w);
}

SymbolDistribution SymbolDistribution::deterministic(int symbol) {
  return SymbolDistribution(symbol, {0, kProbabilityTotal});
}

SymbolDistribution SymbolDistribution::discretized_gaussian(double sigma, int half_width) {
  if (!(sigma > 0.0) || half_width < 0) throw InvalidArgument("discretized_gaussian: bad parameters");
  std::vector<double> w(static_cast<std::size_t>(2 * half_width + 1));
  for (int k = -half_width; k <= half_width; ++k) {
    // Lower-tail evaluation keeps the far bins accurate.
    const double a = -std::abs(static_cast<double>(k));
    double p = normal_cdf((a + 0.5) / sigma) - normal_cdf((a - 0.5) / sigma);
    if (k == -half_width || k == half_width) p = normal_cdf((a + 0.5) / sigma);
    w[static_cast<std::size_t>(k + half_width)] = p;
  }
  if (half_width == 0) w[0] = 1.0;
  return from_weights(-half_width, w);
}

double SymbolDistribution::probability(int symbol) const {
  if (!contains(symbol)) return 0.0;
  return static_cast<double>(frequency(symbol - min_symbol_)) / kProbabilityTotal;
}

// ---- GaussianBank ----------------------------------------------------------

GaussianBank::GaussianBank() {
  const double ratio = std::log(kMaxScale / kMinScale) / (kLevels - 1);
  for (int i = 0; i < kLevels; ++i) {
    const double s = kMinScale * std::exp(ratio * i);
    scales_.push_back(s);
    const int half_width = std::clamp(static_cast<int>(std::ceil(10.0 * s)), 1, 1024);
    dists_.push_back(SymbolDistribution::discretized_gaussian(s, half_width));
  }
}

const GaussianBank& GaussianBank::instance() {
  static const GaussianBank bank;
  return bank;
}

int GaussianBank::index_for(double sigma) const {
  if (!(sigma == sigma)) throw InvalidArgument("GaussianBank: NaN scale");
  const auto it = std::lower_bound(scales_.begin(), scales_.end(), sigma);
  if (it == scales_.end()) return kLevels - 1;
  return static_cast<int>(it - scales_.begin());
}

// ---- RangeEncoder ----------------------------------------------------------

void RangeEncoder::encode(int symbol, const SymbolDistribution& dist) {
  if (finished_) throw Error("RangeEncoder used after finish()");
  if (!dist.contains(symbol)) {
    throw InvalidArgument("symbol " + std::to_string(symbol) + " outside support [" +
                          std::to_string(dist.min_symbol()) + ", " + std::to_string(dist.max_symbol()) + "]");
  }
  const int idx = symbol - dist.min_symbol();
  const std::uint32_t r = range_ >> kProbabilityBits;
  low_ += static_cast<std::uint64_t>(r) * dist.cumulative(idx);
  range_ = r * dist.frequency(idx);
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t pending = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(pending + carry));
      pending = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  if (finished_) throw Error("RangeEncoder::finish() called twice");
  finished_ = true;
  // Value in [low, low + range) with the longest run of trailing zero bits.
  const std::uint64_t hi = low_ + range_ - 1;
  for (int k = 32; k >= 0; --k) {
    const std::uint64_t unit = std::uint64_t{1} << k;
    const std::uint64_t v = (low_ + unit - 1) & ~(unit - 1);
    if (v <= hi) {
      low_ = v;
      break;
    }
  }
  for (int i = 0; i < 5; ++i) shift_low();
  // out_[0] is the initial cache byte and is always zero.
  std::vector<std::uint8_t> out(out_.begin() + 1, out_.end());
  while (!out.empty() && out.back() == 0) out.pop_back();
  return out;
}

// ---- RangeDecoder ----------------------------------------------------------

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  const std::uint8_t b = pos_ < bytes_.size() ? bytes_[pos_] : 0;
  ++pos_;
  return b;
}

int RangeDecoder::decode(const SymbolDistribution& dist) {
  const std::uint32_t r = range_ >> kProbabilityBits;
  const std::uint32_t target = code_ / r;
  if (target >= kProbabilityTotal) throw CorruptStream("range decoder: code value out of range");
  // Largest index with cdf[index] <= target.
  int lo = 0;
  int hi = dist.count() - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (dist.cumulative(mid) <= target) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  code_ -= r * dist.cumulative(lo);
  range_ = r * dist.frequency(lo);
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  if (pos_ > bytes_.size() + 8) throw CorruptStream("range decoder: stream exhausted");
  return dist.min_symbol() + lo;
}

// ---- sequence API ----------------------------------------------------------

std::vector<std::uint8_t> encode_symbols(std::span<const int> symbols,
                                         std::span<const SymbolDistribution* const> dists) {
  if (symbols.size() != dists.size()) {
    throw InvalidArgument("encode_symbols: " + std::to_string(symbols.size()) + " symbols but " +
                          std::to_string(dists.size()) + " distributions");
  }
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (dists[i] == nullptr) throw InvalidArgument("encode_symbols: missing distribution");
    enc.encode(symbols[i], *dists[i]);
  }
  for (int v : kSentinel) enc.encode(v, sentinel_distribution());
  return enc.finish();
}

std::vector<std::uint8_t> encode_symbols(std::span<const int> symbols,
                                         std::span<const SymbolDistribution> dists) {
  std::vector<const SymbolDistribution*> ptrs;
  ptrs.reserve(dists.size());
  for (const auto& d : dists) ptrs.push_back(&d);
  return encode_symbols(symbols, ptrs);
}

std::vector<int> decode_symbols(std::span<const std::uint8_t> bytes,
                                std::span<const SymbolDistribution* const> dists, std::size_t n) {
  if (dists.size() != n) {
    throw InvalidArgument("decode_symbols: " + std::to_string(n) + " symbols requested but " +
                          std::to_string(dists.size()) + " distributions given");
  }
  std::vector<int> symbols(n);
  RangeDecoder dec(bytes);
  for (std::size_t i = 0; i < n; ++i) symbols[i] = dec.decode(*dists[i]);
  for (int v : kSentinel) {
    if (dec.decode(sentinel_distribution()) != v) throw CorruptStream("range decoder: sentinel mismatch");
  }
  const std::vector<std::uint8_t> canonical = encode_symbols(symbols, dists);
  if (!std::equal(canonical.begin(), canonical.end(), bytes.begin(), bytes.end())) {
    throw CorruptStream("range decoder: stream length or content does not match its decoded symbols");
  }
  return symbols;
}

std::vector<int> decode_symbols(std::span<const std::uint8_t> bytes,
                                std::span<const SymbolDistribution> dists, std::size_t n) {
  std::vector<const SymbolDistribution*> ptrs;
  ptrs.reserve(dists.size());
  for (const auto& d : dists) ptrs.push_back(&d);
  return decode_symbols(bytes, ptrs, n);
}

double ideal_rate(std::span<const double> probabilities) {
  double bits = 0.0;
  for (double p : probabilities) {
    if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("ideal_rate: probability outside (0, 1]");
    bits -= std::log2(p);
  }
  return bits;
}

}  // namespace rsic
