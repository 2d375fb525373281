/*
 * Copyright 2026 The rankaudit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RANKAUDIT_RANDOM_HPP_
#define RANKAUDIT_RANDOM_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace rankaudit::random {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3"). Pure function of (counter, key); every stream in
// this library is addressed by counter, so results never depend on the
// order or thread in which blocks are generated.
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Counter philox4x32(Counter ctr, Key key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Derives a child key from a parent key and an index. Used to key
// substreams by (seed, replication), (seed, query), and so on.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) {
  return mix64(parent ^ mix64(index + 0x632BE59BD9B4E019ull));
}

// A sequential view over one counter-based substream. Block b of stream s
// under key k is philox4x32((b_lo, b_hi, s_lo, s_hi), (k_lo, k_hi)).
class Stream {
 public:
  Stream(std::uint64_t key, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        stream_id_(stream_id) {}

  std::uint64_t next_u64() {
    if (lane_ == 0) {
      buffer_ = philox4x32({static_cast<std::uint32_t>(block_),
                            static_cast<std::uint32_t>(block_ >> 32),
                            static_cast<std::uint32_t>(stream_id_),
                            static_cast<std::uint32_t>(stream_id_ >> 32)},
                           key_);
      ++block_;
    }
    const std::uint64_t out =
        (std::uint64_t{buffer_[2 * lane_]} << 32) | buffer_[2 * lane_ + 1];
    lane_ ^= 1;
    return out;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller. Deviates come in pairs; the second of
  // each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  Key key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  Counter buffer_{};
  int lane_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rankaudit::random

#endif  // RANKAUDIT_RANDOM_HPP_
