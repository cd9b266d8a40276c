// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace cofrag {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the
/// output is a pure function of (counter, key).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter apply(Counter ctr, Key key) {
    ctr = round(ctr, key);
    for (int r = 1; r < 10; ++r) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Counter-based random stream. A stream is identified by (seed, stream, lane);
/// distinct identifiers give independent sequences and the sequence of a
/// given identifier never repeats within 2^64 blocks, so it cannot run out.
///
/// Replica `r` of an experiment uses stream `r`; a coupled pair shares one
/// stream. `lane` separates auxiliary randomness (e.g. bootstrap draws) from
/// the simulation itself.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint32_t stream, std::uint32_t lane = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream),
        lane_(lane) {}

  std::uint64_t next_u64() {
    if (buffered_ == 0) refill();
    return buffer_[--buffered_];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_positive() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  /// Exponential waiting time with the given positive rate.
  double exponential(double rate) { return -std::log(uniform_positive()) / rate; }

  /// Uniform integer in [0, n). Uses 64-bit multiply-shift; bias is < n / 2^64.
  std::uint64_t below(std::uint64_t n) {
    __extension__ using u128 = unsigned __int128;
    const u128 wide = static_cast<u128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  /// Number of 64-bit words consumed so far (the stream cursor).
  std::uint64_t cursor() const { return 2 * block_ - buffered_; }

 private:
  void refill() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32), stream_, lane_};
    const auto out = Philox4x32::apply(ctr, key_);
    // Stored in reverse so that next_u64() pops word 0 first.
    buffer_[1] = (std::uint64_t{out[1]} << 32) | out[0];
    buffer_[0] = (std::uint64_t{out[3]} << 32) | out[2];
    buffered_ = 2;
    ++block_;
  }

  Philox4x32::Key key_;
  std::uint32_t stream_;
  std::uint32_t lane_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

}  // namespace cofrag
