// SPDX-License-Identifier: Apache-2.0
#ifndef MKTDIFF_RNG_HPP
#define MKTDIFF_RNG_HPP

/**
 * @file rng.hpp
 * @brief Counter-based random number streams (Philox4x32-10).
 *
 * Every consumer of randomness in this project draws from a Stream keyed by
 * (seed, stream_id).  Streams with distinct ids are statistically independent
 * and can be regenerated in isolation, which is what makes scenario-level
 * reproducibility possible: re-running stream (seed, k) always yields the
 * same draws regardless of what other streams were consumed.
 *
 * Reference: Salmon et al., "Parallel random numbers: as easy as 1, 2, 3",
 * SC 2011.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace mktdiff::rng {

namespace detail {

inline constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
inline constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

/// One 128-bit Philox4x32-10 block: counter -> 4 pseudo-random words.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mul_hi_lo(detail::kPhiloxM4x32A, ctr[0], hi0, lo0);
    detail::mul_hi_lo(detail::kPhiloxM4x32B, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += detail::kPhiloxW32A;
    key[1] += detail::kPhiloxW32B;
  }
  return ctr;
}

/**
 * @brief A deterministic stream of random numbers keyed by (seed, stream_id).
 *
 * The 128-bit Philox counter is laid out as
 *   [block_lo, block_hi, stream_lo, stream_hi]
 * so each stream owns 2^64 blocks of four 32-bit words.
 */
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream_id)),
        stream_hi_(static_cast<std::uint32_t>(stream_id >> 32)) {}

  std::uint32_t next_u32() {
    if (word_pos_ == 4) refill();
    return block_[word_pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1]; safe as an argument of log().
  double next_double_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pairs are cached).
  double next_gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_double_pos();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  void fill_gaussian(std::span<double> out) {
    for (double& v : out) v = next_gaussian();
  }

  /// Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t rem = (~std::uint64_t{0} % n + 1) % n;  // 2^64 mod n
    const std::uint64_t limit = ~std::uint64_t{0} - rem;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v > limit);
    return v % n;
  }

 private:
  void refill() {
    block_ = philox4x32({block_lo_, block_hi_, stream_lo_, stream_hi_}, key_);
    if (++block_lo_ == 0) ++block_hi_;
    word_pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint32_t block_lo_ = 0, block_hi_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int word_pos_ = 4;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace mktdiff::rng

#endif  // MKTDIFF_RNG_HPP
