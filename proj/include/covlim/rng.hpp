// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace covlim {

/// Philox4x64-10 counter-based generator (Salmon et al., SC'11).
///
/// The key is the experiment's master seed and the third counter word is a
/// stream id, so every path owns an independent, reproducible stream that does
/// not depend on scheduling or thread count.
class Philox4x64 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  Philox4x64(std::uint64_t seed, std::uint64_t stream) noexcept : key_{seed, 0}, stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (cursor_ == 4) refill();
    return buffer_[cursor_++];
  }

  /// Raw bijection; exposed for known-answer tests.
  static Block bijection(Block ctr, Key key) noexcept;

  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill() noexcept;

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int cursor_ = 4;
};

enum class NoiseKind { Gaussian, Rademacher };

/// One path's random source: standard normals (ziggurat) plus the
/// standardized-noise choice used by the Markov chains.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(seed, stream) {}

  double normal() { return normal_(engine_); }

  /// Zero-mean, unit-variance draw of the requested kind.
  double standardized(NoiseKind kind) {
    if (kind == NoiseKind::Rademacher) return (engine_() >> 63) ? 1.0 : -1.0;
    return normal();
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t stream() const noexcept { return engine_.stream(); }

 private:
  Philox4x64 engine_;
  boost::random::normal_distribution<double> normal_;
};

/// Stream ids are split into a purpose tag (upper 16 bits) and a path index so
/// that two ensembles in one experiment never share draws unless asked to.
constexpr std::uint64_t stream_id(std::uint16_t purpose, std::uint64_t index) noexcept {
  return (static_cast<std::uint64_t>(purpose) << 48) | (index & 0x0000FFFFFFFFFFFFull);
}

namespace stream_purpose {
inline constexpr std::uint16_t kNetwork = 1;
inline constexpr std::uint16_t kCovChain = 2;
inline constexpr std::uint16_t kCorrChain = 3;
inline constexpr std::uint16_t kShapedChain = 4;
inline constexpr std::uint16_t kCovSde = 5;
inline constexpr std::uint16_t kQSde = 6;
inline constexpr std::uint16_t kOracle = 7;
}  // namespace stream_purpose

}  // namespace covlim
