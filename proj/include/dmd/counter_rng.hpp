#pragma once

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, counter), so results do not depend on evaluation order.

#include <array>
#include <cstdint>
#include <span>

namespace dmd::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
Counter philox4x32(Counter ctr, Key key) noexcept;

/// Maps 64 random bits to a double in (0, 1].
double to_unit_open_closed(std::uint32_t hi, std::uint32_t lo) noexcept;

/// Sequential-looking access to a keyed stream: draw k is a function of k only.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t stream) noexcept;

  /// Uniform in (0, 1].
  double uniform(std::uint64_t index) const noexcept;
  /// Standard normal, Box-Muller on the pair (index/2).
  double normal(std::uint64_t index) const noexcept;

 private:
  Key key_;
};

/// Gaussian increments keyed by (step, particle, coordinate).
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) noexcept;

  /// out[j] = scale * N(0,1) for coordinate j of `particle` at `step`.
  void fill(std::uint64_t step, std::uint32_t particle, double scale,
            std::span<double> out) const noexcept;
  double normal(std::uint64_t step, std::uint32_t particle, std::uint32_t coord) const noexcept;

 private:
  Key key_;
};

}  // namespace dmd::rng
