#include "dmd/counter_rng.hpp"

#include <cmath>
#include <numbers>

namespace dmd::rng {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// Stream tags keep the noise stream disjoint from generator streams.
constexpr std::uint32_t kNoiseTag = 0x6E6F6973u;

Key make_key(std::uint64_t seed, std::uint32_t stream) noexcept {
  return {static_cast<std::uint32_t>(seed),
          static_cast<std::uint32_t>(seed >> 32) ^ (stream * 0x85EBCA6Bu + 0x27D4EB2Fu)};
}

// Box-Muller on one Philox block: two normals.
std::array<double, 2> box_muller(const Counter& r) noexcept {
  const double u1 = to_unit_open_closed(r[0], r[1]);
  const double u2 = to_unit_open_closed(r[2], r[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

Counter philox4x32(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

double to_unit_open_closed(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  // 53 random mantissa bits, shifted off zero.
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint32_t stream) noexcept
    : key_(make_key(seed, stream)) {}

double CounterRng::uniform(std::uint64_t index) const noexcept {
  const Counter r = philox4x32(
      {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0u, 0x756E6966u},
      key_);
  return to_unit_open_closed(r[0], r[1]);
}

double CounterRng::normal(std::uint64_t index) const noexcept {
  const std::uint64_t pair = index / 2;
  const Counter r = philox4x32(
      {static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(pair >> 32), 1u, 0x6E6F726Du},
      key_);
  return box_muller(r)[index % 2];
}

NoiseStream::NoiseStream(std::uint64_t seed) noexcept : key_(make_key(seed, kNoiseTag)) {}

void NoiseStream::fill(std::uint64_t step, std::uint32_t particle, double scale,
                       std::span<double> out) const noexcept {
  for (std::size_t j = 0; j < out.size(); j += 2) {
    const Counter r =
        philox4x32({static_cast<std::uint32_t>(j / 2), particle, static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(step >> 32)},
                   key_);
    const auto g = box_muller(r);
    out[j] = scale * g[0];
    if (j + 1 < out.size()) out[j + 1] = scale * g[1];
  }
}

double NoiseStream::normal(std::uint64_t step, std::uint32_t particle,
                           std::uint32_t coord) const noexcept {
  const Counter r = philox4x32({coord / 2, particle, static_cast<std::uint32_t>(step),
                                static_cast<std::uint32_t>(step >> 32)},
                               key_);
  return box_muller(r)[coord % 2];
}

}  // namespace dmd::rng
