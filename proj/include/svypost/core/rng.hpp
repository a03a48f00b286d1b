#pragma once

#include <cstdint>
#include <random>

namespace svypost {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed for substream `index` of `master`. Substreams are order independent:
/// replication k always gets the same seed regardless of how many others run.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632BE59BD9B4E019ull));
}

/// Distinct purposes drawing from the same master seed.
enum class SeedPurpose : std::uint64_t {
  kReplicates = 1,
  kSampler = 2,
  kPopulation = 3,
  kSample = 4,
};

constexpr std::uint64_t purpose_seed(std::uint64_t master, SeedPurpose purpose) noexcept {
  return substream_seed(master ^ 0xA5A5A5A55A5A5A5Aull, static_cast<std::uint64_t>(purpose));
}

}  // namespace svypost
