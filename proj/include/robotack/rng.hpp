#pragma once

#include <cstdint>
#include <random>

namespace robotack {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used as a counter-based hash so any (seed, run,
// stream) triple maps to an independent generator seed without coordination.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Named substreams of a single run.
enum class Stream : std::uint64_t {
  Scenario = 1,
  Camera = 2,
  Range = 3,
  Attack = 4,
  Training = 5,
};

constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t run_index) {
  return splitmix64(splitmix64(base_seed) ^ (run_index * 0xD1B54A32D192ED03ull));
}

inline Rng make_stream(std::uint64_t run_seed, Stream stream) {
  return Rng(splitmix64(run_seed ^ splitmix64(static_cast<std::uint64_t>(stream))));
}

}  // namespace robotack
