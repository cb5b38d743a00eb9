#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace wcv {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable seed derivation: folds each part into the running state with mix64.
// Used for every derived stream (init, shuffle, fold plans, per-cell seeds) so
// that replaying a run only needs the master seed.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = mix64(base);
  for (auto p : parts) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Stream tags keep independent consumers of one seed from sharing draws.
namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t shuffle = 2;
inline constexpr std::uint64_t synth_direction = 3;
inline constexpr std::uint64_t synth_samples = 4;
inline constexpr std::uint64_t fold_plan = 5;
inline constexpr std::uint64_t cell = 6;
inline constexpr std::uint64_t resample = 7;
} // namespace stream

} // namespace wcv
