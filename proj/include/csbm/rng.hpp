#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace csbm {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a tuple of
/// counters (domain tag, cell, trial, row, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(master);
  for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(master, keys));
}

// Stream domain tags.
namespace stream {
inline constexpr std::uint64_t kLabels = 1;
inline constexpr std::uint64_t kEdgeRow = 2;
inline constexpr std::uint64_t kAttribute = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kTrial = 5;
}  // namespace stream

}  // namespace csbm
