#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace noarb {

// splitmix64 finalizer; used to derive independent per-path streams from a
// base seed and a counter.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t path_seed(std::uint64_t base, std::uint64_t index) {
  return mix_seed(mix_seed(base) ^ mix_seed(index + 0x632BE59BD9B4E019ULL));
}

using Engine = std::mt19937_64;

inline std::vector<double> standard_normals(Engine &engine, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(n);
  for (auto &z : out) {
    z = normal(engine);
  }
  return out;
}

} // namespace noarb
