#pragma once

#include <cstdint>
#include <random>

namespace fbsg {

// splitmix64 finalizer, used to decorrelate per-path seeds derived from a
// single run seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 path_rng(std::uint64_t run_seed, std::uint64_t path_index,
                                std::uint64_t stream = 0) {
  return std::mt19937_64(mix_seed(run_seed ^ mix_seed(path_index ^ mix_seed(stream))));
}

}  // namespace fbsg
