#pragma once

#include <cstdint>
#include <random>

namespace dpfpca {

// splitmix64; used to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for stream (id_a, id_b) under a master seed. Streams derived this way
// are used for parallel chains / replicates so that results do not depend on
// execution order.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t id_a,
                                        std::uint64_t id_b = 0) {
  std::uint64_t s = splitmix64(master ^ splitmix64(id_a));
  return splitmix64(s ^ splitmix64(id_b + 0x51ed270b7a53c9bbULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t id_a, std::uint64_t id_b = 0) {
  return Rng(derive_stream_seed(master, id_a, id_b));
}

}  // namespace dpfpca
