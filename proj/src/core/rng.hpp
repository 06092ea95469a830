#ifndef DDSEL_RNG_HPP
#define DDSEL_RNG_HPP

#include <cstdint>
#include <random>

namespace ddsel {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream derived from (seed, stream_id) so each epoch / each purpose gets an
// independent, regenerable generator.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream_id = 0) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ stream_id));
}

// Bounded draw with explicit arithmetic; std::uniform_int_distribution is
// implementation-defined and would tie outputs to a particular libstdc++.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return n == 0 ? 0 : rng() % n;
}

// Uniform in (0, 1]; never returns 0 so -log(u) stays finite.
inline double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53;
}

}  // namespace ddsel

#endif
