// Seed fan-out and initialization draws. One master seed is hashed with a
// label (and optional indices) so each consumer gets an independent stream.
#ifndef SAKT_RNG_HPP
#define SAKT_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace sakt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  std::uint64_t h = master;
  for (char c : label) {
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
  }
  return splitmix64(h);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t h = derive_seed(master, label);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return h;
}

// Normal draw rejected outside two standard deviations.
template <class Rng>
double truncated_normal(Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (;;) {
    double z = dist(rng);
    if (std::abs(z) <= 2.0 * stddev) return z;
  }
}

}  // namespace sakt

#endif  // SAKT_RNG_HPP
