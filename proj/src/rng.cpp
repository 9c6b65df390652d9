#include "rwz/rng.hpp"

#include <cmath>

namespace rwz {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(splitmix64(base) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

Engine make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  return Engine(seq);
}

double uniform01(Engine& eng) {
  // 53 random bits, never 1.0
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

cplx complex_normal(Engine& eng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  double re = n(eng);
  double im = n(eng);
  return {re, im};
}

}  // namespace rwz
