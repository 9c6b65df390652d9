#pragma once

#include <cstdint>
#include <random>

#include "rwz/core.hpp"

namespace rwz {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Seed of stream `index` derived from `base`. Pure function of its inputs, so
// replicate streams do not depend on scheduling.
std::uint64_t split_seed(std::uint64_t base, std::uint64_t index);

Engine make_engine(std::uint64_t seed);

double uniform01(Engine& eng);

// Standard complex Gaussian, E|Z|^2 = 1.
cplx complex_normal(Engine& eng);

}  // namespace rwz
