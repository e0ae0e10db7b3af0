#pragma once

#include <cstdint>
#include <random>

namespace nsal {

using Rng = std::mt19937_64;

/// Index-based seed derivation (splitmix64 finaliser over seed and stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace nsal
