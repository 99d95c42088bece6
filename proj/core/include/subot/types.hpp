#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace subot {

// Row-major so that one sample is contiguous in memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Deterministic seed derivation (splitmix64 finalizer over a running state).
/// Used to give every restart / class / stage its own reproducible stream.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

template <typename... Salts>
constexpr std::uint64_t derive_seed(std::uint64_t seed, Salts... salts) noexcept {
    ((seed = mix_seed(seed, static_cast<std::uint64_t>(salts))), ...);
    return seed;
}

}  // namespace subot
