#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace trafficast {

using Rng = std::mt19937_64;

/// Derive an independent seed for a named pipeline stage from the root seed.
///
/// Every stage draws from its own generator so that running a stage alone
/// reproduces exactly what the full pipeline would have produced.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);

[[nodiscard]] inline Rng make_rng(std::uint64_t root, std::string_view stage) {
    return Rng(derive_seed(root, stage));
}

/// Uniform integer in [0, n). Unlike std::uniform_int_distribution the
/// sequence is identical across standard library implementations.
[[nodiscard]] std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
[[nodiscard]] double uniform01(Rng& rng);

/// Standard normal variate (Box-Muller, one value per call).
[[nodiscard]] double standard_normal(Rng& rng);

/// Fisher-Yates shuffle driven by uniform_index.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const auto j = uniform_index(rng, i);
        std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1), first + static_cast<std::ptrdiff_t>(j));
    }
}

}  // namespace trafficast
