#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "revs/errors.hpp"

namespace revs::rng {

using Engine = std::mt19937_64;

// Draws are built from raw engine output only. std::uniform_real_distribution
// and friends are implementation-defined, which would break byte-identical
// reports across toolchains.
inline double uniform(Engine& g, double lo, double hi) {
    const double u = static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0,1)
    return lo + (hi - lo) * u;
}

inline std::int64_t uniform_int(Engine& g, std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw DataError("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1u;
    return lo + static_cast<std::int64_t>(g() % span);
}

// Partial Fisher-Yates; result sorted ascending so downstream iteration
// order never depends on shuffle internals.
template <class T>
std::vector<T> sample_without_replacement(Engine& g, std::vector<T> pool, std::size_t k) {
    if (k > pool.size()) throw DataError("sample_without_replacement: k exceeds pool size");
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(
            uniform_int(g, static_cast<std::int64_t>(i), static_cast<std::int64_t>(pool.size()) - 1));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace revs::rng
