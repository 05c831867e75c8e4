#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sentiment {

// The standard library's shuffle and real distributions are
// implementation-defined; these hand-rolled mappings keep every seeded
// draw reproducible across toolchains.

inline double canonical_unit(std::mt19937& rng) {
    return static_cast<double>(rng()) * (1.0 / 4294967296.0);  // [0, 1)
}

inline double uniform_in(std::mt19937& rng, double lo, double hi) {
    return lo + (hi - lo) * canonical_unit(rng);
}

template <typename T>
void fisher_yates(std::vector<T>& v, std::mt19937& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace sentiment
