#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

// Distribution helpers with a fixed algorithm: the std:: distributions are
// implementation-defined, which would make seeded outputs differ across
// standard libraries.
namespace gridsync::detail {

inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t range) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t r = gen();
    while (r >= limit) r = gen();
    return r % range;
}

template <class T>
void shuffle(std::vector<T>& items, std::mt19937_64& gen) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(bounded(gen, i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace gridsync::detail
