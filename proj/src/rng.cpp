#include "psychoseed/rng.hpp"

#include <limits>

namespace psychoseed {

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::string_view> labels,
                          std::uint64_t index) noexcept {
    std::uint64_t h = mix64(seed);
    for (std::string_view label : labels) {
        // Length prefix keeps ("ab","c") and ("a","bc") apart.
        h = mix64(h ^ label.size());
        h = fnv1a64(label, h);
    }
    return mix64(h ^ mix64(index));
}

std::size_t Rng::index(std::size_t n) {
    // Rejection sampling on the top of the range to avoid modulo bias.
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return static_cast<std::size_t>(x % bound);
}

}  // namespace psychoseed
