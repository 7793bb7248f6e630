#pragma once

// Platform-stable hashing and random streams.
//
// std::mt19937_64 is fully specified by the standard, but the standard
// distributions are not, so the helpers below derive indices and reals
// from raw engine output directly.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace psychoseed {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// FNV-1a 64 over the bytes of `data`, starting from `basis`.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = kFnvOffset) noexcept {
    std::uint64_t h = basis;
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a stream seed from a base seed and an ordered list of labels
/// and indices, e.g. derive_seed(seed, {item_id, "sr"}, rep).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::string_view> labels,
                          std::uint64_t index = 0) noexcept;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t index(std::size_t n);

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Fisher-Yates shuffle.
    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::size_t>(last - first);
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = index(i);
            using std::swap;
            swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace psychoseed
