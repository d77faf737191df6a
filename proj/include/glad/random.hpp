#pragma once

// Portable seeded randomness.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The distribution helpers below are implemented here rather than
// taken from <random> because the standard distributions are allowed to differ
// between library implementations; these give the same draws on every
// platform for a given seed.
//
// Sub-seeds: derive_seed(seed, a, b, ...) folds each tag into the running
// value with the SplitMix64 finalizer, so streams keyed by different tags are
// decorrelated and independent of the order in which they are created.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>

namespace glad {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// FNV-1a of a tag string, used to name streams.
constexpr std::uint64_t stream_tag(std::string_view name) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t s = mix64(seed);
    for (std::uint64_t t : tags) s = mix64(s ^ mix64(t));
    return s;
}

// Well-known stream tags.
inline constexpr std::uint64_t kStreamSynth = stream_tag("synth");
inline constexpr std::uint64_t kStreamFolds = stream_tag("folds");
inline constexpr std::uint64_t kStreamHoldout = stream_tag("holdout");
inline constexpr std::uint64_t kStreamBootstrap = stream_tag("bootstrap");
inline constexpr std::uint64_t kStreamNodes = stream_tag("nodes");

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), unbiased (rejection on the top of the range).
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal via the Marsaglia polar method (pairs cached).
    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Fisher-Yates shuffle driven by uniform_index.
    template <class T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace glad
