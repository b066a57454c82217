#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace plastica {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a root seed and a path of
/// integer tags, e.g. derive_seed(seed, {kLabels, task}).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(root);
    for (auto p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

// Stream tags, so that different consumers of one seed never share draws.
namespace stream_tag {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kRandomLabels = 2;
inline constexpr std::uint64_t kLabelNoise = 3;
inline constexpr std::uint64_t kClassOrder = 4;
inline constexpr std::uint64_t kPermutation = 5;
inline constexpr std::uint64_t kShuffle = 6;
inline constexpr std::uint64_t kSubset = 7;
inline constexpr std::uint64_t kShrinkPerturb = 8;
inline constexpr std::uint64_t kRedo = 9;
inline constexpr std::uint64_t kTheory = 10;
}  // namespace stream_tag

}  // namespace plastica
