#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace vvc::util {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

/// 64-bit FNV-1a, chainable through `seed`.
inline std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t k = 0; k < bytes; ++k) {
        h ^= p[k];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = kFnvOffset) {
    return fnv1a(s.data(), s.size(), seed);
}

}  // namespace vvc::util
