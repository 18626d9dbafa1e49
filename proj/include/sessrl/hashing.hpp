#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <string_view>

namespace sessrl {

/// 64-bit FNV-1a. Used for artifact fingerprints and the train/test split;
/// stable across platforms and releases by construction.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t state = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        state ^= p[i];
        state *= 0x100000001b3ULL;
    }
    return state;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t state = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), state);
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

/// Derives a stage-specific seed from the experiment seed, so one global seed
/// pins every stage without reusing the same stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
    std::uint64_t h = fnv1a64(&seed, sizeof seed);
    return fnv1a64(stage, h);
}

} // namespace sessrl
