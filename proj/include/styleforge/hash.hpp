// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

namespace styleforge {

// 64-bit FNV-1a. Stable across platforms, used for provenance hashes that get
// written into artifacts and for the classifier's n-gram buckets.
class Fnv1a {
public:
    void update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
    }
    void update(std::span<const std::byte> bytes) {
        for (std::byte b : bytes) {
            state_ ^= static_cast<std::uint8_t>(b);
            state_ *= 0x100000001b3ULL;
        }
    }
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view bytes) {
    Fnv1a h;
    h.update(bytes);
    return h.digest();
}

inline std::string hex_digest(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace styleforge
