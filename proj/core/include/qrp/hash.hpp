#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace qrp {

/// Seeded 64-bit FNV-1a with a splitmix64 finalizer. Stable across
/// platforms and runs; used for feature hashing, request fingerprints and
/// config hashes.
[[nodiscard]] std::uint64_t stable_hash64(std::string_view bytes, std::uint64_t seed = 0) noexcept;

/// Incremental form of stable_hash64. Feeding the same bytes in any
/// chunking yields the same digest.
class StableHasher {
public:
    explicit StableHasher(std::uint64_t seed = 0) noexcept;
    StableHasher& update(std::string_view bytes) noexcept;
    [[nodiscard]] std::uint64_t digest() const noexcept;

private:
    std::uint64_t state_;
};

/// Lowercase, zero-padded 16-character hex rendering.
[[nodiscard]] std::string to_hex(std::uint64_t value);

}  // namespace qrp
