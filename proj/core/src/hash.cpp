#include "qrp/hash.hpp"

#include <fmt/format.h>

namespace qrp {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

StableHasher::StableHasher(std::uint64_t seed) noexcept : state_(kFnvOffset ^ mix64(seed)) {}

StableHasher& StableHasher::update(std::string_view bytes) noexcept {
    for (unsigned char c : bytes) {
        state_ ^= c;
        state_ *= kFnvPrime;
    }
    return *this;
}

std::uint64_t StableHasher::digest() const noexcept { return mix64(state_); }

std::uint64_t stable_hash64(std::string_view bytes, std::uint64_t seed) noexcept {
    return StableHasher(seed).update(bytes).digest();
}

std::string to_hex(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace qrp
