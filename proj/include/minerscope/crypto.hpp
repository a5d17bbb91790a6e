#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "minerscope/util.hpp"

namespace minerscope {

using Digest20 = std::array<std::uint8_t, 20>;
using Digest32 = std::array<std::uint8_t, 32>;

Digest20 sha1(std::span<const std::uint8_t> data);
Digest32 sha256(std::span<const std::uint8_t> data);

/// Keccak-256 as submitted to the SHA-3 contest (pad byte 0x01),
/// not the FIPS 202 variant. This is the hash Monero uses for
/// address checksums.
Digest32 keccak256(std::span<const std::uint8_t> data);

/// FIPS 202 SHA3-256 (pad byte 0x06) from the same sponge core.
Digest32 sha3_256(std::span<const std::uint8_t> data);

std::string hex_digest(std::span<const std::uint8_t> digest);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace minerscope
