#include <cstring>

#include "minerscope/crypto.hpp"

namespace minerscope {

namespace {

constexpr int kRounds = 24;

constexpr std::uint64_t kRoundConstants[kRounds] = {
    0x0000000000000001ull, 0x0000000000008082ull, 0x800000000000808aull, 0x8000000080008000ull,
    0x000000000000808bull, 0x0000000080000001ull, 0x8000000080008081ull, 0x8000000000008009ull,
    0x000000000000008aull, 0x0000000000000088ull, 0x0000000080008009ull, 0x000000008000000aull,
    0x000000008000808bull, 0x800000000000008bull, 0x8000000000008089ull, 0x8000000000008003ull,
    0x8000000000008002ull, 0x8000000000000080ull, 0x000000000000800aull, 0x800000008000000aull,
    0x8000000080008081ull, 0x8000000000008080ull, 0x0000000080000001ull, 0x8000000080008008ull};

constexpr int kRotations[25] = {0,  1,  62, 28, 27, 36, 44, 6,  55, 20, 3,  10, 43,
                                25, 39, 41, 45, 15, 21, 8,  18, 2,  61, 56, 14};

inline std::uint64_t rotl(std::uint64_t v, int n) {
    return n == 0 ? v : (v << n) | (v >> (64 - n));
}

void keccak_f1600(std::uint64_t state[25]) {
    for (int round = 0; round < kRounds; ++round) {
        // theta
        std::uint64_t c[5], d[5];
        for (int x = 0; x < 5; ++x)
            c[x] = state[x] ^ state[x + 5] ^ state[x + 10] ^ state[x + 15] ^ state[x + 20];
        for (int x = 0; x < 5; ++x) d[x] = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1);
        for (int i = 0; i < 25; ++i) state[i] ^= d[i % 5];

        // rho + pi
        std::uint64_t b[25];
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y)
                b[y + 5 * ((2 * x + 3 * y) % 5)] = rotl(state[x + 5 * y], kRotations[x + 5 * y]);

        // chi
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y)
                state[x + 5 * y] = b[x + 5 * y] ^ (~b[(x + 1) % 5 + 5 * y] & b[(x + 2) % 5 + 5 * y]);

        // iota
        state[0] ^= kRoundConstants[round];
    }
}

// 256-bit output: rate 1088 bits. pad_byte 0x01 is the pre-standard
// Keccak domain, 0x06 the FIPS 202 one.
Digest32 sponge256(std::span<const std::uint8_t> data, std::uint8_t pad_byte) {
    constexpr std::size_t kRate = 136;
    std::uint64_t state[25] = {};
    std::uint8_t block[kRate];

    std::size_t offset = 0;
    auto absorb = [&](const std::uint8_t* p) {
        for (std::size_t i = 0; i < kRate / 8; ++i) {
            std::uint64_t lane;
            std::memcpy(&lane, p + i * 8, 8);  // little-endian host
            state[i] ^= lane;
        }
        keccak_f1600(state);
    };

    while (data.size() - offset >= kRate) {
        absorb(data.data() + offset);
        offset += kRate;
    }
    std::size_t rest = data.size() - offset;
    std::memset(block, 0, sizeof(block));
    if (rest > 0) std::memcpy(block, data.data() + offset, rest);
    block[rest] = pad_byte;
    block[kRate - 1] |= 0x80;
    absorb(block);

    Digest32 out;
    std::memcpy(out.data(), state, out.size());
    return out;
}

}  // namespace

Digest32 keccak256(std::span<const std::uint8_t> data) {
    return sponge256(data, 0x01);
}

Digest32 sha3_256(std::span<const std::uint8_t> data) {
    return sponge256(data, 0x06);
}

}  // namespace minerscope
