#include <doctest.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>

#include "minerscope/crypto.hpp"
#include "support/gen.hpp"

using namespace minerscope;

namespace {

// Keccak-f[1600] written independently of the production code: round
// constants come from the LFSR definition and rotation offsets from the
// triangular-number walk, so a transcription error in either table cannot
// go unnoticed.
namespace oracle {

using State = std::array<std::array<std::uint64_t, 5>, 5>;  // [x][y]

std::uint64_t rotl(std::uint64_t v, unsigned r) {
    return r == 0 ? v : (v << r) | (v >> (64 - r));
}

bool rc_bit(std::uint8_t& lfsr) {
    bool out = lfsr & 1;
    bool high = lfsr & 0x80;
    lfsr = static_cast<std::uint8_t>(lfsr << 1);
    if (high) lfsr ^= 0x71;  // x^8 + x^6 + x^5 + x^4 + 1
    return out;
}

std::array<std::uint64_t, 24> round_constants() {
    std::array<std::uint64_t, 24> rc{};
    std::uint8_t lfsr = 0x01;
    for (auto& c : rc)
        for (int j = 0; j < 7; ++j)
            if (rc_bit(lfsr)) c |= 1ULL << ((1 << j) - 1);
    return rc;
}

std::array<std::array<unsigned, 5>, 5> rho_offsets() {
    std::array<std::array<unsigned, 5>, 5> r{};
    unsigned x = 1, y = 0;
    for (unsigned t = 0; t < 24; ++t) {
        r[x][y] = (t + 1) * (t + 2) / 2 % 64;
        unsigned ny = (2 * x + 3 * y) % 5;
        x = y;
        y = ny;
    }
    return r;
}

void permute(State& a) {
    static const auto kRc = round_constants();
    static const auto kRot = rho_offsets();
    for (int round = 0; round < 24; ++round) {
        std::array<std::uint64_t, 5> c{}, d{};
        for (int x = 0; x < 5; ++x) c[x] = a[x][0] ^ a[x][1] ^ a[x][2] ^ a[x][3] ^ a[x][4];
        for (int x = 0; x < 5; ++x) d[x] = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1);
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y) a[x][y] ^= d[x];
        State b{};
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y) b[y][(2 * x + 3 * y) % 5] = rotl(a[x][y], kRot[x][y]);
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y)
                a[x][y] = b[x][y] ^ (~b[(x + 1) % 5][y] & b[(x + 2) % 5][y]);
        a[0][0] ^= kRc[round];
    }
}

Digest32 hash256(std::span<const std::uint8_t> data, std::uint8_t pad) {
    constexpr std::size_t kRate = 136;
    State st{};
    auto absorb = [&](const std::uint8_t* p) {
        for (std::size_t i = 0; i < kRate / 8; ++i) {
            std::uint64_t lane = 0;
            for (int b = 7; b >= 0; --b) lane = lane << 8 | p[i * 8 + b];
            st[i % 5][i / 5] ^= lane;
        }
        permute(st);
    };
    std::size_t off = 0;
    while (data.size() - off >= kRate) {
        absorb(data.data() + off);
        off += kRate;
    }
    std::array<std::uint8_t, kRate> block{};
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(off), data.end(), block.begin());
    block[data.size() - off] ^= pad;
    block[kRate - 1] ^= 0x80;
    absorb(block.data());
    Digest32 out{};
    for (std::size_t i = 0; i < 4; ++i)
        for (int b = 0; b < 8; ++b)
            out[i * 8 + static_cast<std::size_t>(b)] =
                static_cast<std::uint8_t>(st[i % 5][i / 5] >> (8 * b));
    return out;
}

}  // namespace oracle

Digest32 openssl_sha3_256(std::span<const std::uint8_t> data) {
    Digest32 out{};
    unsigned int len = 0;
    REQUIRE(EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha3_256(), nullptr) == 1);
    REQUIRE(len == out.size());
    return out;
}

}  // namespace

TEST_CASE("sha1 and sha256 known answers") {
    CHECK(hex_digest(sha1(as_bytes("abc"))) == "a9993e364706816aba3e25717850c26c9cd0d89d");
    CHECK(hex_digest(sha1(as_bytes(""))) == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
    CHECK(hex_digest(sha256(as_bytes("abc"))) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(hex_digest(sha256(as_bytes(""))) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("keccak256 known answers (pre-standard padding)") {
    CHECK(hex_digest(keccak256(as_bytes(""))) ==
          "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470");
    CHECK(hex_digest(keccak256(as_bytes("abc"))) ==
          "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45");
}

TEST_CASE("sha3_256 known answers (FIPS padding)") {
    CHECK(hex_digest(sha3_256(as_bytes(""))) ==
          "a7ffc6f8bf1ed76651c14756a061d662f580ff4de43b49fa82d80a4b80f8434a");
    CHECK(hex_digest(sha3_256(as_bytes("abc"))) ==
          "3a985da74fe225b2045c172d6bd390bd855f086e3e9d525b46bfe24511431532");
}

TEST_CASE("the two padding variants differ on every tested input") {
    gen::Rng rng(7101);
    for (int i = 0; i < 20; ++i) {
        Bytes b = gen::blob(rng, 0, 200);
        CHECK(keccak256(b) != sha3_256(b));
    }
}

TEST_CASE("sponge agrees with an independently derived implementation") {
    gen::Rng rng(7102);
    // Lengths straddling the 136-byte rate boundary catch padding bugs.
    for (std::size_t len : {0u, 1u, 7u, 55u, 135u, 136u, 137u, 200u, 271u, 272u, 273u, 500u}) {
        Bytes b = gen::blob(rng, len, len);
        CHECK(keccak256(b) == oracle::hash256(b, 0x01));
        CHECK(sha3_256(b) == oracle::hash256(b, 0x06));
    }
    for (int i = 0; i < 100; ++i) {
        Bytes b = gen::blob(rng, 0, 400);
        CHECK(keccak256(b) == oracle::hash256(b, 0x01));
        CHECK(sha3_256(b) == oracle::hash256(b, 0x06));
    }
}

TEST_CASE("sha3_256 agrees with OpenSSL") {
    gen::Rng rng(7103);
    for (int i = 0; i < 100; ++i) {
        Bytes b = gen::blob(rng, 0, 400);
        CHECK(sha3_256(b) == openssl_sha3_256(b));
    }
}

TEST_CASE("hex_digest formats lowercase") {
    Digest20 d{};
    d[0] = 0xab;
    d[19] = 0x01;
    std::string h = hex_digest(d);
    CHECK(h.size() == 40);
    CHECK(h.substr(0, 2) == "ab");
    CHECK(h.substr(38) == "01");
}
