#include "minerscope/crypto.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <stdexcept>

namespace minerscope {

namespace {

void evp_digest(const EVP_MD* md, std::span<const std::uint8_t> data, std::uint8_t* out,
                unsigned expected_len) {
    unsigned len = 0;
    if (EVP_Digest(data.data(), data.size(), out, &len, md, nullptr) != 1 || len != expected_len)
        throw std::runtime_error("digest computation failed");
}

}  // namespace

Digest20 sha1(std::span<const std::uint8_t> data) {
    Digest20 out;
    evp_digest(EVP_sha1(), data, out.data(), out.size());
    return out;
}

Digest32 sha256(std::span<const std::uint8_t> data) {
    Digest32 out;
    evp_digest(EVP_sha256(), data, out.data(), out.size());
    return out;
}

std::string hex_digest(std::span<const std::uint8_t> digest) {
    return to_hex(digest);
}

}  // namespace minerscope
