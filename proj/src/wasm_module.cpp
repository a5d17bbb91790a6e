#include "minerscope/wasm_module.hpp"

#include <algorithm>

namespace minerscope::wasm {

namespace {

constexpr std::uint8_t kMagic[4] = {0x00, 0x61, 0x73, 0x6d};
constexpr std::size_t kMaxLebBytes = 10;
constexpr std::uint8_t kCodeSectionId = 10;

}  // namespace

Leb128 decode_uleb128(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw ParseError("LEB128: empty input");
    std::uint64_t value = 0;
    std::size_t i = 0;
    for (;; ++i) {
        if (i >= bytes.size()) throw ParseError("LEB128: unterminated sequence");
        if (i >= kMaxLebBytes) throw ParseError("LEB128: value exceeds 64 bits");
        std::uint8_t byte = bytes[i];
        std::uint64_t chunk = byte & 0x7f;
        if (i == 9 && (chunk & ~0x01ull) != 0) throw ParseError("LEB128: value exceeds 64 bits");
        value |= chunk << (7 * i);
        if ((byte & 0x80) == 0) break;
    }
    return {value, i + 1};
}

Leb128 decode_sleb128(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw ParseError("LEB128: empty input");
    std::uint64_t value = 0;
    std::size_t i = 0;
    std::uint8_t byte = 0;
    for (;; ++i) {
        if (i >= bytes.size()) throw ParseError("LEB128: unterminated sequence");
        if (i >= kMaxLebBytes) throw ParseError("LEB128: value exceeds 64 bits");
        byte = bytes[i];
        std::uint64_t chunk = byte & 0x7f;
        // The 10th byte holds bit 63 plus sign extension only.
        if (i == 9 && chunk != 0x00 && chunk != 0x7f)
            throw ParseError("LEB128: value exceeds 64 bits");
        value |= chunk << (7 * i);
        if ((byte & 0x80) == 0) break;
    }
    std::size_t shift = 7 * (i + 1);
    if (shift < 64 && (byte & 0x40)) value |= ~0ull << shift;
    return {value, i + 1};
}

namespace {

class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t pos() const { return pos_; }

    std::uint8_t u8() {
        if (remaining() < 1) throw ParseError("truncated module");
        return data_[pos_++];
    }

    std::uint32_t u32le() {
        if (remaining() < 4) throw ParseError("truncated module");
        std::uint32_t v = data_[pos_] | data_[pos_ + 1] << 8 | data_[pos_ + 2] << 16 |
                          static_cast<std::uint32_t>(data_[pos_ + 3]) << 24;
        pos_ += 4;
        return v;
    }

    std::uint64_t uleb(const char* what) {
        auto r = decode_uleb128(data_.subspan(pos_));
        if (r.value > 0xffffffffull) throw ParseError(std::string(what) + ": size exceeds u32");
        pos_ += r.consumed;
        return r.value;
    }

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        if (remaining() < n) throw ParseError(std::string(what) + ": truncated");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace

WasmModuleParsed parse_module(std::span<const std::uint8_t> bytes) {
    Cursor cur(bytes);
    for (auto magic : kMagic)
        if (cur.u8() != magic) throw ParseError("bad magic: not a Wasm module");
    WasmModuleParsed parsed;
    parsed.version = cur.u32le();
    if (parsed.version != 1) throw ParseError("unsupported Wasm version");

    while (cur.remaining() > 0) {
        std::uint8_t id = cur.u8();
        std::size_t size = static_cast<std::size_t>(cur.uleb("section size"));
        auto section = cur.take(size, "section");
        if (id == 0) {
            ++parsed.custom_sections_skipped;
            continue;
        }
        if (id != kCodeSectionId) continue;

        Cursor code(section);
        std::uint64_t count = code.uleb("function count");
        for (std::uint64_t i = 0; i < count; ++i) {
            std::size_t body_size = static_cast<std::size_t>(code.uleb("function body size"));
            auto body = code.take(body_size, "function body");
            parsed.function_bodies.emplace_back(body.begin(), body.end());
        }
        if (code.remaining() != 0) throw ParseError("code section: trailing bytes");
    }
    return parsed;
}

namespace {

std::vector<const Bytes*> bodies_in_sha1_order(std::span<const WasmArtifact> artifacts) {
    std::vector<std::pair<std::string, const Bytes*>> keyed;
    for (const auto& artifact : artifacts)
        for (const auto& body : artifact.function_bodies)
            keyed.emplace_back(to_hex(sha1(body)), &body);
    if (keyed.empty()) throw ParseError("codebase hash requires at least one function body");
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<const Bytes*> out;
    out.reserve(keyed.size());
    for (const auto& [_, body] : keyed) out.push_back(body);
    return out;
}

}  // namespace

Digest32 codebase_hash(std::span<const WasmArtifact> artifacts) {
    Bytes merged = merged_codebase(artifacts);
    return sha256(merged);
}

Digest32 codebase_hash_of_digests(std::span<const WasmArtifact> artifacts) {
    Bytes concat;
    for (const auto* body : bodies_in_sha1_order(artifacts)) {
        auto digest = sha1(*body);
        concat.insert(concat.end(), digest.begin(), digest.end());
    }
    return sha256(concat);
}

Bytes merged_codebase(std::span<const WasmArtifact> artifacts) {
    Bytes merged;
    for (const auto* body : bodies_in_sha1_order(artifacts))
        merged.insert(merged.end(), body->begin(), body->end());
    return merged;
}

}  // namespace minerscope::wasm
