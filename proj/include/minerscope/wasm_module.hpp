#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "minerscope/crypto.hpp"
#include "minerscope/telemetry.hpp"
#include "minerscope/util.hpp"

namespace minerscope::wasm {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Leb128 {
    std::uint64_t value = 0;  // for signed decodes, the two's-complement bit pattern
    std::size_t consumed = 0;
};

/// Unsigned LEB128, at most 10 bytes (64-bit range). Throws ParseError on
/// an unterminated sequence or overflow.
Leb128 decode_uleb128(std::span<const std::uint8_t> bytes);

/// Signed LEB128 with the same limits; value holds the sign-extended result.
Leb128 decode_sleb128(std::span<const std::uint8_t> bytes);

struct WasmModuleParsed {
    std::uint32_t version = 0;
    std::vector<Bytes> function_bodies;  // code-section entries, locals + expression bytes
    std::size_t custom_sections_skipped = 0;
};

/// Walks sections by id and declared size; extracts each code-section
/// function body verbatim. Contents of all other sections are skipped.
WasmModuleParsed parse_module(std::span<const std::uint8_t> bytes);

/// Identity of a Wasm code base: every function body is hashed with SHA-1,
/// bodies are concatenated in ascending hex-SHA-1 order, and the
/// concatenation is hashed with SHA-256. Duplicate bodies are kept.
Digest32 codebase_hash(std::span<const WasmArtifact> artifacts);

/// Variant that concatenates the 20-byte SHA-1 digests instead of the
/// bodies themselves; kept for comparison runs.
Digest32 codebase_hash_of_digests(std::span<const WasmArtifact> artifacts);

/// All function bodies of the artifacts concatenated in the codebase_hash
/// order; the merged per-site Wasm sample used by the similarity analysis.
Bytes merged_codebase(std::span<const WasmArtifact> artifacts);

}  // namespace minerscope::wasm
