#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "minerscope/crypto.hpp"
#include "minerscope/util.hpp"

namespace minerscope {

/// Function name V8 assigns to unprofilable Wasm frames, recorded verbatim.
inline constexpr const char* kWasmUnnamed = "<WASM UNNAMED>";
/// script_id sentinel for frames that belong to no JavaScript script.
inline constexpr const char* kWasmScriptId = "<wasm>";
/// URL used for scripts delivered without one.
inline constexpr const char* kInlineUrl = "inline";

/// Crawl timeout plus grace; no valid record reports a longer load time.
inline constexpr double kMaxLoadMs = 30000.0 + 5000.0;

enum class ScriptContext { main_page, worker };
enum class WsDirection { sent, received };

struct FrameRef {
    std::string function_name;
    std::string script_id;

    bool is_wasm() const { return script_id == kWasmScriptId || function_name == kWasmUnnamed; }
    bool operator==(const FrameRef&) const = default;
};

/// Profiler samples aggregated per unique call stack. Frames are ordered
/// leaf first.
struct StackAggregate {
    std::vector<FrameRef> frames;
    std::uint64_t sample_count = 0;
    double total_ms = 0;

    bool operator==(const StackAggregate&) const = default;
};

struct ProfileTrace {
    double duration_ms = 0;
    std::vector<StackAggregate> stacks;

    bool operator==(const ProfileTrace&) const = default;
};

struct ScriptArtifact {
    std::string script_id;  // unique within the visit
    std::string url;        // absolute URL or kInlineUrl
    Digest32 source_hash{};  // digest of the source text, present even when source is dropped
    std::optional<std::string> source;
    ScriptContext context = ScriptContext::main_page;

    bool operator==(const ScriptArtifact&) const = default;
};

struct WasmArtifact {
    std::string origin_script_id;
    std::vector<Bytes> function_bodies;

    bool operator==(const WasmArtifact&) const = default;
};

struct WsFrame {
    std::string endpoint;
    WsDirection direction = WsDirection::sent;
    std::string payload;  // UTF-8 text, or raw bytes when binary
    bool binary = false;
    double at_ms = 0;  // milliseconds since navigation

    bool operator==(const WsFrame&) const = default;
};

/// Complete telemetry of one page visit. Immutable after construction;
/// safe to share across threads.
struct VisitRecord {
    std::string site;
    std::optional<std::uint64_t> rank;
    Timestamp visited_at{};
    double load_ms = 0;
    std::vector<ScriptArtifact> scripts;
    std::vector<WasmArtifact> wasm_modules;
    std::optional<ProfileTrace> profile;
    std::vector<WsFrame> ws_frames;
    std::uint32_t worker_count = 0;
    std::uint32_t reported_cores = 1;
    bool partial = false;  // navigation timed out before the load event

    bool operator==(const VisitRecord&) const = default;
};

struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CodecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Checks all type invariants; throws InvariantError naming the offending
/// field path.
void validate(const VisitRecord& record);

/// One newline-free UTF-8 line of the archive format. Validates first.
std::string encode_visit(const VisitRecord& record);

/// Parses and validates one archive line.
VisitRecord decode_visit(std::string_view line);

Digest32 script_source_hash(std::string_view source);

}  // namespace minerscope
