#include "minerscope/telemetry.hpp"

#include <cmath>
#include <unordered_set>

#include <json.hpp>

namespace minerscope {

using nlohmann::json;

Digest32 script_source_hash(std::string_view source) {
    return sha256(as_bytes(source));
}

namespace {

[[noreturn]] void invariant_fail(const std::string& path, const std::string& what) {
    throw InvariantError(path + ": " + what);
}

void validate_profile(const ProfileTrace& profile, const VisitRecord& record,
                      const std::unordered_set<std::string>& script_ids) {
    if (!(profile.duration_ms > 0)) invariant_fail("profile.duration_ms", "must be positive");
    double total = 0;
    for (std::size_t i = 0; i < profile.stacks.size(); ++i) {
        const auto& stack = profile.stacks[i];
        std::string path = "profile.stacks[" + std::to_string(i) + "]";
        if (stack.frames.empty()) invariant_fail(path + ".frames", "must be non-empty");
        if (stack.total_ms < 0) invariant_fail(path + ".total_ms", "must be non-negative");
        if ((stack.total_ms == 0) != (stack.sample_count == 0))
            invariant_fail(path, "total_ms must be zero exactly when sample_count is zero");
        for (std::size_t j = 0; j < stack.frames.size(); ++j) {
            const auto& frame = stack.frames[j];
            if (frame.script_id != kWasmScriptId && !script_ids.contains(frame.script_id))
                invariant_fail(path + ".frames[" + std::to_string(j) + "].script_id",
                               "references unknown script '" + frame.script_id + "'");
        }
        total += stack.total_ms;
    }
    double cap = profile.duration_ms * record.reported_cores;
    if (total > cap * (1 + 1e-9) + 1e-6)
        invariant_fail("profile.stacks",
                       "total time " + std::to_string(total) + " ms exceeds duration x cores");
}

}  // namespace

void validate(const VisitRecord& record) {
    if (record.site.empty()) invariant_fail("site", "must be non-empty");
    if (record.rank && *record.rank == 0) invariant_fail("rank", "must be positive");
    if (record.reported_cores < 1) invariant_fail("reported_cores", "must be at least 1");
    if (record.load_ms < 0) invariant_fail("load_ms", "must be non-negative");
    if (record.load_ms > kMaxLoadMs)
        invariant_fail("load_ms", "exceeds crawl timeout plus grace");

    std::unordered_set<std::string> script_ids;
    for (std::size_t i = 0; i < record.scripts.size(); ++i) {
        const auto& script = record.scripts[i];
        std::string path = "scripts[" + std::to_string(i) + "]";
        if (script.script_id.empty()) invariant_fail(path + ".script_id", "must be non-empty");
        if (!script_ids.insert(script.script_id).second)
            invariant_fail(path + ".script_id", "duplicate id '" + script.script_id + "'");
        if (script.url.empty()) invariant_fail(path + ".url", "must be non-empty");
        if (script.source && script_source_hash(*script.source) != script.source_hash)
            invariant_fail(path + ".source_hash", "does not match source");
    }

    for (std::size_t i = 0; i < record.wasm_modules.size(); ++i) {
        if (record.wasm_modules[i].function_bodies.empty())
            invariant_fail("wasm_modules[" + std::to_string(i) + "].function_bodies",
                           "must be non-empty");
    }

    if (record.profile) validate_profile(*record.profile, record, script_ids);

    for (std::size_t i = 0; i < record.ws_frames.size(); ++i) {
        const auto& frame = record.ws_frames[i];
        std::string path = "ws_frames[" + std::to_string(i) + "]";
        if (frame.endpoint.empty()) invariant_fail(path + ".endpoint", "must be non-empty");
        if (frame.at_ms < 0) invariant_fail(path + ".at_ms", "must be non-negative");
    }
}

namespace {

json digest_to_json(const Digest32& digest) {
    return to_hex(digest);
}

Digest32 digest_from_json(const json& j, const std::string& path) {
    if (!j.is_string()) throw CodecError(path + ": expected hex string");
    Bytes raw;
    try {
        raw = from_hex(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw CodecError(path + ": " + e.what());
    }
    Digest32 out;
    if (raw.size() != out.size()) throw CodecError(path + ": expected 32-byte digest");
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

json frame_to_json(const WsFrame& frame) {
    json j{{"endpoint", frame.endpoint},
           {"direction", frame.direction == WsDirection::sent ? "sent" : "received"},
           {"at_ms", frame.at_ms}};
    if (frame.binary) {
        j["payload"] = base64_encode(
            {reinterpret_cast<const std::uint8_t*>(frame.payload.data()), frame.payload.size()});
        j["payload_encoding"] = "base64";
    } else {
        if (!is_valid_utf8(frame.payload))
            throw CodecError("ws_frames: text payload is not valid UTF-8");
        j["payload"] = frame.payload;
        j["payload_encoding"] = "text";
    }
    return j;
}

const json& require(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw CodecError(path.empty() ? std::string("missing required field: ") + key
                                                     : path + ": missing required field: " + key);
    return *it;
}

template <typename T>
T number_field(const json& j, const std::string& path, bool allow_zero = true) {
    if (j.is_number_unsigned() || (j.is_number_integer() && j.template get<std::int64_t>() >= 0) ||
        (j.is_number_float() && j.template get<double>() >= 0)) {
        T v = j.template get<T>();
        if (!allow_zero && v == 0) throw CodecError(path + ": must be positive");
        return v;
    }
    throw CodecError(path + ": must be a non-negative number");
}

}  // namespace

std::string encode_visit(const VisitRecord& record) {
    validate(record);

    json j;
    j["site"] = record.site;
    if (record.rank) j["rank"] = *record.rank;
    j["visited_at"] = format_rfc3339(record.visited_at);
    j["load_ms"] = record.load_ms;
    j["worker_count"] = record.worker_count;
    j["reported_cores"] = record.reported_cores;
    j["partial"] = record.partial;

    auto& scripts = j["scripts"] = json::array();
    for (const auto& script : record.scripts) {
        json s{{"script_id", script.script_id},
               {"url", script.url},
               {"source_hash", digest_to_json(script.source_hash)},
               {"context", script.context == ScriptContext::worker ? "worker" : "main_page"}};
        if (script.source) {
            if (!is_valid_utf8(*script.source))
                throw CodecError("scripts: source of '" + script.script_id +
                                 "' is not valid UTF-8");
            s["source"] = *script.source;
        }
        scripts.push_back(std::move(s));
    }

    auto& wasm = j["wasm_modules"] = json::array();
    for (const auto& artifact : record.wasm_modules) {
        json bodies = json::array();
        for (const auto& body : artifact.function_bodies) bodies.push_back(base64_encode(body));
        wasm.push_back(
            json{{"origin_script_id", artifact.origin_script_id}, {"function_bodies", bodies}});
    }

    if (record.profile) {
        json stacks = json::array();
        for (const auto& stack : record.profile->stacks) {
            json frames = json::array();
            for (const auto& frame : stack.frames)
                frames.push_back(json{{"function_name", frame.function_name},
                                      {"script_id", frame.script_id}});
            stacks.push_back(json{{"frames", std::move(frames)},
                                  {"sample_count", stack.sample_count},
                                  {"total_ms", stack.total_ms}});
        }
        j["profile"] =
            json{{"duration_ms", record.profile->duration_ms}, {"stacks", std::move(stacks)}};
    }

    auto& frames = j["ws_frames"] = json::array();
    for (const auto& frame : record.ws_frames) frames.push_back(frame_to_json(frame));

    return j.dump();
}

namespace {
VisitRecord decode_visit_impl(std::string_view line);
}

VisitRecord decode_visit(std::string_view line) {
    try {
        return decode_visit_impl(line);
    } catch (const json::exception& e) {
        // Wrong JSON types surface as nlohmann exceptions; report them uniformly.
        throw CodecError(std::string("malformed archive line: ") + e.what());
    }
}

namespace {

VisitRecord decode_visit_impl(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw CodecError(std::string("malformed archive line: ") + e.what());
    }
    if (!j.is_object()) throw CodecError("archive line is not an object");

    VisitRecord record;
    record.site = require(j, "site", "").get<std::string>();
    if (auto it = j.find("rank"); it != j.end() && !it->is_null())
        record.rank = number_field<std::uint64_t>(*it, "rank", /*allow_zero=*/false);
    try {
        record.visited_at = parse_rfc3339(require(j, "visited_at", "").get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw CodecError(std::string("visited_at: ") + e.what());
    }
    record.load_ms = number_field<double>(require(j, "load_ms", ""), "load_ms");
    record.worker_count = number_field<std::uint32_t>(require(j, "worker_count", ""), "worker_count");
    record.reported_cores =
        number_field<std::uint32_t>(require(j, "reported_cores", ""), "reported_cores");
    if (auto it = j.find("partial"); it != j.end()) record.partial = it->get<bool>();

    for (const auto& [idx, s] : require(j, "scripts", "").items()) {
        std::string path = "scripts[" + idx + "]";
        ScriptArtifact script;
        script.script_id = require(s, "script_id", path).get<std::string>();
        script.url = require(s, "url", path).get<std::string>();
        script.source_hash = digest_from_json(require(s, "source_hash", path), path + ".source_hash");
        std::string ctx = require(s, "context", path).get<std::string>();
        if (ctx == "main_page")
            script.context = ScriptContext::main_page;
        else if (ctx == "worker")
            script.context = ScriptContext::worker;
        else
            throw CodecError(path + ".context: unknown value '" + ctx + "'");
        if (auto it = s.find("source"); it != s.end() && !it->is_null())
            script.source = it->get<std::string>();
        record.scripts.push_back(std::move(script));
    }

    for (const auto& [idx, w] : require(j, "wasm_modules", "").items()) {
        std::string path = "wasm_modules[" + idx + "]";
        WasmArtifact artifact;
        artifact.origin_script_id = require(w, "origin_script_id", path).get<std::string>();
        for (const auto& body : require(w, "function_bodies", path)) {
            try {
                artifact.function_bodies.push_back(base64_decode(body.get<std::string>()));
            } catch (const std::invalid_argument& e) {
                throw CodecError(path + ".function_bodies: " + e.what());
            }
        }
        record.wasm_modules.push_back(std::move(artifact));
    }

    if (auto it = j.find("profile"); it != j.end() && !it->is_null()) {
        ProfileTrace profile;
        profile.duration_ms =
            number_field<double>(require(*it, "duration_ms", "profile"), "profile.duration_ms");
        for (const auto& [idx, s] : require(*it, "stacks", "profile").items()) {
            std::string path = "profile.stacks[" + idx + "]";
            StackAggregate stack;
            for (const auto& f : require(s, "frames", path)) {
                stack.frames.push_back(FrameRef{require(f, "function_name", path).get<std::string>(),
                                                require(f, "script_id", path).get<std::string>()});
            }
            stack.sample_count =
                number_field<std::uint64_t>(require(s, "sample_count", path), path + ".sample_count");
            stack.total_ms = number_field<double>(require(s, "total_ms", path), path + ".total_ms");
            profile.stacks.push_back(std::move(stack));
        }
        record.profile = std::move(profile);
    }

    for (const auto& [idx, f] : require(j, "ws_frames", "").items()) {
        std::string path = "ws_frames[" + idx + "]";
        WsFrame frame;
        frame.endpoint = require(f, "endpoint", path).get<std::string>();
        std::string dir = require(f, "direction", path).get<std::string>();
        if (dir == "sent")
            frame.direction = WsDirection::sent;
        else if (dir == "received")
            frame.direction = WsDirection::received;
        else
            throw CodecError(path + ".direction: unknown value '" + dir + "'");
        frame.at_ms = number_field<double>(require(f, "at_ms", path), path + ".at_ms");
        std::string encoding = "text";
        if (auto it = f.find("payload_encoding"); it != f.end())
            encoding = it->get<std::string>();
        std::string payload = require(f, "payload", path).get<std::string>();
        if (encoding == "base64") {
            frame.binary = true;
            Bytes raw;
            try {
                raw = base64_decode(payload);
            } catch (const std::invalid_argument& e) {
                throw CodecError(path + ".payload: " + e.what());
            }
            frame.payload.assign(raw.begin(), raw.end());
        } else if (encoding == "text") {
            frame.payload = std::move(payload);
        } else {
            throw CodecError(path + ".payload_encoding: unknown value '" + encoding + "'");
        }
        record.ws_frames.push_back(std::move(frame));
    }

    validate(record);
    return record;
}

}  // namespace

}  // namespace minerscope
