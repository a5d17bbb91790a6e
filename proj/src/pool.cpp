#include "minerscope/pool.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "minerscope/util.hpp"

namespace minerscope::pool {

using nlohmann::json;

namespace {

constexpr const char* kEndpoint = "wss://pool.testbed.local:8892/proxy";
constexpr const char* kBaseInstant = "2018-05-04T12:00:00.000Z";
constexpr const char* kSiteKey = "TBDq7rkXa0vPi9Lm";

// Two wrapper codebases drive the same Wasm; similarity clustering should
// keep them apart while fingerprints unify each half of the grid.
constexpr const char* kMainSource1 = R"js("use strict";
var HashWorks = function (key, opts) {
    this.key = key;
    this.throttle = (opts && opts.throttle) || 0;
    this.workers = [];
};
HashWorks.prototype.start = function (n) {
    for (var i = 0; i < n; i++) {
        var w = new Worker("https://cdn.minepool.testbed/v1/worker.js");
        w.postMessage({ key: this.key, throttle: this.throttle });
        this.workers.push(w);
    }
    return this;
};
new HashWorks(window.__hw_key, { throttle: window.__hw_throttle })
    .start(navigator.hardwareConcurrency);
)js";

constexpr const char* kWorkerSource1 = R"js(importScripts("https://cdn.minepool.testbed/v1/cn.js");
var engine = null;
onmessage = function (e) {
    if (!engine) engine = CnCore.create(e.data.key, e.data.throttle);
    engine.schedule(function step() {
        engine.hashBlock();
        engine.schedule(step);
    });
};
)js";

constexpr const char* kMainSource2 = R"js((function (w) {
    function Pool(url) { this.url = url; this.pending = []; }
    Pool.prototype.submit = function (share) { this.pending.push(share); };
    w.WkrPool = {
        run: function (cfg) {
            var crew = [];
            for (var i = 0; i < cfg.threads; i += 1) {
                crew[i] = new Worker(cfg.worker);
                crew[i].postMessage(cfg);
            }
            return new Pool(cfg.pool);
        }
    };
})(window);
WkrPool.run({
    threads: navigator.hardwareConcurrency,
    worker: "https://static.wkrpool.testbed/job/wkr.js",
    pool: "wss://pool.testbed.local:8892/proxy"
});
)js";

constexpr const char* kWorkerSource2 = R"js(self.importScripts("https://static.wkrpool.testbed/job/glue.js");
var ctx;
self.onmessage = function (msg) {
    ctx = wkrInit(msg.data);
    wkrLoop(ctx);
};
function wkrLoop(c) {
    wkrHashOnce(c);
    setTimeout(function () { wkrLoop(c); }, c.pause);
}
)js";

// Fixed byte patterns standing in for compiled hash-kernel bodies. Both
// wrapper variants ship these bytes, so their codebase hash is identical.
std::vector<Bytes> miner_wasm_bodies() {
    std::vector<Bytes> bodies;
    for (int k = 0; k < 8; ++k) {
        Bytes body;
        body.push_back(0x00);  // no locals
        std::size_t len = 24 + static_cast<std::size_t>(k) * 7;
        for (std::size_t i = 0; i < len; ++i)
            body.push_back(static_cast<std::uint8_t>((k * 37 + i * 11 + 5) & 0xff));
        body.push_back(0x0b);
        bodies.push_back(std::move(body));
    }
    return bodies;
}

std::vector<Bytes> codec_wasm_bodies() {
    std::vector<Bytes> bodies;
    for (int k = 0; k < 3; ++k) {
        Bytes body;
        body.push_back(0x01);
        body.push_back(0x02);
        body.push_back(0x7f);  // one i32 local
        for (std::size_t i = 0; i < 40; ++i)
            body.push_back(static_cast<std::uint8_t>((k * 91 + i * 53 + 17) & 0xff));
        body.push_back(0x0b);
        bodies.push_back(std::move(body));
    }
    return bodies;
}

ScriptArtifact make_script(std::string id, std::string url, std::string source,
                           ScriptContext context) {
    ScriptArtifact script;
    script.script_id = std::move(id);
    script.url = std::move(url);
    script.source_hash = script_source_hash(source);
    script.source = std::move(source);
    script.context = context;
    return script;
}

WsFrame text_frame(WsDirection direction, const json& payload, double at_ms) {
    WsFrame frame;
    frame.endpoint = kEndpoint;
    frame.direction = direction;
    frame.payload = payload.dump();
    frame.at_ms = at_ms;
    return frame;
}

std::string job_blob(int pct, int variant) {
    Bytes blob(76);
    for (std::size_t i = 0; i < blob.size(); ++i)
        blob[i] = static_cast<std::uint8_t>((pct * 13 + variant * 7 + i * 29 + 6) & 0xff);
    blob[0] = 0x06;  // major version byte of a v6 block template
    return to_hex(blob);
}

int throttle_pct(const ThrottleSpec& spec) {
    return static_cast<int>(std::lround(spec.throttle * 100));
}

}  // namespace

double duty_cycle(const ThrottleSpec& spec) {
    if (!(spec.throttle >= 0 && spec.throttle < 1))
        throw std::invalid_argument("throttle must lie in [0, 1)");
    if (!(spec.hash_ms > 0)) throw std::invalid_argument("hash_ms must be positive");
    if (spec.sleep_cap_ms < 0) throw std::invalid_argument("sleep_cap_ms must be non-negative");
    double sleep_ms =
        std::min(spec.sleep_cap_ms, spec.hash_ms * spec.throttle / (1 - spec.throttle));
    return spec.hash_ms / (spec.hash_ms + sleep_ms);
}

std::uint64_t credited_hashes(std::span<const std::uint8_t, 4> target_bytes) {
    std::uint32_t value = static_cast<std::uint32_t>(target_bytes[0]) |
                          static_cast<std::uint32_t>(target_bytes[1]) << 8 |
                          static_cast<std::uint32_t>(target_bytes[2]) << 16 |
                          static_cast<std::uint32_t>(target_bytes[3]) << 24;
    std::uint64_t divisor = static_cast<std::uint64_t>(value) + 1;
    std::uint64_t credited = ((std::uint64_t{1} << 32) + divisor / 2) / divisor;
    return std::max<std::uint64_t>(credited, 1);
}

std::uint64_t credited_hashes_hex(std::string_view target_hex) {
    Bytes bytes = from_hex(target_hex);
    if (bytes.size() != 4) throw std::invalid_argument("target must be exactly 8 hex chars");
    return credited_hashes(std::span<const std::uint8_t, 4>(bytes.data(), 4));
}

VisitRecord synth_visit(const ThrottleSpec& spec, std::uint32_t cores, double profile_ms,
                        int variant) {
    if (cores < 1) throw std::invalid_argument("cores must be at least 1");
    if (!(profile_ms > 0)) throw std::invalid_argument("profile_ms must be positive");
    if (variant != 1 && variant != 2) throw std::invalid_argument("variant must be 1 or 2");
    double duty = duty_cycle(spec);
    int pct = throttle_pct(spec);

    VisitRecord record;
    record.site = "miner-t" + std::to_string(pct) + "-v" + std::to_string(variant) + ".testbed";
    record.visited_at =
        parse_rfc3339(kBaseInstant) + std::chrono::minutes(pct * 2 + variant);
    record.load_ms = 980 + pct * 3 + variant * 17;
    record.reported_cores = cores;
    record.worker_count = cores;

    const char* main_url = variant == 1 ? "https://cdn.minepool.testbed/v1/hashworks.min.js"
                                        : "https://static.wkrpool.testbed/job/wkrpool.js";
    const char* worker_url = variant == 1 ? "https://cdn.minepool.testbed/v1/worker.js"
                                          : "https://static.wkrpool.testbed/job/wkr.js";
    const char* main_source = variant == 1 ? kMainSource1 : kMainSource2;
    const char* worker_source = variant == 1 ? kWorkerSource1 : kWorkerSource2;
    const char* hash_fn = variant == 1 ? "CnCore.hashBlock" : "wkrHashOnce";

    record.scripts.push_back(make_script("1", main_url, main_source, ScriptContext::main_page));
    for (std::uint32_t i = 0; i < cores; ++i)
        record.scripts.push_back(make_script("w" + std::to_string(i + 1), worker_url,
                                             worker_source, ScriptContext::worker));

    WasmArtifact wasm;
    wasm.origin_script_id = "w1";
    wasm.function_bodies = miner_wasm_bodies();
    record.wasm_modules.push_back(std::move(wasm));

    // Workers start hashing once the page has set them up; the dominant
    // stack of each worker is the Wasm kernel under its JS driver.
    double startup_ms = profile_ms / 600;
    double busy_ms = duty * (profile_ms - startup_ms);
    ProfileTrace profile;
    profile.duration_ms = profile_ms;
    for (std::uint32_t i = 0; i < cores; ++i) {
        std::string wid = "w" + std::to_string(i + 1);
        StackAggregate stack;
        stack.frames = {{kWasmUnnamed, kWasmScriptId},
                        {hash_fn, wid},
                        {"onmessage", wid}};
        stack.total_ms = busy_ms;
        stack.sample_count = static_cast<std::uint64_t>(std::llround(busy_ms));
        profile.stacks.push_back(std::move(stack));
    }
    StackAggregate boot;
    boot.frames = {{variant == 1 ? "HashWorks.start" : "WkrPool.run", "1"}};
    boot.total_ms = startup_ms / 4;
    boot.sample_count = static_cast<std::uint64_t>(std::llround(boot.total_ms)) + 1;
    profile.stacks.push_back(std::move(boot));
    record.profile = std::move(profile);

    std::string login = variant == 1 ? kSiteKey : testbed_wallet();
    std::string job_id = "job-" + std::to_string(pct) + "-" + std::to_string(variant);
    record.ws_frames.push_back(text_frame(WsDirection::sent,
                                          json{{"identifier", "handshake"},
                                               {"pool", "pool.testbed.local"},
                                               {"login", login},
                                               {"password", "x"},
                                               {"userid", record.site},
                                               {"version", 7}},
                                          320));
    record.ws_frames.push_back(text_frame(
        WsDirection::received,
        json{{"type", "job"},
             {"params",
              {{"job_id", job_id}, {"blob", job_blob(pct, variant)}, {"target", "ffffff00"}}}},
        355));
    int submits = std::max(1, static_cast<int>(std::floor(duty * 4)));
    for (int s = 0; s < submits; ++s) {
        double at = 2400 + s * 1900;
        Bytes nonce{static_cast<std::uint8_t>(0x1c + s), 0x00,
                    static_cast<std::uint8_t>(pct), static_cast<std::uint8_t>(variant)};
        Bytes result(32);
        for (std::size_t i = 0; i < result.size(); ++i)
            result[i] = static_cast<std::uint8_t>((s * 61 + pct * 5 + i * 19 + 3) & 0xff);
        record.ws_frames.push_back(text_frame(WsDirection::sent,
                                              json{{"type", "submit"},
                                                   {"params",
                                                    {{"job_id", job_id},
                                                     {"nonce", to_hex(nonce)},
                                                     {"result", to_hex(result)}}}},
                                              at));
        record.ws_frames.push_back(text_frame(
            WsDirection::received,
            json{{"type", "hash_accepted"}, {"params", {{"hashes", 256}}}}, at + 40));
    }

    validate(record);
    return record;
}

VisitRecord synth_benign(BenignKind kind, double profile_ms) {
    if (!(profile_ms > 0)) throw std::invalid_argument("profile_ms must be positive");
    VisitRecord record;
    record.visited_at = parse_rfc3339(kBaseInstant) + std::chrono::hours(3);
    record.reported_cores = 4;
    ProfileTrace profile;
    profile.duration_ms = profile_ms;

    auto push_stack = [&profile](std::vector<FrameRef> frames, double total_ms) {
        StackAggregate stack;
        stack.frames = std::move(frames);
        stack.total_ms = total_ms;
        stack.sample_count = static_cast<std::uint64_t>(std::llround(total_ms)) + 1;
        profile.stacks.push_back(std::move(stack));
    };

    switch (kind) {
        case BenignKind::idle: {
            record.site = "idle-control.testbed";
            record.load_ms = 640;
            record.scripts.push_back(make_script(
                "1", "https://idle-control.testbed/app.js",
                "document.addEventListener('scroll', function () { /* nothing */ });\n",
                ScriptContext::main_page));
            push_stack({{"(anonymous)", "1"}}, profile_ms * 0.004);
            break;
        }
        case BenignKind::burst: {
            // Heavy startup work that finishes quickly: dominates a short
            // profile but falls under 10% once averaged over 30 s.
            record.site = "burst-control.testbed";
            record.load_ms = 2900;
            record.scripts.push_back(make_script(
                "1", "https://burst-control.testbed/bundle.js",
                "function boot() { render(); hydrate(); index(); }\nboot();\n",
                ScriptContext::main_page));
            push_stack({{"boot", "1"}}, 2500);
            break;
        }
        case BenignKind::many_workers: {
            record.site = "workers-control.testbed";
            record.load_ms = 1100;
            record.scripts.push_back(make_script(
                "1", "https://workers-control.testbed/main.js",
                "for (var i = 0; i < 4; i++) new Worker('tile.js');\n",
                ScriptContext::main_page));
            for (int i = 1; i <= 4; ++i)
                record.scripts.push_back(make_script(
                    "w" + std::to_string(i), "https://workers-control.testbed/tile.js",
                    "onmessage = function (e) { postMessage(shade(e.data)); };\n",
                    ScriptContext::worker));
            record.worker_count = 4;
            for (int i = 1; i <= 4; ++i)
                push_stack({{"shade", "w" + std::to_string(i)},
                            {"onmessage", "w" + std::to_string(i)}},
                           profile_ms * 0.005);
            break;
        }
        case BenignKind::wasm_codec: {
            record.site = "codec-control.testbed";
            record.load_ms = 1500;
            record.scripts.push_back(make_script(
                "1", "https://codec-control.testbed/decode.js",
                "fetch('frame.bin').then(function (r) { return decodeFrame(r); });\n",
                ScriptContext::main_page));
            WasmArtifact wasm;
            wasm.origin_script_id = "1";
            wasm.function_bodies = codec_wasm_bodies();
            record.wasm_modules.push_back(std::move(wasm));
            push_stack({{kWasmUnnamed, kWasmScriptId}, {"decodeFrame", "1"}}, 200);
            break;
        }
    }

    record.profile = std::move(profile);
    validate(record);
    return record;
}

std::vector<TestbedEntry> testbed_specs() {
    std::vector<TestbedEntry> entries;
    std::vector<double> throttles{0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
    for (double throttle : throttles) {
        for (int variant = 1; variant <= 2; ++variant) {
            ThrottleSpec spec;
            spec.throttle = throttle;
            TestbedEntry entry;
            entry.site = "miner-t" + std::to_string(throttle_pct(spec)) + "-v" +
                         std::to_string(variant) + ".testbed";
            entry.spec = spec;
            entry.variant = variant;
            entries.push_back(std::move(entry));
        }
    }
    return entries;
}

std::vector<VisitRecord> make_testbed_corpus(std::uint32_t cores, double profile_ms,
                                             bool include_benign) {
    std::vector<VisitRecord> corpus;
    for (const auto& entry : testbed_specs())
        corpus.push_back(synth_visit(entry.spec, cores, profile_ms, entry.variant));
    if (include_benign)
        for (auto kind : {BenignKind::idle, BenignKind::burst, BenignKind::many_workers,
                          BenignKind::wasm_codec})
            corpus.push_back(synth_benign(kind, profile_ms));
    return corpus;
}

const std::string& testbed_wallet() {
    static const std::string wallet =
        "43iWRZXZkJKA8vCkW869UGCecB3RSMjFVE397991q3YyEDTSy7RXnx8UkrSYN9XgwGGfdMpoj9DL4MzDmBYvD1"
        "uAUXenLe2";
    return wallet;
}

}  // namespace minerscope::pool
