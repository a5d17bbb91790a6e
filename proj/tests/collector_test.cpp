#include "minerscope/collector.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "minerscope/telemetry.hpp"
#include "minerscope/util.hpp"
#include "support/mock_devtools.hpp"

using namespace minerscope;
using namespace minerscope::collector;
using mockdt::MockDevtools;
using mockdt::Scenario;

namespace {

Bytes uleb(std::uint64_t v) {
    Bytes out;
    do {
        std::uint8_t b = v & 0x7f;
        v >>= 7;
        if (v) b |= 0x80;
        out.push_back(b);
    } while (v);
    return out;
}

void append(Bytes& to, const Bytes& what) { to.insert(to.end(), what.begin(), what.end()); }

/// Minimal module: magic, version, and a code section holding the given
/// bodies verbatim.
Bytes wasm_module_with(const std::vector<Bytes>& bodies) {
    Bytes payload = uleb(bodies.size());
    for (const auto& body : bodies) {
        append(payload, uleb(body.size()));
        append(payload, body);
    }
    Bytes module = {0x00, 0x61, 0x73, 0x6d, 0x01, 0x00, 0x00, 0x00, 0x0a};
    append(module, uleb(payload.size()));
    append(module, payload);
    return module;
}

std::string as_string(const Bytes& bytes) { return std::string(bytes.begin(), bytes.end()); }

const std::vector<Bytes> kBodies = {{0x00, 0x0b}, {0x00, 0x01, 0x0b}, {0x01, 0x01, 0x7f, 0x41, 0x00, 0x0b}};

/// Page with an inline script, a fetched script, one worker running a JS
/// script plus a Wasm module, a pool socket session, and profiler activity
/// on both threads.
Scenario full_scenario() {
    Scenario s;
    s.main_scripts = {
        {"5", "https://site.example/app.js", "function tick(){return 1;}", false, false},
        {"7", "", "console.log('inline');", false, false},
    };
    mockdt::MockWorker worker;
    worker.target_id = "T-A";
    worker.url = "https://site.example/worker.js";
    worker.scripts = {
        {"3", "https://site.example/worker.js", "onmessage=function(){};", false, false},
        {"4", "wasm://module/1", as_string(wasm_module_with(kBodies)), true, false},
    };
    s.workers = {worker};
    s.ws_events = {
        {"wss://pool.example:8443/sess", false, false, R"({"type":"auth"})"},
        {"wss://pool.example:8443/sess", true, false, R"({"type":"job"})"},
        {"wss://pool.example:8443/sess", true, true, std::string("\x00\x01\xfe\xff", 4)},
    };

    mockdt::MockTraceThread main_thread;
    main_thread.pid = 10;
    main_thread.tid = 100;
    main_thread.nodes = {
        {1, "(root)", 0, 0},
        {2, "(program)", 0, 1},
        {3, "tick", 5, 1},
        {4, "(idle)", 0, 1},
    };
    main_thread.samples = {3, 3, 2, 4};
    main_thread.deltas_us = {20000, 20000, 5000, 5000};

    mockdt::MockTraceThread worker_thread;
    worker_thread.pid = 10;
    worker_thread.tid = 200;
    worker_thread.nodes = {
        {1, "(root)", 0, 0},
        {2, "hashOnce", 3, 1},
        {3, kWasmUnnamed, 0, 2},
    };
    worker_thread.samples = {3, 3, 3, 2};
    worker_thread.deltas_us = {30000, 30000, 30000, 10000};

    s.trace = {main_thread, worker_thread};
    return s;
}

CrawlConfig fast_config() {
    CrawlConfig cfg;
    cfg.load_timeout_ms = 2000;
    cfg.settle_extra_ms = 120;
    cfg.profile_ms = 1000;
    cfg.reported_cores = 7;
    return cfg;
}

std::size_t index_of(const std::vector<std::string>& log, const std::string& method) {
    auto it = std::find(log.begin(), log.end(), method);
    REQUIRE(it != log.end());
    return static_cast<std::size_t>(it - log.begin());
}

const ScriptArtifact& script_by_id(const VisitRecord& record, const std::string& id) {
    for (const auto& script : record.scripts)
        if (script.script_id == id) return script;
    REQUIRE(false);
    std::abort();
}

std::string run_node_check(const std::string& script, const std::string& expected) {
    namespace fs = std::filesystem;
    fs::path file = fs::temp_directory_path() / ("core_override_" + expected + ".js");
    {
        std::ofstream out(file);
        out << script;
    }
    std::string cmd = "node \"" TEST_TOOLS_DIR "/check_core_override.js\" \"" +
                      file.string() + "\" " + expected + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    char buf[256];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
    int status = pclose(pipe);
    fs::remove(file);
    CAPTURE(output);
    REQUIRE(status == 0);
    return output;
}

}  // namespace

TEST_CASE("stock crawl configs") {
    CrawlConfig cfg = phase_config(1);
    CHECK(cfg.profile_ms == 5000);
    CHECK(cfg.load_timeout_ms == 30000);
    CHECK(cfg.settle_extra_ms == 3000);
    CHECK(cfg.reported_cores == 4);
    CHECK(phase_config(2).profile_ms == 30000);
    CHECK_THROWS_AS(phase_config(0), std::invalid_argument);
    CHECK_THROWS_AS(phase_config(3), std::invalid_argument);
}

TEST_CASE("endpoint parsing") {
    Endpoint e = parse_endpoint("ws://127.0.0.1:9222/devtools/page/1");
    CHECK(e.host == "127.0.0.1");
    CHECK(e.port == 9222);
    CHECK(e.target == "/devtools/page/1");

    e = parse_endpoint("localhost:8080");
    CHECK(e.host == "localhost");
    CHECK(e.port == 8080);
    CHECK(e.target == "/");

    CHECK_THROWS_AS(parse_endpoint("localhost"), std::invalid_argument);
    CHECK_THROWS_AS(parse_endpoint("host:"), std::invalid_argument);
    CHECK_THROWS_AS(parse_endpoint("host:notaport"), std::invalid_argument);
    CHECK_THROWS_AS(parse_endpoint("host:0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_endpoint("host:70000"), std::invalid_argument);
}

TEST_CASE("core override script text") {
    std::string script = inject_core_override(4);
    CHECK(script.find("hardwareConcurrency") != std::string::npos);
    CHECK(script.find("var value = 4;") != std::string::npos);
    CHECK(inject_core_override(1) != script);
    CHECK_THROWS_AS(inject_core_override(0), std::invalid_argument);
}

TEST_CASE("core override takes effect in a scripted engine") {
    // The harness evaluates the script twice in page and worker scopes
    // against a getter that reports 96 real cores.
    for (auto cores : {1u, 4u, 64u}) {
        std::string expected = std::to_string(cores);
        std::string output = run_node_check(inject_core_override(cores), expected);
        CHECK(output.find("OK " + expected) != std::string::npos);
    }
}

TEST_CASE("scripted visit collects scripts, workers, frames, and stacks") {
    MockDevtools mock(full_scenario());
    CrawlConfig cfg = fast_config();
    VisitOutcome outcome = visit("https://site.example/", cfg, {"127.0.0.1", mock.port(), "/"});
    const VisitRecord& record = outcome.record;

    CHECK(outcome.attach_failures.empty());
    CHECK(record.site == "site.example");
    CHECK_FALSE(record.partial);
    CHECK(record.load_ms >= 0);
    CHECK(record.load_ms < 2000);
    CHECK(record.worker_count == 1);
    CHECK(record.reported_cores == 7);

    SUBCASE("scripts with sources, contexts, and namespaced worker ids") {
        REQUIRE(record.scripts.size() == 4);
        const auto& app = script_by_id(record, "5");
        CHECK(app.url == "https://site.example/app.js");
        CHECK(app.context == ScriptContext::main_page);
        REQUIRE(app.source.has_value());
        CHECK(app.source_hash == script_source_hash(*app.source));

        CHECK(script_by_id(record, "7").url == kInlineUrl);

        const auto& worker_js = script_by_id(record, "w1:3");
        CHECK(worker_js.context == ScriptContext::worker);
        CHECK(worker_js.url == "https://site.example/worker.js");

        // Module bytes are kept as a hash plus extracted bodies, never as text.
        const auto& wasm_script = script_by_id(record, "w1:4");
        CHECK_FALSE(wasm_script.source.has_value());
        Bytes module = wasm_module_with(kBodies);
        CHECK(wasm_script.source_hash ==
              script_source_hash(std::string_view(reinterpret_cast<const char*>(module.data()),
                                                  module.size())));
    }

    SUBCASE("wasm module split into function bodies") {
        REQUIRE(record.wasm_modules.size() == 1);
        CHECK(record.wasm_modules[0].origin_script_id == "w1:4");
        CHECK(record.wasm_modules[0].function_bodies == kBodies);
    }

    SUBCASE("trace becomes leaf-first stack aggregates") {
        REQUIRE(record.profile.has_value());
        CHECK(record.profile->duration_ms == 1000);
        REQUIRE(record.profile->stacks.size() == 3);

        const auto& wasm_stack = record.profile->stacks[0];
        REQUIRE(wasm_stack.frames.size() == 2);
        CHECK(wasm_stack.frames[0] == FrameRef{kWasmUnnamed, kWasmScriptId});
        CHECK(wasm_stack.frames[1] == FrameRef{"hashOnce", "w1:3"});
        CHECK(wasm_stack.sample_count == 3);
        CHECK(wasm_stack.total_ms == doctest::Approx(90.0));

        const auto& tick_stack = record.profile->stacks[1];
        REQUIRE(tick_stack.frames.size() == 1);
        CHECK(tick_stack.frames[0] == FrameRef{"tick", "5"});
        CHECK(tick_stack.sample_count == 2);
        CHECK(tick_stack.total_ms == doctest::Approx(40.0));

        const auto& boot_stack = record.profile->stacks[2];
        REQUIRE(boot_stack.frames.size() == 1);
        CHECK(boot_stack.frames[0] == FrameRef{"hashOnce", "w1:3"});
        CHECK(boot_stack.sample_count == 1);
        CHECK(boot_stack.total_ms == doctest::Approx(10.0));
    }

    SUBCASE("socket frames keep endpoint, direction, and raw binary payloads") {
        REQUIRE(record.ws_frames.size() == 3);
        for (const auto& frame : record.ws_frames) {
            CHECK(frame.endpoint == "wss://pool.example:8443/sess");
            CHECK(frame.at_ms >= 0);
        }
        CHECK(record.ws_frames[0].direction == WsDirection::sent);
        CHECK(record.ws_frames[0].payload == R"({"type":"auth"})");
        CHECK_FALSE(record.ws_frames[0].binary);
        CHECK(record.ws_frames[1].direction == WsDirection::received);
        CHECK(record.ws_frames[2].binary);
        CHECK(record.ws_frames[2].payload == std::string("\x00\x01\xfe\xff", 4));
    }

    SUBCASE("protocol ordering: override before navigation, attach before profiling") {
        auto log = mock.log();
        CHECK(index_of(log, "Page.addScriptToEvaluateOnNewDocument") <
              index_of(log, "Page.navigate"));
        CHECK(index_of(log, "Page.navigate") < index_of(log, "Target.attachToTarget"));
        CHECK(index_of(log, "Target.attachToTarget") < index_of(log, "Tracing.start"));
        CHECK(index_of(log, "S1:Debugger.enable") < index_of(log, "Tracing.start"));
        CHECK(index_of(log, "Tracing.start") < index_of(log, "Tracing.end"));

        auto install = mock.params_of("Page.addScriptToEvaluateOnNewDocument");
        CHECK(install["source"].get<std::string>().find("hardwareConcurrency") !=
              std::string::npos);
        auto tracing = mock.params_of("Tracing.start");
        CHECK(tracing.dump().find("v8.cpu_profiler.hires") != std::string::npos);
    }

    SUBCASE("records survive the archive codec") {
        CHECK(decode_visit(encode_visit(record)) == record);
    }
}

TEST_CASE("profiling window holds wall-clock duration within ten percent") {
    Scenario s;
    s.main_scripts = {{"1", "https://two.example/a.js", "var a=1;", false, false},
                      {"2", "https://two.example/b.js", "var b=2;", false, false}};
    mockdt::MockTraceThread t;
    t.nodes = {{1, "(root)", 0, 0}, {2, "main", 1, 1}};
    t.samples = {2, 2};
    t.deltas_us = {1000, 1000};
    s.trace = {t};
    MockDevtools mock(s);

    CrawlConfig cfg = fast_config();
    cfg.profile_ms = 5000;
    VisitOutcome outcome = visit("https://two.example/", cfg, {"127.0.0.1", mock.port(), "/"});

    CHECK(outcome.record.scripts.size() == 2);
    REQUIRE(outcome.record.profile.has_value());
    CHECK(outcome.record.profile->duration_ms == 5000);

    double window = mock.ms_between("Tracing.start", "Tracing.end");
    CHECK(window >= 4500);
    CHECK(window <= 5500);
}

TEST_CASE("navigation timeout still yields a record, flagged partial") {
    Scenario s = full_scenario();
    s.fire_load = false;
    MockDevtools mock(s);

    CrawlConfig cfg = fast_config();
    cfg.load_timeout_ms = 300;
    cfg.settle_extra_ms = 100;
    cfg.profile_ms = 300;
    VisitOutcome outcome = visit("https://site.example/", cfg, {"127.0.0.1", mock.port(), "/"});

    CHECK(outcome.record.partial);
    CHECK(outcome.record.load_ms == 300);
    CHECK(outcome.record.scripts.size() == 4);
    CHECK(decode_visit(encode_visit(outcome.record)) == outcome.record);
}

TEST_CASE("refused worker attach is recorded and non-fatal") {
    Scenario s = full_scenario();
    mockdt::MockWorker refused;
    refused.target_id = "T-B";
    refused.url = "https://site.example/other-worker.js";
    refused.refuse_attach = true;
    refused.scripts = {{"9", "https://site.example/other-worker.js", "var x;", false, false}};
    s.workers.push_back(refused);
    MockDevtools mock(s);

    VisitOutcome outcome =
        visit("https://site.example/", fast_config(), {"127.0.0.1", mock.port(), "/"});
    CHECK(outcome.record.worker_count == 1);
    REQUIRE(outcome.attach_failures.size() == 1);
    CHECK(outcome.attach_failures[0] == "T-B");
    for (const auto& script : outcome.record.scripts) CHECK(script.script_id != "w2:9");
}

TEST_CASE("unfetchable source keeps the script entry without text") {
    Scenario s;
    s.main_scripts = {{"1", "https://gone.example/a.js", "whatever", false, true}};
    MockDevtools mock(s);

    VisitOutcome outcome =
        visit("https://gone.example/", fast_config(), {"127.0.0.1", mock.port(), "/"});
    REQUIRE(outcome.record.scripts.size() == 1);
    CHECK_FALSE(outcome.record.scripts[0].source.has_value());
    CHECK(outcome.record.scripts[0].source_hash == Digest32{});
    CHECK(decode_visit(encode_visit(outcome.record)) == outcome.record);
}

TEST_CASE("unreachable endpoint raises a connection error") {
    CHECK_THROWS_AS(visit("https://site.example/", fast_config(), {"127.0.0.1", 9, "/"}),
                    CrawlError);
}

TEST_CASE("endpoint hanging up mid-visit raises an error") {
    Scenario s = full_scenario();
    s.drop_before_trace = true;
    MockDevtools mock(s);
    CHECK_THROWS_AS(visit("https://site.example/", fast_config(), {"127.0.0.1", mock.port(), "/"}),
                    CrawlError);
}

TEST_CASE("crawl runs parallel sessions and isolates failures") {
    MockDevtools mock(full_scenario());
    CrawlConfig cfg = fast_config();
    cfg.settle_extra_ms = 50;
    cfg.profile_ms = 100;
    cfg.parallel_sessions = 2;

    std::vector<std::string> urls = {"https://a.example/", "https://b.example/",
                                     "https://c.example/"};
    auto results = crawl(urls, cfg, {"127.0.0.1", mock.port(), "/"});
    REQUIRE(results.size() == 3);
    for (std::size_t i = 0; i < urls.size(); ++i) {
        CAPTURE(results[i].error);
        CHECK(results[i].url == urls[i]);
        REQUIRE(results[i].ok);
        CHECK(results[i].outcome.record.site == host_of(urls[i]));
    }

    auto dead = crawl(urls, cfg, {"127.0.0.1", 9, "/"});
    for (const auto& result : dead) {
        CHECK_FALSE(result.ok);
        CHECK_FALSE(result.error.empty());
    }

    CHECK_THROWS_AS(crawl(urls, CrawlConfig{.parallel_sessions = 0},
                          {"127.0.0.1", mock.port(), "/"}),
                    std::invalid_argument);
}
