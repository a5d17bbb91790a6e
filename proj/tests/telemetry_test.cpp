#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "minerscope/archive.hpp"
#include "minerscope/telemetry.hpp"
#include "support/gen.hpp"

using namespace minerscope;

namespace {

VisitRecord small_valid_record() {
    VisitRecord r;
    r.site = "cinecalidad.example";
    r.rank = 442;
    r.visited_at = parse_rfc3339("2018-05-04T12:00:00.000Z");
    r.load_ms = 1234.5;
    r.reported_cores = 4;
    r.worker_count = 4;

    ScriptArtifact loader;
    loader.script_id = "12";
    loader.url = "https://cdn.example/lib/miner.min.js";
    loader.source = "var miner = new Miner('sitekey');";
    loader.source_hash = script_source_hash(*loader.source);
    r.scripts.push_back(loader);

    ScriptArtifact worker;
    worker.script_id = "w1:3";
    worker.url = kInlineUrl;
    worker.source_hash = script_source_hash("onmessage = run;");
    worker.context = ScriptContext::worker;
    r.scripts.push_back(worker);

    WasmArtifact wasm;
    wasm.origin_script_id = "w1:3";
    wasm.function_bodies = {Bytes{0x01, 0x02, 0x03}, Bytes{0xff}};
    r.wasm_modules.push_back(wasm);

    ProfileTrace profile;
    profile.duration_ms = 5000;
    StackAggregate hot;
    hot.frames = {FrameRef{kWasmUnnamed, kWasmScriptId}, FrameRef{"work", "w1:3"}};
    hot.sample_count = 73938;
    hot.total_ms = 14375.3;
    profile.stacks.push_back(hot);
    StackAggregate idle;
    idle.frames = {FrameRef{"(idle)", "12"}};
    idle.sample_count = 0;
    idle.total_ms = 0;
    profile.stacks.push_back(idle);
    r.profile = profile;

    WsFrame frame;
    frame.endpoint = "wss://ws001.proxy.example:8892/";
    frame.direction = WsDirection::sent;
    frame.payload = R"({"identifier":"handshake","pool":"pool.example","version":4})";
    frame.at_ms = 2100.25;
    r.ws_frames.push_back(frame);

    return r;
}

std::string invariant_message(const VisitRecord& r) {
    try {
        validate(r);
    } catch (const InvariantError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("generated records satisfy all invariants") {
    gen::Rng rng(7201);
    for (int i = 0; i < 300; ++i) CHECK_NOTHROW(validate(gen::visit_record(rng)));
}

TEST_CASE("validate names the offending field") {
    auto r = small_valid_record();
    CHECK(invariant_message(r).empty());

    SUBCASE("empty site") {
        r.site.clear();
        CHECK(invariant_message(r).find("site") != std::string::npos);
    }
    SUBCASE("zero rank") {
        r.rank = 0;
        CHECK(invariant_message(r).find("rank") != std::string::npos);
    }
    SUBCASE("zero cores") {
        r.reported_cores = 0;
        CHECK(invariant_message(r).find("reported_cores") != std::string::npos);
    }
    SUBCASE("negative load") {
        r.load_ms = -1;
        CHECK(invariant_message(r).find("load_ms") != std::string::npos);
    }
    SUBCASE("implausibly long load") {
        r.load_ms = kMaxLoadMs + 1;
        CHECK(invariant_message(r).find("load_ms") != std::string::npos);
    }
    SUBCASE("duplicate script id") {
        r.scripts.push_back(r.scripts[0]);
        CHECK(invariant_message(r).find("script_id") != std::string::npos);
    }
    SUBCASE("source hash mismatch") {
        r.scripts[0].source = "tampered";
        CHECK(invariant_message(r).find("source_hash") != std::string::npos);
    }
    SUBCASE("wasm artifact with no bodies") {
        r.wasm_modules[0].function_bodies.clear();
        CHECK(invariant_message(r).find("function_bodies") != std::string::npos);
    }
    SUBCASE("non-positive profile duration") {
        r.profile->duration_ms = 0;
        CHECK(invariant_message(r).find("duration_ms") != std::string::npos);
    }
    SUBCASE("stack without frames") {
        r.profile->stacks[0].frames.clear();
        CHECK(invariant_message(r).find("frames") != std::string::npos);
    }
    SUBCASE("sampled stack with zero time") {
        r.profile->stacks[0].total_ms = 0;
        CHECK(invariant_message(r).find("sample_count") != std::string::npos);
    }
    SUBCASE("unsampled stack with nonzero time") {
        r.profile->stacks[1].total_ms = 3;
        CHECK(invariant_message(r).find("sample_count") != std::string::npos);
    }
    SUBCASE("frame referencing unknown script") {
        r.profile->stacks[0].frames[1].script_id = "nope";
        CHECK(invariant_message(r).find("script_id") != std::string::npos);
    }
    SUBCASE("profile time exceeding duration times cores") {
        r.profile->stacks[0].total_ms = 5000.0 * 4 + 1;
        CHECK(invariant_message(r).find("stacks") != std::string::npos);
    }
    SUBCASE("profile time within duration times cores passes") {
        r.profile->stacks[0].total_ms = 5000.0 * 4;
        CHECK(invariant_message(r).empty());
    }
    SUBCASE("negative frame timestamp") {
        r.ws_frames[0].at_ms = -0.5;
        CHECK(invariant_message(r).find("at_ms") != std::string::npos);
    }
    SUBCASE("empty endpoint") {
        r.ws_frames[0].endpoint.clear();
        CHECK(invariant_message(r).find("endpoint") != std::string::npos);
    }
}

TEST_CASE("wasm frames are recognized by sentinel id or name") {
    CHECK(FrameRef{kWasmUnnamed, kWasmScriptId}.is_wasm());
    CHECK(FrameRef{kWasmUnnamed, "12"}.is_wasm());
    CHECK(FrameRef{"fn", kWasmScriptId}.is_wasm());
    CHECK_FALSE(FrameRef{"fn", "12"}.is_wasm());
}

TEST_CASE("archive line round trip") {
    auto r = small_valid_record();
    std::string line = encode_visit(r);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(decode_visit(line) == r);
}

TEST_CASE("archive format is stable") {
    // Frozen encoding of small_valid_record(). A diff here means the
    // on-disk format changed and existing archives will not decode the
    // same way; bump deliberately, never casually.
    const std::string kGolden =
        R"gold({"load_ms":1234.5,"partial":false,"profile":{"duration_ms":5000.0,"stacks":[{"frames":[{"function_name":"<WASM UNNAMED>","script_id":"<wasm>"},{"function_name":"work","script_id":"w1:3"}],"sample_count":73938,"total_ms":14375.3},{"frames":[{"function_name":"(idle)","script_id":"12"}],"sample_count":0,"total_ms":0.0}]},"rank":442,"reported_cores":4,"scripts":[{"context":"main_page","script_id":"12","source":"var miner = new Miner('sitekey');","source_hash":"05f9926436f84e0d96db591c09efaa6d886cea8188e14c2937d10df2c5ebb4ae","url":"https://cdn.example/lib/miner.min.js"},{"context":"worker","script_id":"w1:3","source_hash":"9ec6e5e963371f4ca289edd74ae6e7455a8531001e4519a779e82c3d44907c55","url":"inline"}],"site":"cinecalidad.example","visited_at":"2018-05-04T12:00:00.000Z","wasm_modules":[{"function_bodies":["AQID","/w=="],"origin_script_id":"w1:3"}],"worker_count":4,"ws_frames":[{"at_ms":2100.25,"direction":"sent","endpoint":"wss://ws001.proxy.example:8892/","payload":"{\"identifier\":\"handshake\",\"pool\":\"pool.example\",\"version\":4}","payload_encoding":"text"}]})gold";
    CHECK(decode_visit(kGolden) == small_valid_record());
    CHECK(encode_visit(small_valid_record()) == kGolden);
}

TEST_CASE("archive line round trip over random records") {
    gen::Rng rng(7202);
    for (int i = 0; i < 300; ++i) {
        VisitRecord r = gen::visit_record(rng);
        CHECK(decode_visit(encode_visit(r)) == r);
    }
}

TEST_CASE("binary payloads survive the codec byte for byte") {
    auto r = small_valid_record();
    WsFrame blob;
    blob.endpoint = "wss://pool.example/";
    blob.binary = true;
    blob.payload = std::string("\x00\xff\x80 job\x01", 8);
    blob.at_ms = 1;
    r.ws_frames.push_back(blob);
    auto decoded = decode_visit(encode_visit(r));
    CHECK(decoded.ws_frames.back().binary);
    CHECK(decoded.ws_frames.back().payload == blob.payload);
}

TEST_CASE("optional fields are omitted, not nulled") {
    VisitRecord r;
    r.site = "minimal.example";
    auto j = nlohmann::json::parse(encode_visit(r));
    CHECK_FALSE(j.contains("rank"));
    CHECK_FALSE(j.contains("profile"));
    CHECK(j.contains("partial"));
    CHECK(j["partial"] == false);

    auto full = nlohmann::json::parse(encode_visit(small_valid_record()));
    CHECK(full.contains("rank"));
    CHECK(full.contains("profile"));
    CHECK_FALSE(full["scripts"][1].contains("source"));  // hash-only script
    CHECK(full["scripts"][0].contains("source"));
}

TEST_CASE("encode rejects invalid records and non-UTF-8 text") {
    auto r = small_valid_record();
    r.site.clear();
    CHECK_THROWS_AS(encode_visit(r), InvariantError);

    r = small_valid_record();
    r.scripts[0].source = std::string("\xc3\x28");  // bad continuation byte
    r.scripts[0].source_hash = script_source_hash(*r.scripts[0].source);
    CHECK_THROWS_AS(encode_visit(r), CodecError);

    r = small_valid_record();
    r.ws_frames[0].payload = std::string("\xed\xa0\x80");  // surrogate, text frame
    CHECK_THROWS_AS(encode_visit(r), CodecError);
}

TEST_CASE("decode rejects malformed lines") {
    CHECK_THROWS_AS(decode_visit("not json"), CodecError);
    CHECK_THROWS_AS(decode_visit("[1,2,3]"), CodecError);
    CHECK_THROWS_AS(decode_visit("{}"), CodecError);

    auto base = nlohmann::json::parse(encode_visit(small_valid_record()));

    auto mutated = [&](auto fn) {
        auto j = base;
        fn(j);
        return j.dump();
    };

    CHECK_THROWS_AS(decode_visit(mutated([](auto& j) { j.erase("site"); })), CodecError);
    CHECK_THROWS_AS(decode_visit(mutated([](auto& j) { j["site"] = 42; })), CodecError);
    CHECK_THROWS_AS(decode_visit(mutated([](auto& j) { j["rank"] = 0; })), CodecError);
    CHECK_THROWS_AS(decode_visit(mutated([](auto& j) { j["rank"] = -3; })), CodecError);
    CHECK_THROWS_AS(decode_visit(mutated([](auto& j) { j["load_ms"] = "fast"; })), CodecError);
    CHECK_THROWS_AS(decode_visit(mutated([](auto& j) { j["visited_at"] = "yesterday"; })),
                    CodecError);
    CHECK_THROWS_AS(decode_visit(mutated([](auto& j) { j["scripts"][0]["source_hash"] = "abcd"; })),
                    CodecError);
    CHECK_THROWS_AS(decode_visit(mutated([](auto& j) { j["scripts"][0]["context"] = "gpu"; })),
                    CodecError);
    CHECK_THROWS_AS(
        decode_visit(mutated([](auto& j) { j["wasm_modules"][0]["function_bodies"][0] = "!b64"; })),
        CodecError);
    CHECK_THROWS_AS(decode_visit(mutated([](auto& j) { j["ws_frames"][0]["direction"] = "up"; })),
                    CodecError);
    CHECK_THROWS_AS(
        decode_visit(mutated([](auto& j) { j["ws_frames"][0]["payload_encoding"] = "hex"; })),
        CodecError);

    // Syntactically fine but semantically invalid: caught by validation.
    CHECK_THROWS_AS(decode_visit(mutated([](auto& j) { j["scripts"][1] = j["scripts"][0]; })),
                    InvariantError);
    CHECK_THROWS_AS(decode_visit(mutated([](auto& j) { j["reported_cores"] = 0; })),
                    InvariantError);
}

TEST_CASE("archive writer and reader stream records through a buffer") {
    gen::Rng rng(7203);
    std::vector<VisitRecord> records;
    for (int i = 0; i < 25; ++i) records.push_back(gen::visit_record(rng));

    std::stringstream buffer;
    ArchiveWriter writer(buffer);
    for (const auto& r : records) writer.write(r);
    CHECK(writer.count() == records.size());

    ArchiveReader reader(buffer);
    std::vector<VisitRecord> back;
    while (auto r = reader.next()) back.push_back(std::move(*r));
    CHECK(back == records);
}

TEST_CASE("archive reader skips blank lines and reports the failing line number") {
    std::stringstream buffer;
    buffer << encode_visit(small_valid_record()) << "\n\n\n"
           << encode_visit(small_valid_record()) << "\n"
           << "garbage\n";
    ArchiveReader reader(buffer);
    CHECK(reader.next().has_value());
    CHECK(reader.next().has_value());
    try {
        reader.next();
        FAIL("expected CodecError");
    } catch (const CodecError& e) {
        CHECK(std::string(e.what()).find("5") != std::string::npos);
    }
}

TEST_CASE("archive files round trip through the filesystem helpers") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "minerscope_archive_test.jsonl";
    gen::Rng rng(7204);
    std::vector<VisitRecord> records;
    for (int i = 0; i < 10; ++i) records.push_back(gen::visit_record(rng));
    {
        ArchiveWriter writer(path);
        for (const auto& r : records) writer.write(r);
    }
    std::vector<VisitRecord> back;
    for_each_record(path, [&](const VisitRecord& r) { back.push_back(r); });
    CHECK(back == records);
    fs::remove(path);
}

TEST_CASE("concurrent writers never interleave lines") {
    std::stringstream buffer;
    ArchiveWriter writer(buffer);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&writer, t] {
            gen::Rng rng(7300 + static_cast<unsigned>(t));
            for (int i = 0; i < 50; ++i) {
                auto r = gen::visit_record(rng);
                r.site = "t" + std::to_string(t) + "-" + std::to_string(i) + ".example";
                writer.write(r);
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(writer.count() == 200);

    ArchiveReader reader(buffer);
    std::set<std::string> sites;
    std::size_t n = 0;
    while (auto r = reader.next()) {
        sites.insert(r->site);
        ++n;
    }
    CHECK(n == 200);
    CHECK(sites.size() == 200);
}
