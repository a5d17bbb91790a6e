#include "minerscope/collector.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <thread>
#include <unordered_map>
#include <utility>

#include <json.hpp>

#include "minerscope/util.hpp"
#include "minerscope/wasm_module.hpp"
#include "minerscope/ws.hpp"

namespace minerscope::collector {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

CrawlConfig phase_config(int phase) {
    CrawlConfig cfg;
    switch (phase) {
        case 1: cfg.profile_ms = 5000; return cfg;
        case 2: cfg.profile_ms = 30000; return cfg;
        default: throw std::invalid_argument("phase must be 1 or 2");
    }
}

std::string inject_core_override(std::uint32_t cores) {
    if (cores == 0) throw std::invalid_argument("cores must be >= 1");
    // The getter is redefined on whichever prototype actually declares the
    // property so instanceof checks and for-in enumeration stay plausible.
    // Falls back to the instance for exotic scopes that inline it.
    std::string count = std::to_string(cores);
    return "(function () {\n"
           "  'use strict';\n"
           "  var value = " + count + ";\n"
           "  var nav = (typeof navigator !== 'undefined') ? navigator\n"
           "          : (typeof self !== 'undefined' ? self.navigator : undefined);\n"
           "  if (!nav) return;\n"
           "  var holder = nav;\n"
           "  for (var p = Object.getPrototypeOf(nav); p; p = Object.getPrototypeOf(p)) {\n"
           "    if (Object.getOwnPropertyDescriptor(p, 'hardwareConcurrency')) { holder = p; break; }\n"
           "  }\n"
           "  Object.defineProperty(holder, 'hardwareConcurrency', {\n"
           "    get: function () { return value; },\n"
           "    configurable: true,\n"
           "    enumerable: true\n"
           "  });\n"
           "})();\n";
}

Endpoint parse_endpoint(const std::string& text) {
    std::string rest = text;
    if (auto pos = rest.find("://"); pos != std::string::npos) rest = rest.substr(pos + 3);
    auto slash = rest.find('/');
    std::string target = slash == std::string::npos ? "/" : rest.substr(slash);
    std::string hostport = rest.substr(0, slash);
    auto colon = hostport.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == hostport.size())
        throw std::invalid_argument("endpoint must be host:port[/path]: " + text);
    unsigned long port = 0;
    try {
        std::size_t used = 0;
        port = std::stoul(hostport.substr(colon + 1), &used);
        if (used != hostport.size() - colon - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw std::invalid_argument("endpoint port is not a number: " + text);
    }
    if (port == 0 || port > 65535) throw std::invalid_argument("endpoint port out of range: " + text);
    return Endpoint{hostport.substr(0, colon), static_cast<std::uint16_t>(port), target};
}

namespace {

constexpr auto kRpcTimeout = std::chrono::seconds(10);

bool is_meta_frame(const std::string& name) {
    return name == "(root)" || name == "(program)" || name == "(idle)" ||
           name == "(garbage collector)";
}

bool is_worker_type(const std::string& type) {
    return type == "worker" || type == "shared_worker" || type == "service_worker";
}

std::string namespaced(const std::string& alias, const std::string& raw) {
    return alias.empty() ? raw : alias + ":" + raw;
}

/// scriptId is a string in debugger events but a bare number in trace
/// call frames; normalize both to the string form.
std::string script_id_of(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
    return {};
}

struct ScriptInfo {
    std::string alias;  // "" for the main session, "w1", "w2", ... for workers
    std::string raw_id;
    std::string url;
    bool wasm = false;
    std::optional<std::string> session_id;  // protocol session that owns the script
};

struct TraceThread {
    struct Node {
        std::string function_name;
        std::string raw_script_id;
        int parent = 0;  // 0 = none
    };
    std::map<int, Node> nodes;
    std::vector<int> samples;
    std::vector<double> deltas_us;
};

/// One visit's control loop: owns the connection, dispatches events, and
/// assembles the record. Single-threaded by construction.
class VisitDriver {
  public:
    explicit VisitDriver(const Endpoint& endpoint) try
        : client_(endpoint.host, endpoint.port, endpoint.target) {
    } catch (const std::exception& e) {
        throw CrawlError(std::string("endpoint unreachable: ") + e.what());
    }

    VisitOutcome run(const std::string& url, const CrawlConfig& cfg) {
        if (cfg.reported_cores == 0) throw std::invalid_argument("reported_cores must be >= 1");
        if (cfg.profile_ms == 0) throw std::invalid_argument("profile_ms must be positive");
        cfg_ = cfg;

        transact("Page.enable", json::object());
        transact("Debugger.enable", json::object());
        transact("Network.enable", json::object());
        transact("Target.setDiscoverTargets", {{"discover", true}});
        // Installed before navigation so no page script ever sees the real
        // core count.
        transact("Page.addScriptToEvaluateOnNewDocument",
                 {{"source", inject_core_override(cfg.reported_cores)}});

        nav_start_ = Clock::now();
        visited_at_ = std::chrono::time_point_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now());
        transact("Page.navigate", {{"url", url}});

        pump(std::chrono::milliseconds(cfg.load_timeout_ms), [this] { return loaded_; });
        double load_ms = loaded_ ? elapsed_ms(nav_start_)
                                 : std::min<double>(cfg.load_timeout_ms, kMaxLoadMs);
        pump(std::chrono::milliseconds(cfg.settle_extra_ms), [] { return false; });

        transact("Tracing.start",
                 {{"traceConfig",
                   {{"includedCategories",
                     json::array({"disabled-by-default-v8.cpu_profiler",
                                  "disabled-by-default-v8.cpu_profiler.hires"})}}}});
        pump(std::chrono::milliseconds(cfg.profile_ms), [] { return false; });
        transact("Tracing.end", json::object());
        if (!pump(kRpcTimeout, [this] { return tracing_complete_; }))
            throw CrawlError("trace never completed");

        fetch_sources();

        VisitRecord record;
        record.site = host_of(url).empty() ? url : host_of(url);
        record.visited_at = visited_at_;
        record.load_ms = load_ms;
        record.partial = !loaded_;
        record.reported_cores = cfg.reported_cores;
        record.worker_count = worker_count_;
        build_scripts(record);
        record.profile = convert_trace();
        record.ws_frames = std::move(ws_frames_);
        validate(record);
        return VisitOutcome{std::move(record), std::move(attach_failures_)};
    }

  private:
    json transact(const std::string& method, json params,
                  const std::optional<std::string>& session = std::nullopt) {
        int id = next_id_++;
        json request{{"id", id}, {"method", method}};
        if (!params.is_null()) request["params"] = std::move(params);
        if (session) request["sessionId"] = *session;
        client_.send_text(request.dump());

        auto deadline = Clock::now() + kRpcTimeout;
        while (Clock::now() < deadline) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                              Clock::now());
            auto text = client_.read_for(std::max(left, std::chrono::milliseconds(1)));
            if (!text) {
                if (client_.closed()) throw CrawlError("endpoint disconnected");
                continue;
            }
            json msg = json::parse(*text, nullptr, false);
            if (msg.is_discarded()) continue;
            if (msg.contains("id") && msg["id"] == id) return msg;
            handle_event(msg);
        }
        throw CrawlError("no response to " + method);
    }

    /// Dispatches events until the predicate holds or the budget runs out.
    /// Worker targets announced meanwhile are attached before returning.
    template <typename Done>
    bool pump(std::chrono::milliseconds budget, Done done) {
        auto deadline = Clock::now() + budget;
        for (;;) {
            drain_attaches();
            if (done()) return true;
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                              Clock::now());
            if (left <= std::chrono::milliseconds::zero()) break;
            auto text = client_.read_for(left);
            if (!text) {
                if (client_.closed()) throw CrawlError("endpoint disconnected");
                continue;
            }
            json msg = json::parse(*text, nullptr, false);
            if (msg.is_discarded()) continue;
            if (msg.contains("id")) continue;  // stray response, nothing waits on it
            handle_event(msg);
        }
        drain_attaches();
        return done();
    }

    /// Events only; must not issue requests (attaches are deferred so this
    /// can run from inside transact()).
    void handle_event(const json& msg) {
        const std::string method = msg.value("method", "");
        const json& params = msg.contains("params") ? msg.at("params") : empty_;
        if (method == "Page.loadEventFired") {
            loaded_ = true;
        } else if (method == "Debugger.scriptParsed") {
            ScriptInfo info;
            if (msg.contains("sessionId")) {
                auto it = session_alias_.find(msg["sessionId"].get<std::string>());
                if (it == session_alias_.end()) return;  // never attached, ignore
                info.alias = it->second;
                info.session_id = msg["sessionId"].get<std::string>();
            }
            info.raw_id = script_id_of(params.value("scriptId", json()));
            if (info.raw_id.empty()) return;
            info.url = params.value("url", "");
            if (info.url.empty()) info.url = kInlineUrl;
            info.wasm = params.value("scriptLanguage", "JavaScript") == "WebAssembly";
            for (const auto& seen : scripts_)
                if (seen.alias == info.alias && seen.raw_id == info.raw_id) return;
            scripts_.push_back(std::move(info));
        } else if (method == "Target.targetCreated") {
            const json& target_info = params.value("targetInfo", json::object());
            if (!is_worker_type(target_info.value("type", ""))) return;
            std::string target_id = target_info.value("targetId", "");
            if (target_id.empty() || !known_targets_.insert(target_id).second) return;
            pending_attach_.push_back(std::move(target_id));
        } else if (method == "Network.webSocketCreated") {
            ws_urls_[params.value("requestId", "")] = params.value("url", "");
        } else if (method == "Network.webSocketFrameSent" ||
                   method == "Network.webSocketFrameReceived") {
            WsFrame frame;
            auto it = ws_urls_.find(params.value("requestId", ""));
            frame.endpoint = it != ws_urls_.end() ? it->second : "unknown";
            frame.direction = method == "Network.webSocketFrameSent" ? WsDirection::sent
                                                                     : WsDirection::received;
            const json& response = params.value("response", json::object());
            frame.binary = response.value("opcode", 1) == 2;
            std::string payload = response.value("payloadData", "");
            if (frame.binary) {
                try {
                    Bytes bytes = base64_decode(payload);
                    frame.payload.assign(bytes.begin(), bytes.end());
                } catch (const std::invalid_argument&) {
                    return;  // garbled frame, drop it
                }
            } else {
                frame.payload = std::move(payload);
            }
            frame.at_ms = elapsed_ms(nav_start_);
            ws_frames_.push_back(std::move(frame));
        } else if (method == "Tracing.dataCollected") {
            const json& value = params.value("value", json::array());
            for (const auto& event : value) collect_trace_event(event);
        } else if (method == "Tracing.tracingComplete") {
            tracing_complete_ = true;
        }
    }

    void drain_attaches() {
        while (!pending_attach_.empty()) {
            std::string target_id = std::move(pending_attach_.front());
            pending_attach_.pop_front();
            json resp = transact("Target.attachToTarget", {{"targetId", target_id},
                                                           {"flatten", true}});
            if (resp.contains("error")) {
                attach_failures_.push_back(target_id);
                continue;
            }
            std::string session_id = resp["result"].value("sessionId", "");
            if (session_id.empty()) {
                attach_failures_.push_back(target_id);
                continue;
            }
            std::string alias = "w" + std::to_string(++worker_count_);
            session_alias_[session_id] = alias;
            transact("Debugger.enable", json::object(), session_id);
        }
    }

    void collect_trace_event(const json& event) {
        if (event.value("name", "") != "ProfileChunk") return;
        auto key = std::pair(event.value("pid", 0), event.value("tid", 0));
        TraceThread& thread = threads_[key];
        const json& data = event.contains("args") ? event["args"].value("data", json::object())
                                                  : empty_;
        const json& profile = data.value("cpuProfile", json::object());
        for (const auto& node : profile.value("nodes", json::array())) {
            TraceThread::Node parsed;
            const json& frame = node.value("callFrame", json::object());
            parsed.function_name = frame.value("functionName", "");
            parsed.raw_script_id = script_id_of(frame.value("scriptId", json()));
            parsed.parent = node.value("parent", 0);
            thread.nodes[node.value("id", 0)] = std::move(parsed);
        }
        for (const auto& sample : profile.value("samples", json::array()))
            thread.samples.push_back(sample.get<int>());
        // timeDeltas sits beside cpuProfile in the trace format, but accept
        // it nested too.
        const json& deltas = data.contains("timeDeltas") ? data["timeDeltas"]
                                                         : profile.value("timeDeltas", json::array());
        for (const auto& delta : deltas) thread.deltas_us.push_back(delta.get<double>());
    }

    void fetch_sources() {
        for (auto& script : scripts_) {
            json resp = transact("Debugger.getScriptSource", {{"scriptId", script.raw_id}},
                                 script.session_id);
            if (resp.contains("error")) continue;
            const json& result = resp["result"];
            if (result.contains("bytecode")) {
                try {
                    wasm_bytes_[namespaced(script.alias, script.raw_id)] =
                        base64_decode(result["bytecode"].get<std::string>());
                    script.wasm = true;
                } catch (const std::invalid_argument&) {
                }
            } else if (result.contains("scriptSource")) {
                sources_[namespaced(script.alias, script.raw_id)] =
                    result["scriptSource"].get<std::string>();
            }
        }
    }

    void build_scripts(VisitRecord& record) {
        for (const auto& script : scripts_) {
            ScriptArtifact artifact;
            artifact.script_id = namespaced(script.alias, script.raw_id);
            artifact.url = script.url;
            artifact.context = script.alias.empty() ? ScriptContext::main_page
                                                    : ScriptContext::worker;
            if (auto it = wasm_bytes_.find(artifact.script_id); it != wasm_bytes_.end()) {
                // Module bytes are not text; keep the hash, drop the source.
                artifact.source_hash = script_source_hash(std::string_view(
                    reinterpret_cast<const char*>(it->second.data()), it->second.size()));
                WasmArtifact wasm_artifact;
                wasm_artifact.origin_script_id = artifact.script_id;
                try {
                    wasm_artifact.function_bodies = wasm::parse_module(it->second).function_bodies;
                } catch (const wasm::ParseError&) {
                }
                if (wasm_artifact.function_bodies.empty() && !it->second.empty())
                    wasm_artifact.function_bodies.push_back(it->second);
                if (!wasm_artifact.function_bodies.empty())
                    record.wasm_modules.push_back(std::move(wasm_artifact));
            } else if (auto source = sources_.find(artifact.script_id); source != sources_.end()) {
                artifact.source = source->second;
                artifact.source_hash = script_source_hash(source->second);
            }
            record.scripts.push_back(std::move(artifact));
        }
    }

    /// Which session alias declared a raw script id; "" entries are the
    /// main page. Workers reuse small V8 ids, so a raw id alone can be
    /// ambiguous across sessions.
    std::map<std::string, std::vector<std::string>> raw_id_owners() const {
        std::map<std::string, std::vector<std::string>> owners;
        for (const auto& script : scripts_) owners[script.raw_id].push_back(script.alias);
        return owners;
    }

    /// Attributes a thread to the session whose declared scripts cover most
    /// of the thread's distinct raw ids; ties prefer the main session.
    std::string thread_alias(const TraceThread& thread,
                             const std::map<std::string, std::vector<std::string>>& owners) const {
        std::map<std::string, std::size_t> votes;
        std::set<std::string> seen;
        for (const auto& [id, node] : thread.nodes) {
            (void)id;
            if (node.raw_script_id.empty() || node.raw_script_id == "0") continue;
            if (!seen.insert(node.raw_script_id).second) continue;
            auto it = owners.find(node.raw_script_id);
            if (it == owners.end()) continue;
            for (const auto& alias : it->second) ++votes[alias];
        }
        std::string best;
        std::size_t best_votes = 0;
        bool first = true;
        for (const auto& [alias, count] : votes) {
            // std::map iterates "" before "w1" < "w2", so the first maximum
            // already encodes the main-session preference.
            if (first || count > best_votes) {
                best = alias;
                best_votes = count;
                first = false;
            }
        }
        return best;
    }

    std::optional<FrameRef> convert_frame(const TraceThread::Node& node, const std::string& alias,
                                          const std::map<std::string, std::vector<std::string>>&
                                              owners) const {
        if (is_meta_frame(node.function_name)) return std::nullopt;
        if (node.raw_script_id.empty() || node.raw_script_id == "0") {
            if (node.function_name == kWasmUnnamed ||
                node.function_name.rfind("wasm-function", 0) == 0)
                return FrameRef{node.function_name, kWasmScriptId};
            return std::nullopt;  // native or builtin frame
        }
        auto it = owners.find(node.raw_script_id);
        if (it == owners.end()) return std::nullopt;  // never announced, unmappable
        const auto& aliases = it->second;
        if (std::find(aliases.begin(), aliases.end(), alias) != aliases.end())
            return FrameRef{node.function_name, namespaced(alias, node.raw_script_id)};
        if (aliases.size() == 1)
            return FrameRef{node.function_name, namespaced(aliases[0], node.raw_script_id)};
        return std::nullopt;  // ambiguous across sessions
    }

    ProfileTrace convert_trace() const {
        auto owners = raw_id_owners();
        struct Agg {
            std::vector<FrameRef> frames;
            std::uint64_t count = 0;
            double total_us = 0;
        };
        std::map<std::string, Agg> aggregates;

        for (const auto& [key, thread] : threads_) {
            (void)key;
            std::string alias = thread_alias(thread, owners);
            std::size_t n = std::min(thread.samples.size(), thread.deltas_us.size());
            for (std::size_t i = 0; i < n; ++i) {
                double dt = thread.deltas_us[i];
                if (dt <= 0) continue;
                auto node_it = thread.nodes.find(thread.samples[i]);
                if (node_it == thread.nodes.end()) continue;

                std::vector<FrameRef> frames;  // leaf first
                std::string stack_key;
                for (const TraceThread::Node* node = &node_it->second;;) {
                    if (auto frame = convert_frame(*node, alias, owners)) {
                        stack_key += frame->function_name;
                        stack_key += '\x1f';
                        stack_key += frame->script_id;
                        stack_key += '\x1e';
                        frames.push_back(std::move(*frame));
                    }
                    if (node->parent == 0) break;
                    auto parent_it = thread.nodes.find(node->parent);
                    if (parent_it == thread.nodes.end()) break;
                    node = &parent_it->second;
                }
                if (frames.empty()) continue;  // idle or pure-native sample

                Agg& agg = aggregates[stack_key];
                if (agg.frames.empty()) agg.frames = std::move(frames);
                agg.count += 1;
                agg.total_us += dt;
            }
        }

        ProfileTrace profile;
        profile.duration_ms = cfg_.profile_ms;
        for (auto& [key, agg] : aggregates) {
            (void)key;
            StackAggregate stack;
            stack.frames = std::move(agg.frames);
            stack.sample_count = agg.count;
            stack.total_ms = agg.total_us / 1000.0;
            profile.stacks.push_back(std::move(stack));
        }
        std::stable_sort(profile.stacks.begin(), profile.stacks.end(),
                         [](const StackAggregate& a, const StackAggregate& b) {
                             return a.total_ms > b.total_ms;
                         });
        return profile;
    }

    static double elapsed_ms(Clock::time_point since) {
        return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
    }

    ws::Client client_;
    CrawlConfig cfg_;
    int next_id_ = 1;
    const json empty_ = json::object();

    bool loaded_ = false;
    bool tracing_complete_ = false;
    Clock::time_point nav_start_{};
    Timestamp visited_at_{};

    std::vector<ScriptInfo> scripts_;
    std::unordered_map<std::string, std::string> sources_;     // namespaced id -> JS text
    std::unordered_map<std::string, Bytes> wasm_bytes_;        // namespaced id -> module bytes
    std::unordered_map<std::string, std::string> ws_urls_;     // requestId -> socket URL
    std::vector<WsFrame> ws_frames_;
    std::map<std::pair<int, int>, TraceThread> threads_;       // (pid, tid) -> chunks

    std::unordered_map<std::string, std::string> session_alias_;
    std::set<std::string> known_targets_;
    std::deque<std::string> pending_attach_;
    std::vector<std::string> attach_failures_;
    std::uint32_t worker_count_ = 0;
};

}  // namespace

VisitOutcome visit(const std::string& url, const CrawlConfig& cfg, const Endpoint& endpoint) {
    VisitDriver driver(endpoint);
    return driver.run(url, cfg);
}

std::vector<CrawlResult> crawl(std::span<const std::string> urls, const CrawlConfig& cfg,
                               const Endpoint& endpoint) {
    if (cfg.parallel_sessions == 0) throw std::invalid_argument("parallel_sessions must be >= 1");
    std::vector<CrawlResult> results(urls.size());
    for (std::size_t i = 0; i < urls.size(); ++i) results[i].url = urls[i];

    std::atomic<std::size_t> next{0};
    auto session = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= urls.size()) return;
            try {
                results[i].outcome = visit(urls[i], cfg, endpoint);
                results[i].ok = true;
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };

    std::size_t n = std::min<std::size_t>(cfg.parallel_sessions, urls.size());
    std::vector<std::thread> sessions;
    for (std::size_t i = 0; i + 1 < n; ++i) sessions.emplace_back(session);
    session();  // this thread works too
    for (auto& thread : sessions) thread.join();
    return results;
}

}  // namespace minerscope::collector
