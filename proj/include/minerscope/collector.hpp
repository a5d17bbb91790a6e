#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "minerscope/telemetry.hpp"

namespace minerscope::collector {

/// Per-visit crawl parameters. The two stock profiles are 5 s for the wide
/// first-pass sweep and 30 s for the validation revisit, but any positive
/// duration is accepted.
struct CrawlConfig {
    std::uint32_t load_timeout_ms = 30000;  // give up waiting for the load event after this
    std::uint32_t settle_extra_ms = 3000;   // grace period after load before profiling
    std::uint32_t profile_ms = 5000;
    std::uint32_t reported_cores = 4;  // value the visited page sees as core count
    std::uint32_t parallel_sessions = 1;
};

/// Stock configs: phase 1 profiles for 5 s, phase 2 for 30 s. Throws
/// std::invalid_argument for any other phase.
CrawlConfig phase_config(int phase);

/// Page-world script that pins the navigator core-count getter to `cores`.
/// Safe to evaluate repeatedly; works in both window and worker scopes.
/// Must be installed before any page script runs. Throws
/// std::invalid_argument when cores == 0.
std::string inject_core_override(std::uint32_t cores);

/// Debugging-protocol endpoint. parse_endpoint accepts "ws://host:port/path",
/// "host:port/path", or "host:port".
struct Endpoint {
    std::string host;
    std::uint16_t port = 0;
    std::string target = "/";
};

Endpoint parse_endpoint(const std::string& text);  // throws std::invalid_argument

struct CrawlError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A visit plus the per-target failures that did not abort it.
struct VisitOutcome {
    VisitRecord record;
    std::vector<std::string> attach_failures;  // target ids the endpoint refused to attach
};

/// Drives one page visit over the endpoint: installs the core override,
/// navigates, attaches every announced worker target, profiles for
/// cfg.profile_ms, and converts the trace into the record's stack
/// aggregates. A navigation timeout still yields a record, flagged partial.
/// Throws CrawlError when the endpoint is unreachable or disconnects.
VisitOutcome visit(const std::string& url, const CrawlConfig& cfg, const Endpoint& endpoint);

/// One crawl slot: either an outcome or the error that replaced it.
struct CrawlResult {
    std::string url;
    bool ok = false;
    VisitOutcome outcome;  // valid only when ok
    std::string error;     // set only when !ok
};

/// Visits every URL using up to cfg.parallel_sessions concurrent sessions,
/// each with its own endpoint connection. Failed visits are reported in
/// their slot instead of aborting the batch. Results keep input order.
std::vector<CrawlResult> crawl(std::span<const std::string> urls, const CrawlConfig& cfg,
                               const Endpoint& endpoint);

}  // namespace minerscope::collector
