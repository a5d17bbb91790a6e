#pragma once

#include <optional>
#include <string>
#include <vector>

#include "minerscope/telemetry.hpp"

namespace minerscope::analysis {

/// Default thresholds of the two detection phases. Loads are percentages
/// of a single core, so values above 100 mean more than one busy core.
inline constexpr double kCandidateLoadPct = 5.0;
inline constexpr std::uint32_t kCandidateWorkers = 3;
inline constexpr double kVerdictLoadPct = 10.0;
inline constexpr double kVerdictProfileMs = 30000.0;

/// CPU time attributed to one function across every stack it tops after
/// Wasm frames are folded into their nearest JS caller.
struct FunctionLoad {
    FrameRef attributed_function;
    std::string script_id;  // of the representative frame when copies merged
    double total_ms = 0;
    double load_pct = 0;  // total_ms / profile duration x 100, per core

    bool operator==(const FunctionLoad&) const = default;
};

struct CandidateFlags {
    bool high_load = false;
    bool uses_wasm = false;
    bool many_workers = false;

    bool candidate() const { return high_load || uses_wasm || many_workers; }
    bool operator==(const CandidateFlags&) const = default;
};

struct MinerVerdict {
    bool active = false;
    std::optional<FunctionLoad> top;
    std::optional<std::string> responsible_script_url;
    bool short_profile = false;  // profile shorter than the validation window
};

/// Per-function load table, heaviest first. Wasm-only frames attribute to
/// the nearest named JS ancestor, or a "wasm-root" pseudo-function when
/// the whole stack is Wasm. Identical functions in per-worker copies of
/// one script (same source hash) aggregate together. Returns an empty
/// list when the record has no profile or no samples.
std::vector<FunctionLoad> function_loads(const VisitRecord& record);

/// First-phase heuristics. Any raised flag marks the site a candidate.
CandidateFlags phase1_flags(const VisitRecord& record,
                            double load_threshold_pct = kCandidateLoadPct,
                            std::uint32_t worker_threshold = kCandidateWorkers);

/// Second-phase validation over a long profile: active exactly when the
/// heaviest function sustains at least `load_threshold_pct` of one core.
/// Throws std::invalid_argument when the record carries no profile.
MinerVerdict phase2_verdict(const VisitRecord& record,
                            double load_threshold_pct = kVerdictLoadPct);

}  // namespace minerscope::analysis
