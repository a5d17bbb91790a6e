#include "minerscope/analysis.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "minerscope/util.hpp"

namespace minerscope::analysis {

namespace {

/// Per-worker copies of one script get distinct ids but share a source
/// hash; keying on the hash folds their loads together, which is what
/// turns N workers into one N x duty entry.
std::string script_key(const VisitRecord& record, const std::string& script_id) {
    for (const auto& script : record.scripts)
        if (script.script_id == script_id) return to_hex(script.source_hash);
    return script_id;
}

}  // namespace

std::vector<FunctionLoad> function_loads(const VisitRecord& record) {
    if (!record.profile || record.profile->stacks.empty()) return {};
    const ProfileTrace& profile = *record.profile;

    struct Slot {
        FrameRef function;
        double total_ms = 0;
    };
    std::map<std::pair<std::string, std::string>, Slot> slots;

    for (const auto& stack : profile.stacks) {
        if (!(stack.total_ms > 0)) continue;
        const FrameRef* attributed = nullptr;
        for (const auto& frame : stack.frames) {
            if (!frame.is_wasm()) {
                attributed = &frame;
                break;
            }
        }
        FrameRef function = attributed ? *attributed : FrameRef{"wasm-root", kWasmScriptId};
        auto key = std::pair(function.function_name, script_key(record, function.script_id));
        auto [it, inserted] = slots.try_emplace(std::move(key));
        if (inserted) it->second.function = std::move(function);
        it->second.total_ms += stack.total_ms;
    }

    std::vector<FunctionLoad> loads;
    loads.reserve(slots.size());
    for (auto& [key, slot] : slots) {
        FunctionLoad load;
        load.attributed_function = std::move(slot.function);
        load.script_id = load.attributed_function.script_id;
        load.total_ms = slot.total_ms;
        load.load_pct = slot.total_ms / profile.duration_ms * 100.0;
        loads.push_back(std::move(load));
    }
    std::sort(loads.begin(), loads.end(), [](const FunctionLoad& a, const FunctionLoad& b) {
        if (a.total_ms != b.total_ms) return a.total_ms > b.total_ms;
        return a.attributed_function.function_name < b.attributed_function.function_name;
    });
    return loads;
}

CandidateFlags phase1_flags(const VisitRecord& record, double load_threshold_pct,
                            std::uint32_t worker_threshold) {
    CandidateFlags flags;
    for (const auto& load : function_loads(record)) {
        if (load.load_pct > load_threshold_pct) {
            flags.high_load = true;
            break;
        }
    }
    flags.uses_wasm = !record.wasm_modules.empty();
    flags.many_workers = record.worker_count > worker_threshold;
    return flags;
}

MinerVerdict phase2_verdict(const VisitRecord& record, double load_threshold_pct) {
    if (!record.profile) throw std::invalid_argument("record has no profile");

    MinerVerdict verdict;
    verdict.short_profile = record.profile->duration_ms < kVerdictProfileMs;
    std::vector<FunctionLoad> loads = function_loads(record);
    if (loads.empty()) return verdict;

    verdict.top = loads.front();
    verdict.active = verdict.top->load_pct >= load_threshold_pct;
    const std::string& script_id = verdict.top->attributed_function.script_id;
    for (const auto& script : record.scripts) {
        if (script.script_id == script_id) {
            verdict.responsible_script_url = script.url;
            break;
        }
    }
    return verdict;
}

}  // namespace minerscope::analysis
