#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "minerscope/telemetry.hpp"

namespace minerscope::pool {

struct PoolJob {
    std::string job_id;
    std::string blob;    // hex
    std::string target;  // exactly 8 hex chars, little-endian u32

    bool operator==(const PoolJob&) const = default;
};

/// Worker duty-cycle model: a miner alternates hash_ms of work with a
/// sleep of hash_ms * throttle / (1 - throttle), capped at sleep_cap_ms.
/// The cap is why heavily throttled miners still load the CPU noticeably.
struct ThrottleSpec {
    double throttle = 0;          // in [0, 1)
    double sleep_cap_ms = 2000;
    double hash_ms = 100;
};

/// Fraction of wall time a worker spends hashing under the given throttle.
double duty_cycle(const ThrottleSpec& spec);

/// Hashes a pool credits for one share at the given target:
/// 2^32 / (LE-uint32(target) + 1), rounded to nearest, at least 1.
std::uint64_t credited_hashes(std::span<const std::uint8_t, 4> target_bytes);
std::uint64_t credited_hashes_hex(std::string_view target_hex);  // throws on bad hex

/// One synthetic mining page: a labeled VisitRecord with worker scripts,
/// shared Wasm, a dominant profiled call stack per worker, and pool
/// WebSocket traffic. `variant` switches between two JS wrapper codebases
/// that drive the identical Wasm.
VisitRecord synth_visit(const ThrottleSpec& spec, std::uint32_t cores, double profile_ms,
                        int variant = 1);

enum class BenignKind { idle, burst, many_workers, wasm_codec };

/// Negative controls: pages that trip individual phase-1 heuristics but
/// never the phase-2 load validation.
VisitRecord synth_benign(BenignKind kind, double profile_ms = 30000);

struct TestbedEntry {
    std::string site;
    ThrottleSpec spec;
    int variant = 1;
};

/// The 24-page validation grid: throttles {0, 0.1 .. 0.9, 0.95, 0.99}
/// crossed with both wrapper variants.
std::vector<TestbedEntry> testbed_specs();

/// Full labeled ground truth: the 24 miner pages (given cores/profile
/// length) plus one benign page of each kind.
std::vector<VisitRecord> make_testbed_corpus(std::uint32_t cores = 4, double profile_ms = 30000,
                                             bool include_benign = true);

/// Wallet used in the even-variant testbed handshakes; parses as a valid
/// mainnet-prefix address.
const std::string& testbed_wallet();

}  // namespace minerscope::pool
