#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "minerscope/analysis.hpp"
#include "minerscope/telemetry.hpp"

namespace minerscope::economics {

/// Pool payout arithmetic: visitors hash at `hash_rate_hps`, pools pay
/// `payout_xmr_per_mhash` per million hashes, converted at `xmr_usd`.
struct PayoutModel {
    double hash_rate_hps = 80;
    double payout_xmr_per_mhash = 0.00005749;
    double xmr_usd = 225;
};

struct VisitStats {
    std::string site;
    double visits_per_day = 0;
    double avg_duration_s = 0;
};

/// One row of the hashes-per-second benchmark table shipped in data/.
struct CpuBench {
    std::string model;
    double cache_mb = 0;
    double hps_core = 0;
    double hps_cpu = 0;  // all cores busy; never below hps_core
};

struct RevenueEstimate {
    double core_hours_per_day = 0;
    double hashes_per_day = 0;
    double xmr_per_day = 0;
    double usd_per_day = 0;
};

/// Daily revenue if every visit mines for its whole duration.
RevenueEstimate estimate_revenue(const VisitStats& stats, const PayoutModel& model = {});

/// Same pipeline fed directly with aggregate visitor hours per day.
RevenueEstimate upper_bound(double total_visitor_hours_per_day, const PayoutModel& model = {});

/// How much of the whole machine a confirmed miner consumes, and the
/// throttle setting that level implies.
struct ThrottleEstimate {
    double cpu_consumption_pct = 0;  // top load spread over all cores
    double throttle_est = 0;         // in [0, 1]
    bool oversubscribed = false;     // more workers than advertised cores
};

/// Requires an active verdict; throws std::invalid_argument otherwise.
ThrottleEstimate estimate_throttle(const VisitRecord& record,
                                   const analysis::MinerVerdict& verdict);

/// Consumption distribution: ten decile bins plus a catch-all for loads
/// above one full machine.
struct GreedinessHistogram {
    static constexpr std::size_t kOverBucket = 10;
    std::array<std::size_t, 11> bins{};

    bool operator==(const GreedinessHistogram&) const = default;
};

GreedinessHistogram greediness_histogram(std::span<const ThrottleEstimate> estimates);

/// CSV loaders. Headers are mandatory: `site,visits_per_day,avg_duration_s`
/// and `model,cache_mb,hps_core,hps_cpu`. Throw std::runtime_error naming
/// the offending line.
std::vector<VisitStats> load_visit_stats(std::istream& in);
std::vector<CpuBench> load_cpu_bench(std::istream& in);

/// Table-style rounding used by reports: XMR to one decimal, USD whole.
std::string display_xmr(double xmr);
std::string display_usd(double usd);

}  // namespace minerscope::economics
