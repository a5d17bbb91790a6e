#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "minerscope/fingerprint.hpp"
#include "minerscope/telemetry.hpp"

namespace minerscope::report {

/// Thresholds of the full detection pipeline, defaulted to the study
/// values: 5% / 3 workers for candidates, 10% over the long profile for
/// confirmation, 1% support for fingerprints.
struct PipelineConfig {
    double candidate_load_pct = 5.0;
    std::uint32_t candidate_workers = 3;
    double verdict_load_pct = 10.0;
    double fingerprint_fraction = 0.01;
};

struct PipelineResult {
    std::set<std::string> suspicious;  // first-pass candidates
    std::set<std::string> active;      // confirmed by the long profile
    std::set<std::string> total;       // active plus fingerprint matches
    /// Suspicious sites with no usable long-profile record; they stay
    /// suspicious-only instead of failing the run.
    std::vector<std::string> missing_phase2;
    std::vector<fingerprint::Fingerprint> fingerprints;
    std::string summary;  // human-readable counts block

    bool operator==(const PipelineResult&) const = default;
};

/// Full detection run: first-pass heuristics over `corpus1`, long-profile
/// validation over `corpus2` (looked up by site), then fingerprints built
/// from the confirmed miners and applied across both corpora. Guarantees
/// total ⊇ active and active ⊆ suspicious.
PipelineResult run_pipeline(std::span<const VisitRecord> corpus1,
                            std::span<const VisitRecord> corpus2,
                            const PipelineConfig& cfg = {});

/// Site counts per popularity-rank bin: bin 1 covers ranks [1, bin_size],
/// bin 2 (bin_size, 2 x bin_size], and so on. Sites with no rank in
/// `records` land in the unranked bucket. Throws std::invalid_argument
/// when bin_size is zero.
struct RankHistogram {
    std::uint64_t bin_size = 100000;
    std::map<std::uint64_t, std::size_t> bins;  // 1-based bin index -> sites
    std::size_t unranked = 0;

    bool operator==(const RankHistogram&) const = default;
};

RankHistogram rank_histogram(const std::set<std::string>& sites,
                             std::span<const VisitRecord> records,
                             std::uint64_t bin_size = 100000);

/// File-based enrichment; never a live lookup. unknown_sites lists
/// enrichment rows whose site has no record in the corpus (a data-quality
/// warning, not an error).
struct EnrichmentTables {
    std::map<std::string, std::string> geo;                        // site -> country
    std::map<std::string, std::vector<std::string>> categories;    // site -> categories
    std::vector<std::string> unknown_sites;

    bool operator==(const EnrichmentTables&) const = default;
};

/// CSV loaders. Headers are enforced ("site,country" and "site,category"),
/// '#' lines are comments, and errors carry line numbers. A site may repeat
/// in the category file, one row per category.
std::map<std::string, std::string> load_geo_csv(const std::string& path);
std::map<std::string, std::vector<std::string>> load_categories_csv(const std::string& path);

EnrichmentTables make_enrichment(std::map<std::string, std::string> geo,
                                 std::map<std::string, std::vector<std::string>> categories,
                                 const std::set<std::string>& corpus_sites);

struct CountRow {
    std::string name;
    std::size_t count = 0;

    bool operator==(const CountRow&) const = default;
};

/// Country counts over the miner set, count descending, name ascending on
/// ties. Sites without a geo entry are skipped.
std::vector<CountRow> tabulate_geo(const EnrichmentTables& tables,
                                   const std::set<std::string>& miner_sites);

/// Category counts; a site with several categories contributes once to
/// each.
std::vector<CountRow> tabulate_categories(const EnrichmentTables& tables,
                                          const std::set<std::string>& miner_sites);

/// Plot-ready CSV renderings.
std::string histogram_csv(const RankHistogram& histogram);
std::string counts_csv(std::span<const CountRow> rows, const std::string& name_header);

}  // namespace minerscope::report
