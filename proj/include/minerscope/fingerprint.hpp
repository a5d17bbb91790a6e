#pragma once

#include <compare>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "minerscope/analysis.hpp"
#include "minerscope/telemetry.hpp"

namespace minerscope::fingerprint {

enum class FeatureKind { script_url, script_hash, wasm_codebase_hash };

const char* feature_kind_name(FeatureKind kind);
FeatureKind feature_kind_from(std::string_view name);  // throws std::invalid_argument

/// A static indicator observed on a confirmed miner: the responsible
/// script's scheme-stripped URL, its source digest, or the digest of the
/// page's whole Wasm code base.
struct Feature {
    FeatureKind kind = FeatureKind::script_url;
    std::string value;

    auto operator<=>(const Feature&) const = default;
};

struct Fingerprint {
    FeatureKind kind = FeatureKind::script_url;
    std::string value;
    std::size_t support = 0;  // distinct confirmed sites exhibiting the feature

    bool operator==(const Fingerprint&) const = default;
};

/// Indicators of one confirmed miner. Requires an active verdict; inline
/// scripts contribute no URL feature.
std::set<Feature> extract_features(const VisitRecord& record,
                                   const analysis::MinerVerdict& verdict);

/// Generalizes features over a confirmed-miner set, keeping those shared
/// by at least ceil(min_support_fraction x miners) distinct sites.
/// Throws std::invalid_argument on an empty input.
std::vector<Fingerprint> build_fingerprints(
    std::span<const std::pair<VisitRecord, analysis::MinerVerdict>> miners,
    double min_support_fraction = 0.01);

/// Sweeps a corpus for fingerprint matches. The result always contains
/// the confirmed set, so widening can only add sites.
std::set<std::string> apply_fingerprints(std::span<const VisitRecord> corpus,
                                         std::span<const Fingerprint> prints,
                                         const std::set<std::string>& confirmed);

/// Newline-delimited persistence of a fingerprint list.
void write_fingerprints(std::ostream& out, std::span<const Fingerprint> prints);
std::vector<Fingerprint> read_fingerprints(std::istream& in);  // throws std::runtime_error

}  // namespace minerscope::fingerprint
