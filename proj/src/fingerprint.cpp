#include "minerscope/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "minerscope/crypto.hpp"
#include "minerscope/util.hpp"
#include "minerscope/wasm_module.hpp"

namespace minerscope::fingerprint {

using nlohmann::json;

const char* feature_kind_name(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::script_url: return "script_url";
        case FeatureKind::script_hash: return "script_hash";
        case FeatureKind::wasm_codebase_hash: return "wasm_codebase_hash";
    }
    throw std::invalid_argument("unknown feature kind");
}

FeatureKind feature_kind_from(std::string_view name) {
    if (name == "script_url") return FeatureKind::script_url;
    if (name == "script_hash") return FeatureKind::script_hash;
    if (name == "wasm_codebase_hash") return FeatureKind::wasm_codebase_hash;
    throw std::invalid_argument("unknown feature kind '" + std::string(name) + "'");
}

std::set<Feature> extract_features(const VisitRecord& record,
                                   const analysis::MinerVerdict& verdict) {
    if (!verdict.active || !verdict.top)
        throw std::invalid_argument("features come from active miners only");

    std::set<Feature> features;
    const std::string& script_id = verdict.top->script_id;
    for (const auto& script : record.scripts) {
        if (script.script_id != script_id) continue;
        if (script.url != kInlineUrl)
            features.insert({FeatureKind::script_url, strip_scheme(script.url)});
        features.insert({FeatureKind::script_hash, to_hex(script.source_hash)});
        break;
    }
    if (!record.wasm_modules.empty())
        features.insert({FeatureKind::wasm_codebase_hash,
                         hex_digest(wasm::codebase_hash(record.wasm_modules))});
    return features;
}

std::vector<Fingerprint> build_fingerprints(
    std::span<const std::pair<VisitRecord, analysis::MinerVerdict>> miners,
    double min_support_fraction) {
    if (miners.empty()) throw std::invalid_argument("no confirmed miners to generalize");
    if (!(min_support_fraction >= 0 && min_support_fraction <= 1))
        throw std::invalid_argument("min_support_fraction must lie in [0, 1]");

    std::map<Feature, std::set<std::string>> sites_by_feature;
    for (const auto& [record, verdict] : miners)
        for (const Feature& feature : extract_features(record, verdict))
            sites_by_feature[feature].insert(record.site);

    auto threshold = static_cast<std::size_t>(
        std::ceil(min_support_fraction * static_cast<double>(miners.size())));
    threshold = std::max<std::size_t>(threshold, 1);

    std::vector<Fingerprint> prints;
    for (const auto& [feature, sites] : sites_by_feature) {
        if (sites.size() < threshold) continue;
        prints.push_back({feature.kind, feature.value, sites.size()});
    }
    return prints;  // map order: sorted by (kind, value)
}

std::set<std::string> apply_fingerprints(std::span<const VisitRecord> corpus,
                                         std::span<const Fingerprint> prints,
                                         const std::set<std::string>& confirmed) {
    std::unordered_set<std::string> urls, hashes, wasm_hashes;
    for (const auto& print : prints) {
        switch (print.kind) {
            case FeatureKind::script_url: urls.insert(print.value); break;
            case FeatureKind::script_hash: hashes.insert(print.value); break;
            case FeatureKind::wasm_codebase_hash: wasm_hashes.insert(print.value); break;
        }
    }

    std::set<std::string> result = confirmed;
    for (const auto& record : corpus) {
        if (result.contains(record.site)) continue;
        bool matched = false;
        for (const auto& script : record.scripts) {
            if (script.url != kInlineUrl && urls.contains(strip_scheme(script.url))) {
                matched = true;
                break;
            }
            if (hashes.contains(to_hex(script.source_hash))) {
                matched = true;
                break;
            }
        }
        if (!matched && !record.wasm_modules.empty() && !wasm_hashes.empty())
            matched = wasm_hashes.contains(hex_digest(wasm::codebase_hash(record.wasm_modules)));
        if (matched) result.insert(record.site);
    }
    return result;
}

void write_fingerprints(std::ostream& out, std::span<const Fingerprint> prints) {
    for (const auto& print : prints) {
        json line{{"kind", feature_kind_name(print.kind)},
                  {"value", print.value},
                  {"support", print.support}};
        out << line.dump() << '\n';
    }
}

std::vector<Fingerprint> read_fingerprints(std::istream& in) {
    std::vector<Fingerprint> prints;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json parsed = json::parse(line);
            Fingerprint print;
            print.kind = feature_kind_from(parsed.at("kind").get<std::string>());
            print.value = parsed.at("value").get<std::string>();
            print.support = parsed.at("support").get<std::size_t>();
            if (print.value.empty()) throw std::invalid_argument("empty value");
            if (print.support < 1) throw std::invalid_argument("support below 1");
            prints.push_back(std::move(print));
        } catch (const std::exception& e) {
            throw std::runtime_error("fingerprint line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return prints;
}

}  // namespace minerscope::fingerprint
