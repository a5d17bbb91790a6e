#include "minerscope/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "minerscope/analysis.hpp"

namespace minerscope::report {

namespace {

std::string trim(const std::string& text) {
    auto begin = text.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    auto end = text.find_last_not_of(" \t\r");
    return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream stream(line);
    std::string field;
    while (std::getline(stream, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

/// Two-column CSV with an enforced header; emits one callback per data row.
template <typename OnRow>
void load_two_column_csv(const std::string& path, const std::string& header, OnRow on_row) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        if (!saw_header) {
            if (stripped != header)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": expected header '" + header + "'");
            saw_header = true;
            continue;
        }
        std::vector<std::string> fields = split_csv_line(stripped);
        if (fields.size() != 2)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected 2 fields, got " +
                                     std::to_string(fields.size()));
        if (fields[0].empty() || fields[1].empty())
            throw std::runtime_error("line " + std::to_string(line_no) + ": empty field");
        on_row(fields[0], fields[1], line_no);
    }
    if (!saw_header) throw std::runtime_error("missing header '" + header + "'");
}

std::vector<CountRow> sorted_rows(const std::map<std::string, std::size_t>& counts) {
    std::vector<CountRow> rows;
    for (const auto& [name, count] : counts) rows.push_back({name, count});
    std::stable_sort(rows.begin(), rows.end(), [](const CountRow& a, const CountRow& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.name < b.name;
    });
    return rows;
}

}  // namespace

PipelineResult run_pipeline(std::span<const VisitRecord> corpus1,
                            std::span<const VisitRecord> corpus2, const PipelineConfig& cfg) {
    PipelineResult result;

    for (const auto& record : corpus1) {
        auto flags =
            analysis::phase1_flags(record, cfg.candidate_load_pct, cfg.candidate_workers);
        if (flags.candidate()) result.suspicious.insert(record.site);
    }

    // First usable long-profile record per site.
    std::unordered_map<std::string, const VisitRecord*> revisits;
    for (const auto& record : corpus2)
        if (record.profile && !revisits.count(record.site)) revisits[record.site] = &record;

    std::vector<std::pair<VisitRecord, analysis::MinerVerdict>> confirmed;
    for (const auto& site : result.suspicious) {
        auto it = revisits.find(site);
        if (it == revisits.end()) {
            result.missing_phase2.push_back(site);
            continue;
        }
        auto verdict = analysis::phase2_verdict(*it->second, cfg.verdict_load_pct);
        if (verdict.active) {
            result.active.insert(site);
            confirmed.emplace_back(*it->second, std::move(verdict));
        }
    }

    if (!confirmed.empty())
        result.fingerprints = fingerprint::build_fingerprints(confirmed, cfg.fingerprint_fraction);

    std::vector<VisitRecord> combined(corpus1.begin(), corpus1.end());
    combined.insert(combined.end(), corpus2.begin(), corpus2.end());
    result.total = fingerprint::apply_fingerprints(combined, result.fingerprints, result.active);

    std::ostringstream summary;
    summary << "suspicious: " << result.suspicious.size() << "\n"
            << "active: " << result.active.size() << "\n"
            << "total (with fingerprint matches): " << result.total.size() << "\n"
            << "fingerprints: " << result.fingerprints.size() << "\n"
            << "missing long-profile records: " << result.missing_phase2.size() << "\n";
    for (const auto& site : result.missing_phase2)
        summary << "  no long profile for " << site << ", kept suspicious-only\n";
    result.summary = summary.str();
    return result;
}

RankHistogram rank_histogram(const std::set<std::string>& sites,
                             std::span<const VisitRecord> records, std::uint64_t bin_size) {
    if (bin_size == 0) throw std::invalid_argument("bin_size must be positive");
    std::unordered_map<std::string, std::uint64_t> ranks;
    for (const auto& record : records)
        if (record.rank && !ranks.count(record.site)) ranks[record.site] = *record.rank;

    RankHistogram histogram;
    histogram.bin_size = bin_size;
    for (const auto& site : sites) {
        auto it = ranks.find(site);
        if (it == ranks.end()) {
            ++histogram.unranked;
            continue;
        }
        ++histogram.bins[(it->second - 1) / bin_size + 1];
    }
    return histogram;
}

std::map<std::string, std::string> load_geo_csv(const std::string& path) {
    std::map<std::string, std::string> geo;
    load_two_column_csv(path, "site,country",
                        [&](const std::string& site, const std::string& country,
                            std::size_t line_no) {
                            if (!geo.emplace(site, country).second)
                                throw std::runtime_error("line " + std::to_string(line_no) +
                                                         ": duplicate site '" + site + "'");
                        });
    return geo;
}

std::map<std::string, std::vector<std::string>> load_categories_csv(const std::string& path) {
    std::map<std::string, std::vector<std::string>> categories;
    load_two_column_csv(path, "site,category",
                        [&](const std::string& site, const std::string& category,
                            std::size_t line_no) {
                            auto& list = categories[site];
                            if (std::find(list.begin(), list.end(), category) != list.end())
                                throw std::runtime_error("line " + std::to_string(line_no) +
                                                         ": duplicate category '" + category +
                                                         "' for '" + site + "'");
                            list.push_back(category);
                        });
    return categories;
}

EnrichmentTables make_enrichment(std::map<std::string, std::string> geo,
                                 std::map<std::string, std::vector<std::string>> categories,
                                 const std::set<std::string>& corpus_sites) {
    EnrichmentTables tables;
    tables.geo = std::move(geo);
    tables.categories = std::move(categories);
    std::set<std::string> unknown;
    for (const auto& [site, country] : tables.geo) {
        (void)country;
        if (!corpus_sites.count(site)) unknown.insert(site);
    }
    for (const auto& [site, list] : tables.categories) {
        (void)list;
        if (!corpus_sites.count(site)) unknown.insert(site);
    }
    tables.unknown_sites.assign(unknown.begin(), unknown.end());
    return tables;
}

std::vector<CountRow> tabulate_geo(const EnrichmentTables& tables,
                                   const std::set<std::string>& miner_sites) {
    std::map<std::string, std::size_t> counts;
    for (const auto& site : miner_sites) {
        auto it = tables.geo.find(site);
        if (it != tables.geo.end()) ++counts[it->second];
    }
    return sorted_rows(counts);
}

std::vector<CountRow> tabulate_categories(const EnrichmentTables& tables,
                                          const std::set<std::string>& miner_sites) {
    std::map<std::string, std::size_t> counts;
    for (const auto& site : miner_sites) {
        auto it = tables.categories.find(site);
        if (it == tables.categories.end()) continue;
        for (const auto& category : it->second) ++counts[category];
    }
    return sorted_rows(counts);
}

std::string histogram_csv(const RankHistogram& histogram) {
    std::ostringstream out;
    out << "rank_bucket,sites\n";
    for (const auto& [bin, count] : histogram.bins) {
        std::uint64_t lo = (bin - 1) * histogram.bin_size + 1;
        std::uint64_t hi = bin * histogram.bin_size;
        out << lo << "-" << hi << "," << count << "\n";
    }
    out << "unranked," << histogram.unranked << "\n";
    return out.str();
}

std::string counts_csv(std::span<const CountRow> rows, const std::string& name_header) {
    std::ostringstream out;
    out << name_header << ",sites\n";
    for (const auto& row : rows) out << row.name << "," << row.count << "\n";
    return out.str();
}

}  // namespace minerscope::report
