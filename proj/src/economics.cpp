#include "minerscope/economics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace minerscope::economics {

namespace {

void require_model(const PayoutModel& model) {
    if (!(model.hash_rate_hps > 0) || !(model.payout_xmr_per_mhash > 0) ||
        !(model.xmr_usd > 0))
        throw std::invalid_argument("payout model fields must be strictly positive");
}

RevenueEstimate from_core_hours(double core_hours, const PayoutModel& model) {
    RevenueEstimate estimate;
    estimate.core_hours_per_day = core_hours;
    estimate.hashes_per_day = core_hours * 3600 * model.hash_rate_hps;
    estimate.xmr_per_day = estimate.hashes_per_day / 1e6 * model.payout_xmr_per_mhash;
    estimate.usd_per_day = estimate.xmr_per_day * model.xmr_usd;
    return estimate;
}

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

double parse_number(const std::string& text, std::size_t line_no) {
    try {
        std::size_t used = 0;
        double value = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return value;
    } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad number '" + text +
                                 "'");
    }
}

template <typename Row>
std::vector<Row> load_csv(std::istream& in, const std::string& header,
                          Row (*parse_row)(const std::vector<std::string>&, std::size_t)) {
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    std::size_t columns = split_csv_line(header).size();
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
        if (fields.size() != columns)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(columns) + " fields, got " +
                                     std::to_string(fields.size()));
        rows.push_back(parse_row(fields, line_no));
    }
    if (!saw_header) throw std::runtime_error("missing header '" + header + "'");
    return rows;
}

}  // namespace

RevenueEstimate estimate_revenue(const VisitStats& stats, const PayoutModel& model) {
    require_model(model);
    if (stats.visits_per_day < 0 || stats.avg_duration_s < 0)
        throw std::invalid_argument("visit stats must be non-negative");
    return from_core_hours(stats.visits_per_day * stats.avg_duration_s / 3600, model);
}

RevenueEstimate upper_bound(double total_visitor_hours_per_day, const PayoutModel& model) {
    require_model(model);
    if (total_visitor_hours_per_day < 0)
        throw std::invalid_argument("visitor hours must be non-negative");
    return from_core_hours(total_visitor_hours_per_day, model);
}

ThrottleEstimate estimate_throttle(const VisitRecord& record,
                                   const analysis::MinerVerdict& verdict) {
    if (!verdict.active || !verdict.top)
        throw std::invalid_argument("throttle estimation needs an active verdict");
    ThrottleEstimate estimate;
    estimate.cpu_consumption_pct = verdict.top->load_pct / record.reported_cores;
    estimate.throttle_est = 1 - std::min(1.0, estimate.cpu_consumption_pct / 100.0);
    estimate.oversubscribed = record.worker_count > record.reported_cores;
    return estimate;
}

GreedinessHistogram greediness_histogram(std::span<const ThrottleEstimate> estimates) {
    GreedinessHistogram histogram;
    for (const auto& estimate : estimates) {
        double pct = estimate.cpu_consumption_pct;
        std::size_t bin;
        if (pct > 100)
            bin = GreedinessHistogram::kOverBucket;
        else
            bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(pct / 10)));
        ++histogram.bins[bin];
    }
    return histogram;
}

std::vector<VisitStats> load_visit_stats(std::istream& in) {
    return load_csv<VisitStats>(
        in, "site,visits_per_day,avg_duration_s",
        +[](const std::vector<std::string>& fields, std::size_t line_no) {
            VisitStats stats;
            stats.site = fields[0];
            if (stats.site.empty())
                throw std::runtime_error("line " + std::to_string(line_no) + ": empty site");
            stats.visits_per_day = parse_number(fields[1], line_no);
            stats.avg_duration_s = parse_number(fields[2], line_no);
            if (stats.visits_per_day < 0 || stats.avg_duration_s < 0)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": negative value");
            return stats;
        });
}

std::vector<CpuBench> load_cpu_bench(std::istream& in) {
    return load_csv<CpuBench>(
        in, "model,cache_mb,hps_core,hps_cpu",
        +[](const std::vector<std::string>& fields, std::size_t line_no) {
            CpuBench bench;
            bench.model = fields[0];
            if (bench.model.empty())
                throw std::runtime_error("line " + std::to_string(line_no) + ": empty model");
            bench.cache_mb = parse_number(fields[1], line_no);
            bench.hps_core = parse_number(fields[2], line_no);
            bench.hps_cpu = parse_number(fields[3], line_no);
            if (bench.hps_cpu < bench.hps_core)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": hps_cpu below hps_core");
            return bench;
        });
}

std::string display_xmr(double xmr) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.1f", xmr);
    return buffer;
}

std::string display_usd(double usd) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.0f", usd);
    return buffer;
}

}  // namespace minerscope::economics
