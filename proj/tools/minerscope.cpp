// Command-line front end: every analysis stage as a verb over the
// newline-delimited visit archive format.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "minerscope/analysis.hpp"
#include "minerscope/archive.hpp"
#include "minerscope/blacklist.hpp"
#include "minerscope/collector.hpp"
#include "minerscope/economics.hpp"
#include "minerscope/fingerprint.hpp"
#include "minerscope/pool.hpp"
#include "minerscope/report.hpp"
#include "minerscope/similarity.hpp"
#include "minerscope/telemetry.hpp"
#include "minerscope/wallet.hpp"
#include "minerscope/wasm_module.hpp"

namespace {

using namespace minerscope;
using nlohmann::json;

/// Thresholds configurable through --config; defaults match the shipped
/// data/default.conf.
struct Config {
    double candidate_load_pct = 5.0;
    std::uint32_t candidate_workers = 3;
    double verdict_load_pct = 10.0;
    double fingerprint_fraction = 0.01;
    double cluster_cut = similarity::kDefaultCut;
    economics::PayoutModel payout;
    std::uint64_t rank_bin_size = 100000;
};

std::string trim(const std::string& text) {
    auto begin = text.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    auto end = text.find_last_not_of(" \t\r");
    return text.substr(begin, end - begin + 1);
}

Config load_config(const std::string& path) {
    Config cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + " line " + std::to_string(line_no) +
                                     ": expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        double number = 0;
        try {
            std::size_t used = 0;
            number = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw std::runtime_error(path + " line " + std::to_string(line_no) +
                                     ": bad number '" + value + "'");
        }
        if (key == "candidate_load_pct")
            cfg.candidate_load_pct = number;
        else if (key == "candidate_workers")
            cfg.candidate_workers = static_cast<std::uint32_t>(number);
        else if (key == "verdict_load_pct")
            cfg.verdict_load_pct = number;
        else if (key == "fingerprint_fraction")
            cfg.fingerprint_fraction = number;
        else if (key == "cluster_cut")
            cfg.cluster_cut = number;
        else if (key == "hash_rate_hps")
            cfg.payout.hash_rate_hps = number;
        else if (key == "payout_xmr_per_mhash")
            cfg.payout.payout_xmr_per_mhash = number;
        else if (key == "xmr_usd")
            cfg.payout.xmr_usd = number;
        else if (key == "rank_bin_size")
            cfg.rank_bin_size = static_cast<std::uint64_t>(number);
        else
            throw std::runtime_error(path + " line " + std::to_string(line_no) +
                                     ": unknown key '" + key + "'");
    }
    return cfg;
}

std::vector<VisitRecord> load_archive(const std::string& path) {
    if (path.empty()) throw std::runtime_error("--in <archive> is required for this verb");
    std::vector<VisitRecord> records;
    ArchiveReader reader{std::filesystem::path(path)};
    while (auto record = reader.next()) records.push_back(std::move(*record));
    return records;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        std::string stripped = trim(line);
        if (!stripped.empty() && stripped.front() != '#') lines.push_back(stripped);
    }
    return lines;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

/// Writes to --out when given, stdout otherwise.
void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    open_out(out_path) << content;
}

int run_collect(const std::string& endpoint_text, int phase, std::uint32_t cores,
                std::uint32_t parallel, const std::vector<std::string>& urls,
                const std::string& urls_file, const std::string& out_path) {
    std::vector<std::string> targets = urls;
    if (!urls_file.empty())
        for (auto& url : read_lines(urls_file)) targets.push_back(url);
    if (targets.empty()) throw std::runtime_error("no URLs given (positional or --urls list)");
    if (out_path.empty()) throw std::runtime_error("--out <archive> is required");

    collector::CrawlConfig cfg = collector::phase_config(phase);
    cfg.reported_cores = cores;
    cfg.parallel_sessions = parallel;
    collector::Endpoint endpoint = collector::parse_endpoint(endpoint_text);

    ArchiveWriter writer{std::filesystem::path(out_path)};
    auto results = collector::crawl(targets, cfg, endpoint);
    std::size_t failed = 0;
    for (const auto& result : results) {
        if (!result.ok) {
            ++failed;
            std::cerr << "visit failed: " << result.url << ": " << result.error << "\n";
            continue;
        }
        writer.write(result.outcome.record);
        for (const auto& target : result.outcome.attach_failures)
            std::cerr << result.url << ": could not attach worker target " << target << "\n";
    }
    std::cout << "collected " << writer.count() << " of " << targets.size() << " visits";
    if (failed) std::cout << " (" << failed << " failed)";
    std::cout << "\n";
    return failed == targets.size() && !targets.empty() ? 1 : 0;
}

void run_phase1(const Config& cfg, const std::string& in_path, const std::string& out_path) {
    std::ostringstream out;
    std::size_t candidates = 0;
    for (const auto& record : load_archive(in_path)) {
        auto flags =
            analysis::phase1_flags(record, cfg.candidate_load_pct, cfg.candidate_workers);
        json line{{"site", record.site},
                  {"high_load", flags.high_load},
                  {"uses_wasm", flags.uses_wasm},
                  {"many_workers", flags.many_workers},
                  {"candidate", flags.candidate()}};
        out << line.dump() << "\n";
        if (flags.candidate()) ++candidates;
    }
    emit(out_path, out.str());
    std::cerr << candidates << " candidate site(s)\n";
}

void run_phase2(const Config& cfg, const std::string& in_path, const std::string& out_path) {
    std::ostringstream out;
    std::size_t active = 0;
    for (const auto& record : load_archive(in_path)) {
        json line{{"site", record.site}};
        if (!record.profile) {
            line["error"] = "no profile";
        } else {
            auto verdict = analysis::phase2_verdict(record, cfg.verdict_load_pct);
            line["active"] = verdict.active;
            line["short_profile"] = verdict.short_profile;
            if (verdict.top) {
                line["function"] = verdict.top->attributed_function.function_name;
                line["load_pct"] = verdict.top->load_pct;
            }
            if (verdict.responsible_script_url)
                line["responsible_script_url"] = *verdict.responsible_script_url;
            if (verdict.active) ++active;
        }
        out << line.dump() << "\n";
    }
    emit(out_path, out.str());
    std::cerr << active << " active miner(s)\n";
}

/// Recomputes long-profile verdicts and generalizes the confirmed set.
void run_fingerprint_build(const Config& cfg, const std::string& in_path,
                           const std::string& out_path) {
    std::vector<std::pair<VisitRecord, analysis::MinerVerdict>> confirmed;
    for (auto& record : load_archive(in_path)) {
        if (!record.profile) continue;
        auto verdict = analysis::phase2_verdict(record, cfg.verdict_load_pct);
        if (verdict.active) confirmed.emplace_back(std::move(record), std::move(verdict));
    }
    if (confirmed.empty()) throw std::runtime_error("no active miners in " + in_path);
    auto prints = fingerprint::build_fingerprints(confirmed, cfg.fingerprint_fraction);
    std::ostringstream out;
    fingerprint::write_fingerprints(out, prints);
    emit(out_path, out.str());
    std::cerr << prints.size() << " fingerprint(s) from " << confirmed.size() << " miner(s)\n";
}

void run_fingerprint_apply(const std::string& in_path, const std::string& prints_path,
                           const std::string& confirmed_path, const std::string& out_path) {
    auto corpus = load_archive(in_path);
    std::ifstream prints_in(prints_path);
    if (!prints_in) throw std::runtime_error("cannot open " + prints_path);
    auto prints = fingerprint::read_fingerprints(prints_in);
    std::set<std::string> confirmed;
    if (!confirmed_path.empty())
        for (auto& site : read_lines(confirmed_path)) confirmed.insert(site);
    auto sites = fingerprint::apply_fingerprints(corpus, prints, confirmed);
    std::ostringstream out;
    for (const auto& site : sites) out << site << "\n";
    emit(out_path, out.str());
    std::cerr << sites.size() << " site(s) matched\n";
}

void run_detect(const Config& cfg, const std::string& in_path, const std::string& revisits_path,
                const std::string& out_path, const std::string& sites_out,
                const std::string& prints_out) {
    auto corpus1 = load_archive(in_path);
    auto corpus2 = revisits_path.empty() ? corpus1 : load_archive(revisits_path);
    report::PipelineConfig pipeline_cfg;
    pipeline_cfg.candidate_load_pct = cfg.candidate_load_pct;
    pipeline_cfg.candidate_workers = cfg.candidate_workers;
    pipeline_cfg.verdict_load_pct = cfg.verdict_load_pct;
    pipeline_cfg.fingerprint_fraction = cfg.fingerprint_fraction;
    auto result = report::run_pipeline(corpus1, corpus2, pipeline_cfg);

    std::cout << result.summary;
    if (!out_path.empty()) open_out(out_path) << result.summary;
    if (!sites_out.empty()) {
        auto out = open_out(sites_out);
        for (const auto& site : result.total) out << site << "\n";
    }
    if (!prints_out.empty()) {
        auto out = open_out(prints_out);
        fingerprint::write_fingerprints(out, result.fingerprints);
    }
}

void run_wallets(const std::string& in_path, const std::string& prefixes_path,
                 const std::string& out_path) {
    wallet::PrefixTable prefixes = prefixes_path.empty()
                                       ? wallet::PrefixTable::defaults()
                                       : wallet::PrefixTable::load_file(prefixes_path);
    std::ostringstream out;
    std::size_t with_identity = 0;
    for (const auto& record : load_archive(in_path)) {
        auto scan = wallet::scan_frames(record.ws_frames, prefixes);
        if (scan.wallets.empty() && scan.sitekeys.empty() && scan.pools.empty()) continue;
        json line{{"site", record.site},
                  {"wallets", json::array()},
                  {"sitekeys", scan.sitekeys},
                  {"pools", scan.pools}};
        for (const auto& address : scan.wallets)
            line["wallets"].push_back(
                {{"text", address.text},
                 {"currency", std::string(wallet::currency_name(address.currency))}});
        out << line.dump() << "\n";
        ++with_identity;
    }
    emit(out_path, out.str());
    std::cerr << with_identity << " site(s) with mining identities\n";
}

void run_revenue(const Config& cfg, const std::string& stats_path, const std::string& out_path) {
    std::ifstream in(stats_path);
    if (!in) throw std::runtime_error("cannot open " + stats_path);
    auto stats = economics::load_visit_stats(in);

    std::ostringstream out;
    out << "site,core_hours_per_day,hashes_per_day,xmr_per_day,usd_per_day\n";
    economics::RevenueEstimate total;
    for (const auto& row : stats) {
        auto estimate = economics::estimate_revenue(row, cfg.payout);
        out << row.site << "," << estimate.core_hours_per_day << "," << estimate.hashes_per_day
            << "," << estimate.xmr_per_day << "," << estimate.usd_per_day << "\n";
        total.core_hours_per_day += estimate.core_hours_per_day;
        total.hashes_per_day += estimate.hashes_per_day;
        total.xmr_per_day += estimate.xmr_per_day;
        total.usd_per_day += estimate.usd_per_day;
    }
    out << "TOTAL," << total.core_hours_per_day << "," << total.hashes_per_day << ","
        << total.xmr_per_day << "," << total.usd_per_day << "\n";
    emit(out_path, out.str());
    std::cerr << "total " << economics::display_xmr(total.xmr_per_day) << " XMR/day (~$"
              << economics::display_usd(total.usd_per_day) << ")\n";
}

void run_cluster(const Config& cfg, const std::string& in_path, const std::string& what,
                 const std::string& out_path, const std::string& matrix_out) {
    auto corpus = load_archive(in_path);
    std::vector<std::string> ids;
    std::vector<similarity::NGramVector> samples;
    if (what == "js") {
        for (const auto& record : corpus)
            for (const auto& script : record.scripts) {
                if (!script.source) continue;
                ids.push_back(record.site + "#" + script.script_id);
                samples.push_back(similarity::vectorize(*script.source));
            }
    } else if (what == "wasm") {
        for (const auto& record : corpus) {
            if (record.wasm_modules.empty()) continue;
            Bytes merged = wasm::merged_codebase(record.wasm_modules);
            ids.push_back(record.site);
            samples.push_back(similarity::vectorize(similarity::hex_tokens(merged)));
        }
    } else {
        throw std::runtime_error("--what must be js or wasm");
    }
    if (samples.empty()) throw std::runtime_error("no " + what + " samples in " + in_path);

    auto clusters = similarity::cluster(samples, cfg.cluster_cut);
    std::ostringstream out;
    similarity::write_clusters_csv(out, clusters, ids);
    emit(out_path, out.str());
    if (!matrix_out.empty()) {
        auto matrix = similarity::similarity_matrix(samples);
        auto out_file = open_out(matrix_out);
        similarity::write_matrix_csv(out_file, matrix, ids);
    }
    std::cerr << samples.size() << " sample(s) in " << clusters.cluster_count()
              << " cluster(s) at cut " << cfg.cluster_cut << "\n";
}

void run_blacklist(const std::string& in_path, const std::vector<std::string>& list_paths,
                   const std::string& ours_path, const std::string& out_path) {
    if (list_paths.empty()) throw std::runtime_error("at least one --lists file is required");
    auto corpus = load_archive(in_path);
    std::map<std::string, std::vector<blacklist::FilterRule>> lists;
    for (const auto& path : list_paths) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        auto parsed = blacklist::parse_rules(buffer.str());
        std::string name = std::filesystem::path(path).stem().string();
        std::cerr << name << ": " << parsed.rules.size() << " rule(s), " << parsed.comments
                  << " comment(s), " << parsed.cosmetic << " cosmetic, " << parsed.exceptions
                  << " exception(s), " << parsed.malformed << " malformed\n";
        lists[name] = std::move(parsed.rules);
    }
    std::set<std::string> ours;
    if (!ours_path.empty())
        for (auto& site : read_lines(ours_path)) ours.insert(site);
    auto agreements = blacklist::compare(ours, lists, corpus);
    std::ostringstream out;
    blacklist::write_agreement_csv(out, agreements);
    emit(out_path, out.str());
}

void run_report(const Config& cfg, const std::string& in_path, const std::string& sites_path,
                const std::string& geo_path, const std::string& categories_path,
                const std::string& out_dir) {
    auto corpus = load_archive(in_path);
    std::set<std::string> sites;
    if (sites_path.empty())
        for (const auto& record : corpus) sites.insert(record.site);
    else
        for (auto& site : read_lines(sites_path)) sites.insert(site);

    std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
    std::filesystem::create_directories(dir);

    auto histogram = report::rank_histogram(sites, corpus, cfg.rank_bin_size);
    open_out((dir / "ranks.csv").string()) << report::histogram_csv(histogram);

    if (!geo_path.empty() || !categories_path.empty()) {
        std::set<std::string> corpus_sites;
        for (const auto& record : corpus) corpus_sites.insert(record.site);
        auto tables = report::make_enrichment(
            geo_path.empty() ? std::map<std::string, std::string>{}
                             : report::load_geo_csv(geo_path),
            categories_path.empty() ? std::map<std::string, std::vector<std::string>>{}
                                    : report::load_categories_csv(categories_path),
            corpus_sites);
        for (const auto& site : tables.unknown_sites)
            std::cerr << "warning: enrichment references unknown site " << site << "\n";
        if (!geo_path.empty()) {
            auto rows = report::tabulate_geo(tables, sites);
            open_out((dir / "countries.csv").string()) << report::counts_csv(rows, "country");
        }
        if (!categories_path.empty()) {
            auto rows = report::tabulate_categories(tables, sites);
            open_out((dir / "categories.csv").string()) << report::counts_csv(rows, "category");
        }
    }
    std::cerr << "report written to " << dir.string() << "\n";
}

void run_testbed(std::uint32_t cores, double profile_ms, bool no_benign,
                 const std::string& out_path) {
    if (out_path.empty()) throw std::runtime_error("--out <archive> is required");
    ArchiveWriter writer{std::filesystem::path(out_path)};
    for (const auto& record : pool::make_testbed_corpus(cores, profile_ms, !no_benign))
        writer.write(record);
    std::cerr << "wrote " << writer.count() << " labeled record(s)\n";
}

Bytes read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string data = buffer.str();
    return Bytes(data.begin(), data.end());
}

void run_wasm_hash(const std::vector<std::string>& files) {
    std::vector<WasmArtifact> artifacts;
    for (const auto& path : files) {
        WasmArtifact artifact;
        artifact.origin_script_id = path;
        artifact.function_bodies = wasm::parse_module(read_file_bytes(path)).function_bodies;
        artifacts.push_back(std::move(artifact));
    }
    std::cout << hex_digest(wasm::codebase_hash(artifacts)) << "\n";
}

void run_wasm_dump(const std::string& file) {
    auto parsed = wasm::parse_module(read_file_bytes(file));
    std::cout << "version " << parsed.version << ", " << parsed.function_bodies.size()
              << " function(s), " << parsed.custom_sections_skipped << " custom section(s)\n";
    for (std::size_t i = 0; i < parsed.function_bodies.size(); ++i)
        std::cout << i << "," << parsed.function_bodies[i].size() << ","
                  << hex_digest(sha1(parsed.function_bodies[i])) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cryptojacking detection pipeline"};
    app.require_subcommand(1);

    std::string config_path, in_path, out_path;
    app.add_option("--config", config_path, "threshold config file (key = value lines)");
    app.add_option("--in", in_path, "input archive");
    app.add_option("--out", out_path, "output file (stdout when omitted)");

    // collect
    auto* collect = app.add_subcommand("collect", "drive a browser endpoint over URLs");
    collect->fallthrough();
    std::string endpoint_text, urls_file;
    int phase = 1;
    std::uint32_t cores = 4, parallel = 1;
    std::vector<std::string> urls;
    collect->add_option("--endpoint", endpoint_text, "debugging endpoint host:port[/path]")
        ->required();
    collect->add_option("--phase", phase, "1 = 5 s profile, 2 = 30 s profile")
        ->check(CLI::IsMember({1, 2}));
    collect->add_option("--cores", cores, "core count reported to pages");
    collect->add_option("--parallel", parallel, "concurrent sessions");
    collect->add_option("--urls", urls_file, "file with one URL per line");
    collect->add_option("url", urls, "URLs to visit");

    // phase1 / phase2, also grouped under `analyze`
    auto* phase1 = app.add_subcommand("phase1", "first-pass candidate heuristics");
    phase1->fallthrough();
    auto* phase2 = app.add_subcommand("phase2", "long-profile validation");
    phase2->fallthrough();
    auto* analyze = app.add_subcommand("analyze", "detection phases");
    analyze->require_subcommand(1);
    analyze->fallthrough();
    auto* analyze1 = analyze->add_subcommand("phase1", "first-pass candidate heuristics");
    analyze1->fallthrough();
    auto* analyze2 = analyze->add_subcommand("phase2", "long-profile validation");
    analyze2->fallthrough();

    // fingerprint build/apply
    auto* fingerprint_cmd = app.add_subcommand("fingerprint", "indicator generalization");
    fingerprint_cmd->require_subcommand(1);
    fingerprint_cmd->fallthrough();
    auto* fp_build = fingerprint_cmd->add_subcommand("build", "from confirmed miners");
    fp_build->fallthrough();
    auto* fp_apply = fingerprint_cmd->add_subcommand("apply", "sweep a corpus");
    fp_apply->fallthrough();
    std::string prints_path, confirmed_path;
    fp_apply->add_option("--prints", prints_path, "fingerprint file")->required();
    fp_apply->add_option("--confirmed", confirmed_path, "sites already confirmed, one per line");

    // detect
    auto* detect = app.add_subcommand("detect", "full pipeline over two corpora");
    detect->fallthrough();
    std::string revisits_path, sites_out, prints_out;
    detect->add_option("--revisits", revisits_path,
                       "long-profile archive (defaults to --in)");
    detect->add_option("--sites-out", sites_out, "write detected sites here");
    detect->add_option("--fingerprints-out", prints_out, "write fingerprints here");

    // wallets
    auto* wallets = app.add_subcommand("wallets", "scan socket frames for identities");
    wallets->fallthrough();
    std::string prefixes_path;
    wallets->add_option("--prefixes", prefixes_path, "currency prefix table");

    // revenue
    auto* revenue = app.add_subcommand("revenue", "payout estimates from visit stats");
    revenue->fallthrough();
    std::string stats_path;
    double opt_hps = -1, opt_payout = -1, opt_rate = -1;
    revenue->add_option("--stats", stats_path, "site,visits_per_day,avg_duration_s CSV")
        ->required();
    revenue->add_option("--hps", opt_hps, "per-core hash rate override (H/s)");
    revenue->add_option("--payout", opt_payout, "pool payout override (XMR per Mhash)");
    revenue->add_option("--rate", opt_rate, "exchange rate override (USD per XMR)");

    // cluster
    auto* cluster_cmd = app.add_subcommand("cluster", "similarity clustering of samples");
    cluster_cmd->fallthrough();
    std::string what = "js", matrix_out;
    double opt_cut = -1;
    cluster_cmd->add_option("--what", what, "js | wasm")->check(CLI::IsMember({"js", "wasm"}));
    cluster_cmd->add_option("--cut", opt_cut, "similarity cut override");
    cluster_cmd->add_option("--matrix-out", matrix_out, "write ordered similarity matrix CSV");

    // blacklist
    auto* blacklist_cmd = app.add_subcommand("blacklist", "filter-list agreement");
    blacklist_cmd->fallthrough();
    std::vector<std::string> list_paths;
    std::string ours_path;
    blacklist_cmd->add_option("--lists", list_paths, "filter list file(s)")->required();
    blacklist_cmd->add_option("--ours", ours_path, "our detected sites, one per line");

    // report
    auto* report_cmd = app.add_subcommand("report", "distribution tables and plot data");
    report_cmd->fallthrough();
    std::string sites_path, geo_path, categories_path, out_dir;
    report_cmd->add_option("--sites", sites_path, "miner sites, one per line (default: all)");
    report_cmd->add_option("--geo", geo_path, "site,country CSV");
    report_cmd->add_option("--categories", categories_path, "site,category CSV");
    report_cmd->add_option("--out-dir", out_dir, "output directory (default .)");

    // testbed
    auto* testbed = app.add_subcommand("testbed", "generate the labeled ground-truth corpus");
    testbed->fallthrough();
    std::uint32_t tb_cores = 4;
    double tb_profile_ms = 30000;
    bool tb_no_benign = false;
    testbed->add_option("--cores", tb_cores, "advertised core count");
    testbed->add_option("--profile-ms", tb_profile_ms, "profile duration");
    testbed->add_flag("--no-benign", tb_no_benign, "omit the benign controls");

    // wasm hash/dump
    auto* wasm_cmd = app.add_subcommand("wasm", "module inspection");
    wasm_cmd->require_subcommand(1);
    auto* wasm_hash = wasm_cmd->add_subcommand("hash", "code-base digest of module file(s)");
    std::vector<std::string> wasm_files;
    wasm_hash->add_option("file", wasm_files, "module file(s)")->required();
    auto* wasm_dump = wasm_cmd->add_subcommand("dump", "per-function sizes and digests");
    std::string wasm_file;
    wasm_dump->add_option("file", wasm_file, "module file")->required();

    try {
        app.parse(argc, argv);
        Config cfg = load_config(config_path);
        if (opt_hps > 0) cfg.payout.hash_rate_hps = opt_hps;
        if (opt_payout > 0) cfg.payout.payout_xmr_per_mhash = opt_payout;
        if (opt_rate > 0) cfg.payout.xmr_usd = opt_rate;
        if (opt_cut >= 0) cfg.cluster_cut = opt_cut;

        if (collect->parsed())
            return run_collect(endpoint_text, phase, cores, parallel, urls, urls_file, out_path);
        if (phase1->parsed() || analyze1->parsed()) run_phase1(cfg, in_path, out_path);
        if (phase2->parsed() || analyze2->parsed()) run_phase2(cfg, in_path, out_path);
        if (fp_build->parsed()) run_fingerprint_build(cfg, in_path, out_path);
        if (fp_apply->parsed())
            run_fingerprint_apply(in_path, prints_path, confirmed_path, out_path);
        if (detect->parsed())
            run_detect(cfg, in_path, revisits_path, out_path, sites_out, prints_out);
        if (wallets->parsed()) run_wallets(in_path, prefixes_path, out_path);
        if (revenue->parsed()) run_revenue(cfg, stats_path, out_path);
        if (cluster_cmd->parsed()) run_cluster(cfg, in_path, what, out_path, matrix_out);
        if (blacklist_cmd->parsed()) run_blacklist(in_path, list_paths, ours_path, out_path);
        if (report_cmd->parsed())
            run_report(cfg, in_path, sites_path, geo_path, categories_path, out_dir);
        if (testbed->parsed()) run_testbed(tb_cores, tb_profile_ms, tb_no_benign, out_path);
        if (wasm_hash->parsed()) run_wasm_hash(wasm_files);
        if (wasm_dump->parsed()) run_wasm_dump(wasm_file);
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
