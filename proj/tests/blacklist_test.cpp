#include "minerscope/blacklist.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <doctest.h>

#include "minerscope/pool.hpp"
#include "minerscope/util.hpp"

using namespace minerscope;
using blacklist::FilterRule;
using blacklist::RuleKind;

namespace {

FilterRule rule_of(std::string_view text) {
    blacklist::ParseResult result = blacklist::parse_rules(text);
    REQUIRE(result.rules.size() == 1);
    return result.rules.front();
}

VisitRecord site_with_url(std::string site, std::string url) {
    VisitRecord record;
    record.site = std::move(site);
    record.visited_at = parse_rfc3339("2018-05-04T08:00:00.000Z");
    ScriptArtifact script;
    script.script_id = "1";
    script.url = std::move(url);
    script.source_hash = script_source_hash(script.url);
    record.scripts.push_back(std::move(script));
    validate(record);
    return record;
}

}  // namespace

TEST_CASE("filter parsing sorts lines into rules and skip buckets") {
    blacklist::ParseResult result = blacklist::parse_rules(
        "! a comment\n"
        "[Adblock Plus 2.0]\n"
        "*/coinhive.min.js\n"
        "||coinhive.com^\n"
        "|https://exact.example/miner.js|\n"
        "deepminer.js|\n"
        "||jsecoin.com^$script\n"
        "@@||friendly.example^\n"
        "example.org##.banner\n"
        "||\n"
        "\n"
        "   \n");

    REQUIRE(result.rules.size() == 5);
    CHECK(result.comments == 2);
    CHECK(result.exceptions == 1);
    CHECK(result.cosmetic == 1);
    CHECK(result.options_stripped == 1);
    CHECK(result.malformed == 1);

    CHECK(result.rules[0].kind == RuleKind::plain);
    CHECK(result.rules[0].pattern == "*/coinhive.min.js");
    CHECK(result.rules[1].kind == RuleKind::domain_anchor);
    CHECK(result.rules[1].pattern == "coinhive.com^");
    CHECK(result.rules[2].kind == RuleKind::left_anchor);
    CHECK(result.rules[2].anchored_end);
    CHECK(result.rules[3].kind == RuleKind::right_anchor);
    CHECK(result.rules[3].pattern == "deepminer.js");
    CHECK(result.rules[4].pattern == "jsecoin.com^");
    CHECK(result.rules[4].raw == "||jsecoin.com^$script");
}

TEST_CASE("matching follows ad-block wildcard semantics") {
    SUBCASE("path wildcard rule") {
        FilterRule rule = rule_of("*/coinhive.min.js");
        CHECK(blacklist::matches(rule, "https://coinhive.com/lib/coinhive.min.js"));
        CHECK(blacklist::matches(rule, "http://mirror.example/coinhive.min.js"));
        CHECK_FALSE(blacklist::matches(rule, "https://example.com/app.js"));
        CHECK_FALSE(blacklist::matches(rule, "https://example.com/notcoinhive.min.js"));
    }

    SUBCASE("domain anchor respects label boundaries") {
        FilterRule rule = rule_of("||coinhive.com^");
        CHECK(blacklist::matches(rule, "https://coinhive.com/lib/miner.js"));
        CHECK(blacklist::matches(rule, "https://ws001.coinhive.com/proxy"));
        CHECK(blacklist::matches(rule, "https://coinhive.com"));  // ^ matches the end
        CHECK_FALSE(blacklist::matches(rule, "https://notcoinhive.com/x"));
        CHECK_FALSE(blacklist::matches(rule, "https://coinhive.com.evil.example/x"));
        CHECK_FALSE(blacklist::matches(rule, "https://example.com/coinhive.com/"));
    }

    SUBCASE("bundled bootstrap lookalike is caught by its CDN host") {
        FilterRule rule = rule_of("||aster18cdn.nl^");
        CHECK(blacklist::matches(rule, "https://aster18cdn.nl/bootstrap.min.js"));
        CHECK_FALSE(blacklist::matches(rule, "https://cdn.example/bootstrap.min.js"));
    }

    SUBCASE("edge anchors pin the match") {
        FilterRule left = rule_of("|https://exact.example/m.js");
        CHECK(blacklist::matches(left, "https://exact.example/m.js?v=2"));
        CHECK_FALSE(blacklist::matches(left, "http://exact.example/m.js"));

        FilterRule right = rule_of("deepminer.js|");
        CHECK(blacklist::matches(right, "https://x.example/deepminer.js"));
        CHECK_FALSE(blacklist::matches(right, "https://x.example/deepminer.js?x=1"));

        FilterRule both = rule_of("|wss://pool.testbed.local:8892/proxy|");
        CHECK(blacklist::matches(both, "wss://pool.testbed.local:8892/proxy"));
        CHECK_FALSE(blacklist::matches(both, "wss://pool.testbed.local:8892/proxy2"));
    }

    SUBCASE("separator class excludes name characters") {
        FilterRule rule = rule_of("miner^js");
        CHECK(blacklist::matches(rule, "https://x.example/miner/js"));
        CHECK(blacklist::matches(rule, "https://x.example/a?miner=js"));
        CHECK_FALSE(blacklist::matches(rule, "https://x.example/miner.js"));  // '.' is a name char
        CHECK_FALSE(blacklist::matches(rule, "https://x.example/miner-js"));
    }

    SUBCASE("matching ignores case") {
        FilterRule rule = rule_of("*/CoinHive.MIN.js");
        CHECK(blacklist::matches(rule, "https://coinhive.com/lib/coinhive.min.js"));
    }

    SUBCASE("plain rules are scheme-invariant") {
        for (const char* text : {"*/coinhive.min.js", "miner*loader", "pool^proxy"}) {
            FilterRule rule = rule_of(text);
            for (const char* url :
                 {"https://coinhive.com/lib/coinhive.min.js", "http://a.example/miner-x-loader",
                  "wss://pool.example/pool/proxy", "https://clean.example/app.js"}) {
                CHECK(blacklist::matches(rule, url) ==
                      blacklist::matches(rule, strip_scheme(url)));
            }
        }
    }
}

TEST_CASE("detection inspects script URLs and WebSocket endpoints") {
    auto corpus = pool::make_testbed_corpus();

    SUBCASE("script-host rules catch both wrapper variants") {
        blacklist::ParseResult lists = blacklist::parse_rules(
            "||cdn.minepool.testbed^\n"
            "||static.wkrpool.testbed^\n");
        std::set<std::string> detected = blacklist::detect_sites(lists.rules, corpus);
        CHECK(detected.size() == 24);
        CHECK(detected.contains("miner-t0-v1.testbed"));
        CHECK(detected.contains("miner-t99-v2.testbed"));
        CHECK_FALSE(detected.contains("idle-control.testbed"));
    }

    SUBCASE("pool endpoint rules work when scripts are self-hosted") {
        blacklist::ParseResult list = blacklist::parse_rules("||pool.testbed.local^\n");
        std::set<std::string> detected = blacklist::detect_sites(list.rules, corpus);
        CHECK(detected.size() == 24);  // every miner talks to the pool
    }

    SUBCASE("controls carry nothing a miner list would flag") {
        blacklist::ParseResult list = blacklist::parse_rules(
            "*/coinhive.min.js\n||coinhive.com^\n||pool.testbed.local^\n");
        std::set<std::string> detected = blacklist::detect_sites(list.rules, corpus);
        for (const char* control : {"idle-control.testbed", "burst-control.testbed",
                                    "workers-control.testbed", "codec-control.testbed"})
            CHECK_FALSE(detected.contains(control));
    }
}

TEST_CASE("list agreement is plain set arithmetic") {
    std::vector<VisitRecord> corpus;
    corpus.push_back(site_with_url("a.example", "https://clean-cdn.example/app.js"));
    corpus.push_back(site_with_url("b.example", "https://minerhost.example/run.js"));
    corpus.push_back(site_with_url("c.example", "https://minerhost.example/run.js"));
    corpus.push_back(site_with_url("d.example", "https://minerhost.example/run.js"));

    std::map<std::string, std::vector<FilterRule>> lists;
    lists["hosts"] = blacklist::parse_rules("||minerhost.example^\n").rules;

    // We confirmed a, b, c; the list flags b, c, d.
    std::set<std::string> ours{"a.example", "b.example", "c.example"};
    auto agreements = blacklist::compare(ours, lists, corpus);
    REQUIRE(agreements.size() == 1);
    CHECK(agreements[0].list == "hosts");
    CHECK(agreements[0].detections == 3);
    CHECK(agreements[0].both == 2);
    CHECK(agreements[0].only_they == 1);
    CHECK(agreements[0].only_we == 1);

    SUBCASE("identities hold on randomized corpora") {
        std::mt19937_64 rng(20180527);
        std::uniform_int_distribution<int> host_of(0, 5);
        std::bernoulli_distribution ours_too(0.4);
        for (int round = 0; round < 20; ++round) {
            std::vector<VisitRecord> random_corpus;
            std::set<std::string> verdict;
            for (int i = 0; i < 30; ++i) {
                std::string site = "s" + std::to_string(round) + "-" + std::to_string(i) + ".ex";
                random_corpus.push_back(site_with_url(
                    site, "https://host" + std::to_string(host_of(rng)) + ".ex/app.js"));
                if (ours_too(rng)) verdict.insert(site);
            }
            std::map<std::string, std::vector<FilterRule>> random_lists;
            random_lists["h0"] = blacklist::parse_rules("||host0.ex^\n").rules;
            random_lists["h03"] = blacklist::parse_rules("||host0.ex^\n||host3.ex^\n").rules;
            random_lists["none"] = blacklist::parse_rules("||unused.ex^\n").rules;

            for (const auto& agreement :
                 blacklist::compare(verdict, random_lists, random_corpus)) {
                CHECK(agreement.detections == agreement.both + agreement.only_they);
                CHECK(verdict.size() == agreement.both + agreement.only_we);
            }
        }
    }

    SUBCASE("stats serialize as a CSV table") {
        std::ostringstream out;
        blacklist::write_agreement_csv(out, agreements);
        CHECK(out.str() ==
              "list,detections,both,only_they,only_we\n"
              "hosts,3,2,1,1\n");
    }
}

TEST_CASE("the shipped sample filter list parses cleanly") {
    std::ifstream in(std::string(TEST_DATA_DIR) + "/filters_sample.txt");
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    blacklist::ParseResult result = blacklist::parse_rules(buffer.str());

    CHECK(result.rules.size() == 12);
    CHECK(result.comments == 3);  // two ! lines and the [Adblock] header
    CHECK(result.exceptions == 1);
    CHECK(result.cosmetic == 1);
    CHECK(result.malformed == 0);

    bool hit = false;
    for (const auto& rule : result.rules)
        hit = hit || blacklist::matches(rule, "https://coinhive.com/lib/coinhive.min.js");
    CHECK(hit);
}
