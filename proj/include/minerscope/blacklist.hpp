#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "minerscope/telemetry.hpp"

namespace minerscope::blacklist {

enum class RuleKind { plain, domain_anchor, left_anchor, right_anchor };

/// One network filter in the practical ad-block subset: `*` wildcards,
/// `^` separator class, `||` hostname anchor, `|` edge anchors.
struct FilterRule {
    std::string raw;      // original line, for reporting
    RuleKind kind = RuleKind::plain;
    std::string pattern;  // anchors stripped, wildcards kept
    bool anchored_end = false;  // true when the rule ended with `|`

    bool operator==(const FilterRule&) const = default;
};

/// Parse outcome plus counts of everything deliberately skipped.
struct ParseResult {
    std::vector<FilterRule> rules;
    std::size_t comments = 0;
    std::size_t cosmetic = 0;         // element-hiding (##) rules
    std::size_t exceptions = 0;       // @@ allow rules
    std::size_t options_stripped = 0; // $-option suffixes dropped
    std::size_t malformed = 0;
};

ParseResult parse_rules(std::string_view text);

/// Case-insensitive match against an absolute URL.
bool matches(const FilterRule& rule, std::string_view url);

/// Sites whose script URLs or WebSocket endpoints hit any rule.
std::set<std::string> detect_sites(std::span<const FilterRule> rules,
                                   std::span<const VisitRecord> corpus);

/// Agreement of one list with the pipeline's verdict set.
struct ListAgreement {
    std::string list;
    std::size_t detections = 0;  // sites the list flags in the corpus
    std::size_t both = 0;        // flagged by the list and by us
    std::size_t only_they = 0;   // flagged by the list only
    std::size_t only_we = 0;     // flagged by us only

    bool operator==(const ListAgreement&) const = default;
};

std::vector<ListAgreement> compare(const std::set<std::string>& verdict_sites,
                                   const std::map<std::string, std::vector<FilterRule>>& lists,
                                   std::span<const VisitRecord> corpus);

void write_agreement_csv(std::ostream& out, std::span<const ListAgreement> agreements);

}  // namespace minerscope::blacklist
