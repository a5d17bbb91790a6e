#include "minerscope/blacklist.hpp"

#include <algorithm>
#include <cctype>
#include <ostream>
#include <sstream>

namespace minerscope::blacklist {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

/// The `^` class: anything that cannot appear inside a hostname or a
/// path segment, plus the end of the URL.
bool is_separator(char c) {
    return !(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
             c == '%');
}

bool char_matches(char pattern_char, char text_char) {
    if (pattern_char == '^') return is_separator(text_char);
    return lower(pattern_char) == lower(text_char);
}

/// Glob-style match of `pattern` against `text` starting at its front.
/// Leftover text is fine unless `require_end`; `^` also matches the
/// zero-width end of the URL.
bool match_from(std::string_view pattern, std::string_view text, bool require_end) {
    std::size_t p = 0, t = 0;
    std::size_t star_p = std::string_view::npos, star_t = 0;
    while (true) {
        if (p == pattern.size()) {
            if (!require_end || t == text.size()) return true;
        } else if (pattern[p] == '*') {
            star_p = ++p;
            star_t = t;
            continue;
        } else if (t < text.size() && char_matches(pattern[p], text[t])) {
            ++p;
            ++t;
            continue;
        } else if (pattern[p] == '^' && t == text.size()) {
            ++p;
            continue;
        }
        if (star_p != std::string_view::npos && star_t < text.size()) {
            t = ++star_t;
            p = star_p;
            continue;
        }
        return false;
    }
}

/// Offsets where a hostname label begins: the host start and each
/// position after a dot, up to where the host part ends.
std::vector<std::size_t> label_starts(std::string_view url) {
    std::size_t host = 0;
    if (auto scheme = url.find("://"); scheme != std::string_view::npos)
        host = scheme + 3;
    else if (url.starts_with("//"))
        host = 2;
    std::size_t host_end = url.find_first_of("/?#", host);
    if (host_end == std::string_view::npos) host_end = url.size();

    std::vector<std::size_t> starts{host};
    for (std::size_t i = host; i < host_end; ++i)
        if (url[i] == '.' && i + 1 < host_end) starts.push_back(i + 1);
    return starts;
}

}  // namespace

ParseResult parse_rules(std::string_view text) {
    ParseResult result;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        if (line.empty()) continue;
        if (line.front() == '!' || line.front() == '[') {
            ++result.comments;
            continue;
        }
        if (line.find("##") != std::string_view::npos ||
            line.find("#@#") != std::string_view::npos ||
            line.find("#?#") != std::string_view::npos) {
            ++result.cosmetic;
            continue;
        }
        if (line.starts_with("@@")) {
            ++result.exceptions;
            continue;
        }

        FilterRule rule;
        rule.raw = std::string(line);
        if (auto dollar = line.find('$'); dollar != std::string_view::npos) {
            line = line.substr(0, dollar);
            ++result.options_stripped;
        }
        if (line.starts_with("||")) {
            rule.kind = RuleKind::domain_anchor;
            line.remove_prefix(2);
        } else if (line.starts_with("|")) {
            rule.kind = RuleKind::left_anchor;
            line.remove_prefix(1);
        }
        if (line.ends_with("|")) {
            rule.anchored_end = true;
            line.remove_suffix(1);
            if (rule.kind == RuleKind::plain) rule.kind = RuleKind::right_anchor;
        }
        if (line.empty() || line.find_first_not_of('*') == std::string_view::npos) {
            ++result.malformed;  // nothing concrete left to match
            continue;
        }
        rule.pattern = std::string(line);
        result.rules.push_back(std::move(rule));
    }
    return result;
}

bool matches(const FilterRule& rule, std::string_view url) {
    switch (rule.kind) {
        case RuleKind::plain:
            for (std::size_t start = 0; start <= url.size(); ++start)
                if (match_from(rule.pattern, url.substr(start), rule.anchored_end)) return true;
            return false;
        case RuleKind::left_anchor:
            return match_from(rule.pattern, url, rule.anchored_end);
        case RuleKind::right_anchor: {
            for (std::size_t start = 0; start <= url.size(); ++start)
                if (match_from(rule.pattern, url.substr(start), true)) return true;
            return false;
        }
        case RuleKind::domain_anchor:
            for (std::size_t start : label_starts(url))
                if (match_from(rule.pattern, url.substr(start), rule.anchored_end)) return true;
            return false;
    }
    return false;
}

std::set<std::string> detect_sites(std::span<const FilterRule> rules,
                                   std::span<const VisitRecord> corpus) {
    std::set<std::string> detected;
    for (const auto& record : corpus) {
        if (detected.contains(record.site)) continue;
        auto any_rule = [&rules](std::string_view url) {
            return std::any_of(rules.begin(), rules.end(),
                               [url](const FilterRule& rule) { return matches(rule, url); });
        };
        bool hit = false;
        for (const auto& script : record.scripts) {
            if (script.url != kInlineUrl && any_rule(script.url)) {
                hit = true;
                break;
            }
        }
        if (!hit)
            for (const auto& frame : record.ws_frames) {
                if (any_rule(frame.endpoint)) {
                    hit = true;
                    break;
                }
            }
        if (hit) detected.insert(record.site);
    }
    return detected;
}

std::vector<ListAgreement> compare(const std::set<std::string>& verdict_sites,
                                   const std::map<std::string, std::vector<FilterRule>>& lists,
                                   std::span<const VisitRecord> corpus) {
    std::vector<ListAgreement> agreements;
    for (const auto& [name, rules] : lists) {
        std::set<std::string> theirs = detect_sites(rules, corpus);
        ListAgreement agreement;
        agreement.list = name;
        agreement.detections = theirs.size();
        for (const auto& site : theirs)
            if (verdict_sites.contains(site))
                ++agreement.both;
            else
                ++agreement.only_they;
        for (const auto& site : verdict_sites)
            if (!theirs.contains(site)) ++agreement.only_we;
        agreements.push_back(std::move(agreement));
    }
    return agreements;
}

void write_agreement_csv(std::ostream& out, std::span<const ListAgreement> agreements) {
    out << "list,detections,both,only_they,only_we\n";
    for (const auto& agreement : agreements)
        out << agreement.list << ',' << agreement.detections << ',' << agreement.both << ','
            << agreement.only_they << ',' << agreement.only_we << '\n';
}

}  // namespace minerscope::blacklist
