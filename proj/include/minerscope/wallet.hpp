#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "minerscope/telemetry.hpp"
#include "minerscope/util.hpp"

namespace minerscope::wallet {

struct Base58Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Monero-style block-wise base58: 8-byte blocks map to exactly 11
/// characters, the final partial block to a fixed size per its byte count.
/// Unlike Bitcoin base58 the output length is a function of the input
/// length alone.
std::string encode_monero_base58(std::span<const std::uint8_t> payload);
Bytes decode_monero_base58(std::string_view text);

enum class Currency { xmr, etn, bcn, itns, grf, unknown };
std::string_view currency_name(Currency c);

/// Maps decoded network-prefix varints to currencies. The table ships as a
/// config file because new CryptoNote forks appear faster than releases.
class PrefixTable {
public:
    static PrefixTable defaults();
    /// Lines of "prefix_hex = currency", '#' comments. Unknown currency
    /// names are rejected; unknown prefixes at lookup time are not.
    static PrefixTable load(std::istream& in);
    static PrefixTable load_file(const std::filesystem::path& path);

    void add(std::uint64_t prefix, Currency c) { entries_[prefix] = c; }
    Currency classify(std::uint64_t prefix) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::uint64_t, Currency> entries_;
};

struct WalletAddress {
    Currency currency = Currency::unknown;
    std::string text;
    Bytes payload;
    bool checksum_ok = false;
    std::uint64_t prefix = 0;

    bool operator==(const WalletAddress&) const = default;
};

/// Decodes and validates one address. Throws Base58Error only when the
/// text does not decode at all; a failed checksum or unknown prefix is a
/// result, not an error.
WalletAddress parse_wallet(std::string_view text, const PrefixTable& prefixes);

/// True for site-key values too generic to identify anyone: short strings
/// and a stoplist of placeholder words.
bool nondescript_sitekey(std::string_view value);

struct ScanResult {
    std::vector<WalletAddress> wallets;  // checksum-valid only, unique by text
    std::vector<std::string> sitekeys;   // raw observations, not yet filtered
    std::vector<std::string> pools;      // hostnames

    bool operator==(const ScanResult&) const = default;
};

/// Sweeps WebSocket text frames for mining identities: base58 runs of
/// plausible wallet length (90 to 110 chars) that decode and pass the
/// checksum, site-key strings in auth/handshake fields, and pool hosts
/// from `pool` fields and frame endpoints. Binary frames are skipped.
/// Output vectors are sorted and deduplicated, so the result does not
/// depend on frame order.
ScanResult scan_frames(std::span<const WsFrame> frames, const PrefixTable& prefixes);

struct IdentityGraph {
    std::map<std::string, std::set<std::string>> identity_sites;
    std::map<std::string, std::set<std::string>> site_identities;
};

IdentityGraph group_by_identity(
    std::span<const std::pair<std::string, std::string>> site_identity_pairs);

/// Bin k counts identities appearing on 5k+1 to 5k+5 sites.
std::vector<std::size_t> sites_per_identity_histogram(const IdentityGraph& graph);

}  // namespace minerscope::wallet
