#include "minerscope/wallet.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>

#include <json.hpp>

#include "minerscope/crypto.hpp"
#include "minerscope/wasm_module.hpp"

namespace minerscope::wallet {

namespace {

constexpr std::string_view kAlphabet =
    "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

// encoded_block_sizes[n] = characters for an n-byte block; 8 bytes -> 11.
constexpr std::array<std::size_t, 9> kEncodedBlockSizes = {0, 2, 3, 5, 6, 7, 9, 10, 11};
constexpr std::size_t kFullBlockBytes = 8;
constexpr std::size_t kFullBlockChars = 11;

constexpr std::size_t kMinWalletChars = 90;
constexpr std::size_t kMaxWalletChars = 110;

int alphabet_index(char c) {
    static const auto kIndex = [] {
        std::array<int, 256> idx;
        idx.fill(-1);
        for (std::size_t i = 0; i < kAlphabet.size(); ++i)
            idx[static_cast<unsigned char>(kAlphabet[i])] = static_cast<int>(i);
        return idx;
    }();
    return kIndex[static_cast<unsigned char>(c)];
}

void encode_block(std::span<const std::uint8_t> block, std::size_t chars, std::string& out) {
    std::uint64_t value = 0;
    for (auto b : block) value = value << 8 | b;
    std::size_t start = out.size();
    out.append(chars, kAlphabet[0]);
    for (std::size_t i = chars; value != 0 && i-- > 0;) {
        out[start + i] = kAlphabet[value % 58];
        value /= 58;
    }
}

void decode_block(std::string_view block, std::size_t bytes, Bytes& out) {
    std::uint64_t value = 0;
    for (char c : block) {
        int digit = alphabet_index(c);
        if (digit < 0)
            throw Base58Error(std::string("invalid base58 character '") + c + "'");
        if (value > (~0ull - static_cast<std::uint64_t>(digit)) / 58)
            throw Base58Error("base58 block overflows 8 bytes");
        value = value * 58 + static_cast<std::uint64_t>(digit);
    }
    if (bytes < kFullBlockBytes && value >> (8 * bytes) != 0)
        throw Base58Error("base58 block overflows its declared size");
    for (std::size_t i = bytes; i-- > 0;) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

}  // namespace

std::string encode_monero_base58(std::span<const std::uint8_t> payload) {
    std::string out;
    std::size_t full = payload.size() / kFullBlockBytes;
    out.reserve(full * kFullBlockChars + kFullBlockChars);
    for (std::size_t i = 0; i < full; ++i)
        encode_block(payload.subspan(i * kFullBlockBytes, kFullBlockBytes), kFullBlockChars, out);
    std::size_t rest = payload.size() % kFullBlockBytes;
    if (rest > 0)
        encode_block(payload.subspan(full * kFullBlockBytes), kEncodedBlockSizes[rest], out);
    return out;
}

Bytes decode_monero_base58(std::string_view text) {
    Bytes out;
    std::size_t full = text.size() / kFullBlockChars;
    out.reserve(full * kFullBlockBytes + kFullBlockBytes);
    for (std::size_t i = 0; i < full; ++i)
        decode_block(text.substr(i * kFullBlockChars, kFullBlockChars), kFullBlockBytes, out);
    std::size_t rest = text.size() % kFullBlockChars;
    if (rest > 0) {
        auto it = std::find(kEncodedBlockSizes.begin(), kEncodedBlockSizes.end(), rest);
        if (it == kEncodedBlockSizes.end())
            throw Base58Error("invalid final base58 block length");
        std::size_t bytes = static_cast<std::size_t>(it - kEncodedBlockSizes.begin());
        decode_block(text.substr(full * kFullBlockChars), bytes, out);
    }
    return out;
}

std::string_view currency_name(Currency c) {
    switch (c) {
        case Currency::xmr: return "XMR";
        case Currency::etn: return "ETN";
        case Currency::bcn: return "BCN";
        case Currency::itns: return "ITNS";
        case Currency::grf: return "GRF";
        case Currency::unknown: break;
    }
    return "unknown";
}

namespace {

Currency currency_from_name(std::string_view name) {
    std::string lower(name);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "xmr") return Currency::xmr;
    if (lower == "etn") return Currency::etn;
    if (lower == "bcn") return Currency::bcn;
    if (lower == "itns") return Currency::itns;
    if (lower == "grf") return Currency::grf;
    if (lower == "unknown") return Currency::unknown;
    throw std::invalid_argument("unknown currency name: " + std::string(name));
}

}  // namespace

PrefixTable PrefixTable::defaults() {
    PrefixTable t;
    t.add(0x12, Currency::xmr);    // mainnet standard, leading '4'
    t.add(0x13, Currency::xmr);    // integrated
    t.add(0x2a, Currency::xmr);    // subaddress, leading '8'
    t.add(0x4662, Currency::etn);  // leading "etn"
    t.add(0x06, Currency::bcn);
    t.add(0x3078, Currency::itns);
    t.add(0x5a, Currency::grf);
    return t;
}

PrefixTable PrefixTable::load(std::istream& in) {
    PrefixTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw std::invalid_argument("prefix table line " + std::to_string(line_no) +
                                            ": expected 'prefix_hex = currency'");
            continue;
        }
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("prefix table line " + std::to_string(line_no) +
                                        ": expected 'prefix_hex = currency'");
        std::size_t consumed = 0;
        std::uint64_t prefix = std::stoull(key, &consumed, 16);
        if (consumed != key.size())
            throw std::invalid_argument("prefix table line " + std::to_string(line_no) +
                                        ": bad hex prefix '" + key + "'");
        t.add(prefix, currency_from_name(value));
    }
    return t;
}

PrefixTable PrefixTable::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open prefix table: " + path.string());
    return load(in);
}

Currency PrefixTable::classify(std::uint64_t prefix) const {
    auto it = entries_.find(prefix);
    return it == entries_.end() ? Currency::unknown : it->second;
}

WalletAddress parse_wallet(std::string_view text, const PrefixTable& prefixes) {
    WalletAddress address;
    address.text = std::string(text);
    address.payload = decode_monero_base58(text);

    constexpr std::size_t kChecksumBytes = 4;
    if (address.payload.size() > kChecksumBytes) {
        std::span<const std::uint8_t> body(address.payload.data(),
                                           address.payload.size() - kChecksumBytes);
        auto digest = keccak256(body);
        address.checksum_ok = std::equal(digest.begin(), digest.begin() + kChecksumBytes,
                                         address.payload.end() - kChecksumBytes);
        try {
            auto varint = wasm::decode_uleb128(body);
            address.prefix = varint.value;
            address.currency = prefixes.classify(varint.value);
        } catch (const wasm::ParseError&) {
            // Prefix never terminates inside the payload: leave unknown.
        }
    }
    return address;
}

bool nondescript_sitekey(std::string_view value) {
    if (value.size() < 8) return true;
    std::string lower(value);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    static const std::set<std::string> kStoplist = {
        "anonymous", "changeme", "default1", "password", "site-key", "sitekey1",
        "testtest",  "undefined", "unknown1", "xxxxxxxx", "yoursitekey", "your-site-key",
    };
    if (kStoplist.contains(lower)) return true;
    // All one repeated character ("aaaaaaaa") says nothing either.
    return std::adjacent_find(lower.begin(), lower.end(), std::not_equal_to<>()) == lower.end();
}

namespace {

/// Hostname from a pool field that may be "host", "host:port", or a URL.
std::string pool_hostname(std::string_view value) {
    if (value.find("://") != std::string_view::npos || value.starts_with("//"))
        return host_of(value);
    auto end = value.find_first_of(":/");
    return std::string(value.substr(0, end));
}

void scan_json_value(const nlohmann::json& j, ScanResult& result, const PrefixTable& prefixes,
                     std::set<std::string>& seen_wallets, std::set<std::string>& seen_keys,
                     std::set<std::string>& seen_pools) {
    if (!j.is_object()) return;

    auto string_field = [&](const char* name) -> std::string {
        auto it = j.find(name);
        return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
    };

    if (auto pool = string_field("pool"); !pool.empty()) {
        if (auto host = pool_hostname(pool); !host.empty()) seen_pools.insert(host);
    }

    // Identity-bearing fields of the auth/handshake messages: CoinHive-style
    // site_key, proxy-style login. A login that is a checksum-valid wallet
    // is a wallet observation; anything else is a site-key.
    for (const char* field : {"site_key", "login", "user"}) {
        std::string value = string_field(field);
        if (value.empty()) continue;
        bool is_wallet = false;
        if (value.size() >= kMinWalletChars && value.size() <= kMaxWalletChars) {
            try {
                auto wallet = parse_wallet(value, prefixes);
                if (wallet.checksum_ok) {
                    is_wallet = true;
                    if (seen_wallets.insert(value).second) result.wallets.push_back(wallet);
                }
            } catch (const Base58Error&) {
            }
        }
        if (!is_wallet) seen_keys.insert(value);
    }

    // Nested params as used by {type:"auth", params:{site_key:..}}.
    if (auto it = j.find("params"); it != j.end())
        scan_json_value(*it, result, prefixes, seen_wallets, seen_keys, seen_pools);
}

}  // namespace

ScanResult scan_frames(std::span<const WsFrame> frames, const PrefixTable& prefixes) {
    ScanResult result;
    std::set<std::string> seen_wallets, seen_keys, seen_pools;

    for (const auto& frame : frames) {
        if (auto host = host_of(frame.endpoint); !host.empty()) seen_pools.insert(host);
        if (frame.binary) continue;

        // Base58 runs of wallet-plausible length anywhere in the payload.
        const std::string& payload = frame.payload;
        std::size_t i = 0;
        while (i < payload.size()) {
            if (alphabet_index(payload[i]) < 0) {
                ++i;
                continue;
            }
            std::size_t start = i;
            while (i < payload.size() && alphabet_index(payload[i]) >= 0) ++i;
            std::size_t len = i - start;
            if (len < kMinWalletChars || len > kMaxWalletChars) continue;
            std::string run = payload.substr(start, len);
            try {
                auto wallet = parse_wallet(run, prefixes);
                if (wallet.checksum_ok && seen_wallets.insert(run).second)
                    result.wallets.push_back(wallet);
            } catch (const Base58Error&) {
            }
        }

        auto j = nlohmann::json::parse(payload, nullptr, /*allow_exceptions=*/false);
        if (!j.is_discarded())
            scan_json_value(j, result, prefixes, seen_wallets, seen_keys, seen_pools);
    }

    std::sort(result.wallets.begin(), result.wallets.end(),
              [](const WalletAddress& a, const WalletAddress& b) { return a.text < b.text; });
    result.sitekeys.assign(seen_keys.begin(), seen_keys.end());
    result.pools.assign(seen_pools.begin(), seen_pools.end());
    return result;
}

IdentityGraph group_by_identity(
    std::span<const std::pair<std::string, std::string>> site_identity_pairs) {
    IdentityGraph graph;
    for (const auto& [site, identity] : site_identity_pairs) {
        if (site.empty() || identity.empty()) continue;
        graph.identity_sites[identity].insert(site);
        graph.site_identities[site].insert(identity);
    }
    return graph;
}

std::vector<std::size_t> sites_per_identity_histogram(const IdentityGraph& graph) {
    std::vector<std::size_t> bins;
    for (const auto& [identity, sites] : graph.identity_sites) {
        std::size_t bin = (sites.size() - 1) / 5;
        if (bin >= bins.size()) bins.resize(bin + 1, 0);
        ++bins[bin];
    }
    return bins;
}

}  // namespace minerscope::wallet
