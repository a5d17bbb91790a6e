#include "minerscope/util.hpp"

#include <ctime>

namespace minerscope {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

constexpr char kB64Digits[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_val(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0xf]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("hex string has odd length");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_val(hex[i]);
        int lo = hex_val(hex[i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

std::string base64_encode(std::span<const std::uint8_t> data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        std::uint32_t v = data[i] << 16 | data[i + 1] << 8 | data[i + 2];
        out.push_back(kB64Digits[v >> 18]);
        out.push_back(kB64Digits[v >> 12 & 0x3f]);
        out.push_back(kB64Digits[v >> 6 & 0x3f]);
        out.push_back(kB64Digits[v & 0x3f]);
    }
    std::size_t rest = data.size() - i;
    if (rest == 1) {
        std::uint32_t v = data[i] << 16;
        out.push_back(kB64Digits[v >> 18]);
        out.push_back(kB64Digits[v >> 12 & 0x3f]);
        out += "==";
    } else if (rest == 2) {
        std::uint32_t v = data[i] << 16 | data[i + 1] << 8;
        out.push_back(kB64Digits[v >> 18]);
        out.push_back(kB64Digits[v >> 12 & 0x3f]);
        out.push_back(kB64Digits[v >> 6 & 0x3f]);
        out.push_back('=');
    }
    return out;
}

Bytes base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw std::invalid_argument("base64 length not a multiple of 4");
    Bytes out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int pad = 0;
        std::uint32_t v = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            char c = text[i + j];
            if (c == '=') {
                if (i + 4 != text.size() || j < 2) throw std::invalid_argument("misplaced base64 padding");
                ++pad;
                v <<= 6;
            } else {
                if (pad > 0) throw std::invalid_argument("data after base64 padding");
                int d = b64_val(c);
                if (d < 0) throw std::invalid_argument("invalid base64 digit");
                v = v << 6 | static_cast<std::uint32_t>(d);
            }
        }
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

bool is_valid_utf8(std::string_view text) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(text.data());
    const auto* end = p + text.size();
    while (p < end) {
        if (*p < 0x80) {
            ++p;
            continue;
        }
        int len;
        std::uint32_t cp;
        if ((*p & 0xe0) == 0xc0) {
            len = 2;
            cp = *p & 0x1f;
        } else if ((*p & 0xf0) == 0xe0) {
            len = 3;
            cp = *p & 0x0f;
        } else if ((*p & 0xf8) == 0xf0) {
            len = 4;
            cp = *p & 0x07;
        } else {
            return false;
        }
        if (end - p < len) return false;
        for (int i = 1; i < len; ++i) {
            if ((p[i] & 0xc0) != 0x80) return false;
            cp = cp << 6 | (p[i] & 0x3f);
        }
        // Reject overlong forms, surrogates, and values past U+10FFFF.
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && cp < 0x800) return false;
        if (len == 4 && cp < 0x10000) return false;
        if (cp >= 0xd800 && cp <= 0xdfff) return false;
        if (cp > 0x10ffff) return false;
        p += len;
    }
    return true;
}

std::string format_rfc3339(Timestamp t) {
    using namespace std::chrono;
    auto secs = floor<seconds>(t);
    auto ms = duration_cast<milliseconds>(t - secs).count();
    std::time_t tt = system_clock::to_time_t(time_point_cast<system_clock::duration>(secs));
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(ms));
    return buf;
}

Timestamp parse_rfc3339(std::string_view text) {
    // Accepts "YYYY-MM-DDThh:mm:ss[.fff]Z" (UTC only).
    auto fail = [] { throw std::invalid_argument("invalid RFC 3339 timestamp"); };
    auto digits = [&](std::size_t pos, std::size_t n) -> int {
        int v = 0;
        for (std::size_t i = pos; i < pos + n; ++i) {
            if (i >= text.size() || text[i] < '0' || text[i] > '9') fail();
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    if (text.size() < 20) fail();
    if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != 't') ||
        text[13] != ':' || text[16] != ':')
        fail();
    std::tm tm{};
    tm.tm_year = digits(0, 4) - 1900;
    tm.tm_mon = digits(5, 2) - 1;
    tm.tm_mday = digits(8, 2);
    tm.tm_hour = digits(11, 2);
    tm.tm_min = digits(14, 2);
    tm.tm_sec = digits(17, 2);
    if (tm.tm_mon < 0 || tm.tm_mon > 11 || tm.tm_mday < 1 || tm.tm_mday > 31 || tm.tm_hour > 23 ||
        tm.tm_min > 59 || tm.tm_sec > 60)
        fail();
    std::size_t pos = 19;
    int ms = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t start = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        if (pos == start) fail();
        // Keep millisecond precision, truncating finer digits.
        for (std::size_t i = start; i < start + 3; ++i)
            ms = ms * 10 + (i < pos ? text[i] - '0' : 0);
    }
    if (pos + 1 != text.size() || (text[pos] != 'Z' && text[pos] != 'z')) fail();
    std::time_t tt = timegm(&tm);
    return std::chrono::sys_time<std::chrono::milliseconds>(
        std::chrono::seconds(tt) + std::chrono::milliseconds(ms));
}

std::string strip_scheme(std::string_view url) {
    if (url.starts_with("//")) return std::string(url);
    auto pos = url.find("://");
    if (pos == std::string_view::npos) return std::string(url);
    return std::string(url.substr(pos + 1));
}

std::string host_of(std::string_view url) {
    std::string_view rest = url;
    if (auto pos = rest.find("://"); pos != std::string_view::npos)
        rest = rest.substr(pos + 3);
    else if (rest.starts_with("//"))
        rest = rest.substr(2);
    else
        return {};
    auto end = rest.find_first_of("/:?#");
    return std::string(rest.substr(0, end));
}

}  // namespace minerscope
