#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace minerscope {

using Bytes = std::vector<std::uint8_t>;

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view hex);  // throws std::invalid_argument on odd length / bad digit

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);  // throws std::invalid_argument

bool is_valid_utf8(std::string_view text);

/// RFC 3339 UTC timestamps with millisecond precision ("2018-05-04T12:00:00.000Z").
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
std::string format_rfc3339(Timestamp t);
Timestamp parse_rfc3339(std::string_view text);  // throws std::invalid_argument

/// "https://host/p?q" -> "//host/p?q". Strings already starting with "//" pass through.
/// Query strings are retained; URLs without a scheme are returned unchanged.
std::string strip_scheme(std::string_view url);

/// Hostname part of a URL ("wss://pool.example:8443/x" -> "pool.example"), empty if none.
std::string host_of(std::string_view url);

}  // namespace minerscope
