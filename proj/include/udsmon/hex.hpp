#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace udsmon {

using Bytes = std::vector<std::uint8_t>;

// Lowercase hex, no separators.
std::string to_hex(std::span<const std::uint8_t> data);

// Accepts upper or lower case; rejects odd length and non-hex characters.
std::optional<Bytes> from_hex(std::string_view text);

// "0x27" style rendering for single identifiers.
std::string hex_byte(std::uint8_t value);
std::string hex_u16(std::uint16_t value);
std::string hex_u32(std::uint32_t value);
// Minimal-width form, e.g. 0xff0000.
std::string hex_u64(std::uint64_t value);

// Parses "0x1A", "1A" or decimal-free hex literals into an unsigned value.
std::optional<std::uint64_t> parse_hex_number(std::string_view text);

} // namespace udsmon
