#include "udsmon/hex.hpp"

namespace udsmon {

namespace {

constexpr char kDigits[] = "0123456789abcdef";

int nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string fixed_hex(std::uint64_t value, int digits) {
    std::string out = "0x";
    for (int i = digits - 1; i >= 0; --i) {
        out.push_back(kDigits[(value >> (4 * i)) & 0xF]);
    }
    return out;
}

} // namespace

std::string to_hex(std::span<const std::uint8_t> data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xF]);
    }
    return out;
}

std::optional<Bytes> from_hex(std::string_view text) {
    if (text.size() % 2 != 0) return std::nullopt;
    Bytes out;
    out.reserve(text.size() / 2);
    for (std::size_t i = 0; i < text.size(); i += 2) {
        int hi = nibble(text[i]);
        int lo = nibble(text[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

std::string hex_byte(std::uint8_t value) { return fixed_hex(value, 2); }
std::string hex_u16(std::uint16_t value) { return fixed_hex(value, 4); }
std::string hex_u32(std::uint32_t value) { return fixed_hex(value, 8); }

std::string hex_u64(std::uint64_t value) {
    int digits = 1;
    while (digits < 16 && (value >> (4 * digits)) != 0) ++digits;
    return fixed_hex(value, digits);
}

std::optional<std::uint64_t> parse_hex_number(std::string_view text) {
    if (text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
    if (text.empty() || text.size() > 16) return std::nullopt;
    std::uint64_t value = 0;
    for (char c : text) {
        int n = nibble(c);
        if (n < 0) return std::nullopt;
        value = (value << 4) | static_cast<std::uint64_t>(n);
    }
    return value;
}

} // namespace udsmon
