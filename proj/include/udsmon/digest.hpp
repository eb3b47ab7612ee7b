#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace udsmon {

// SHA-256 everywhere a payload must be summarized.
using Digest = std::array<std::uint8_t, 32>;

Digest hash_payload(std::span<const std::uint8_t> data);
Digest hash_text(std::string_view text);

std::string digest_hex(const Digest &d);
std::optional<Digest> parse_digest(std::string_view hex);

} // namespace udsmon
