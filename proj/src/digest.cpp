#include "udsmon/digest.hpp"

#include <algorithm>

#include <openssl/evp.h>

#include "udsmon/error.hpp"
#include "udsmon/hex.hpp"

namespace udsmon {

Digest hash_payload(std::span<const std::uint8_t> data) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        throw Error("SHA-256 computation failed");
    }
    return out;
}

Digest hash_text(std::string_view text) {
    return hash_payload(std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

std::string digest_hex(const Digest &d) { return to_hex(d); }

std::optional<Digest> parse_digest(std::string_view hex) {
    auto bytes = from_hex(hex);
    if (!bytes || bytes->size() != Digest{}.size()) return std::nullopt;
    Digest d{};
    std::copy(bytes->begin(), bytes->end(), d.begin());
    return d;
}

} // namespace udsmon
