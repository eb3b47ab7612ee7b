#pragma once

// Random well-formed frames for codec round trips.

#include <random>

#include "udsmon/codec.hpp"

namespace udsmon::testing {

inline UdsRequest random_request(std::mt19937_64 &rng) {
    UdsRequest r;
    r.sid = static_cast<Sid>(rng());
    auto info = service_info(r.sid);
    const bool sf = info && info->has_subfunction && rng() % 4 != 0;
    if (sf) r.subfunction = static_cast<std::uint8_t>(rng());
    // A subfunction service without its SF byte can only be the bare SID.
    if (!(info && info->has_subfunction && !sf)) r.payload.resize(rng() % 24);
    for (auto &b : r.payload) b = static_cast<std::uint8_t>(rng());
    return r;
}

inline UdsResponse random_response(std::mt19937_64 &rng) {
    if (rng() % 3 == 0) return UdsResponse::make_negative(static_cast<Sid>(rng()), static_cast<std::uint8_t>(rng()));
    Sid sid;
    do {
        sid = static_cast<Sid>(0x10 + rng() % 0xB0);
    } while (sid == 0x3F);
    Bytes payload(rng() % 24);
    for (auto &b : payload) b = static_cast<std::uint8_t>(rng());
    return UdsResponse::make_positive(sid, std::move(payload));
}

} // namespace udsmon::testing
