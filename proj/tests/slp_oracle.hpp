#pragma once

// Quadratic reference for sliding-window counting and a random event source.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "udsmon/detection.hpp"

namespace udsmon::testing {

struct OracleAlert {
    std::vector<std::uint64_t> events;
    bool operator==(const OracleAlert &) const = default;
};

// Quadratic window oracle: at each matching event, rescan every earlier
// matching event of its group since the last alert of that group.
inline std::vector<OracleAlert> slp_oracle(const SlpRule &rule, const std::vector<SecurityEvent> &events) {
    auto group = [&](const SecurityEvent &e) {
        std::string g;
        if (rule.group_by.contains(GroupKey::vehicle)) g += e.vehicle_id;
        g += '|';
        if (rule.group_by.contains(GroupKey::ecu)) g += e.ecu_id;
        g += '|';
        if (rule.group_by.contains(GroupKey::source)) g += std::to_string(e.source_address);
        return g;
    };
    std::map<std::string, std::size_t> reset; // first index still eligible
    std::vector<OracleAlert> out;
    for (std::size_t j = 0; j < events.size(); ++j) {
        if (!rule.match.matches(events[j])) continue;
        const auto g = group(events[j]);
        std::vector<std::uint64_t> inside;
        for (std::size_t i = reset[g]; i <= j; ++i) {
            if (!rule.match.matches(events[i]) || group(events[i]) != g) continue;
            if (events[j].timestamp - events[i].timestamp < rule.window_ms) inside.push_back(events[i].id);
        }
        if (inside.size() >= rule.threshold) {
            out.push_back({inside});
            reset[g] = j + 1;
        }
    }
    return out;
}

inline std::vector<SecurityEvent> random_stream(std::mt19937_64 &rng, std::size_t max_len) {
    std::vector<SecurityEvent> out;
    const std::size_t n = rng() % (max_len + 1);
    TimestampMs t = 0;
    static const Sid kSids[] = {0x27, 0x22, 0x31};
    static const char *kEcus[] = {"ECM", "BCM"};
    static const char *kVehicles[] = {"V1", "V2"};
    for (std::size_t i = 0; i < n; ++i) {
        t += rng() % 9000;
        auto e = event(i + 1, rng() % 4 == 0 ? Strategy::FE : Strategy::IR, kSids[rng() % 3], t, kEcus[rng() % 2],
                       kVehicles[rng() % 2]);
        e.source_address = static_cast<SourceAddress>(rng() % 2);
        out.push_back(e);
    }
    return out;
}

} // namespace udsmon::testing
