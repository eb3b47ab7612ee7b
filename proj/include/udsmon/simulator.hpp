#pragma once

// Deterministic scenario generator: labeled traffic, context fixture and
// threat-intelligence items for each catalog technique, plus benign
// workshop and fleet traffic.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "udsmon/context_store.hpp"
#include "udsmon/detection.hpp"
#include "udsmon/flow_monitor.hpp"

namespace udsmon {

// Attack activity of one technique, half-open in trace time.
struct LabelInterval {
    std::string technique;
    TimestampMs start = 0;
    TimestampMs end = 0;
    bool contains(TimestampMs t) const { return t >= start && t < end; }
    bool operator==(const LabelInterval &) const = default;
};

struct Scenario {
    std::string technique; // empty for benign traffic
    std::uint64_t seed = 0;
    Topology topology;
    std::vector<UdsExchange> trace;
    ContextStore store;
    std::vector<ThreatIntelItem> ti;
    std::vector<LabelInterval> truth;
    // Set when the technique leaves nothing a sensor could observe.
    bool undetectable = false;
    bool operator==(const Scenario &) const = default;
};

// Addresses and identifiers of the simulated vehicle.
namespace sim {
constexpr SourceAddress kTester = 0x0E80;
constexpr SourceAddress kEcm = 0x1001;
constexpr SourceAddress kBcm = 0x1002;
constexpr SourceAddress kTcu = 0x1003;
constexpr TimestampMs kStart = 1'000'000'000;
inline const std::string kVehicle = "VIN-SIM-0001";
inline const std::string kModel = "Roadster-X";
} // namespace sim

Topology reference_topology();
// Deterministic image bytes for a registered firmware release.
Bytes firmware_image(const std::string &ecu_type, std::uint32_t version);

// Throws LookupError for ids outside the catalog.
Scenario simulate(std::string_view technique, std::uint64_t seed);

constexpr TimestampMs kMinBenignDurationMs = 10 * 60 * 1000;
// Workshop visit plus fleet background traffic; no technique active.
// Throws PreconditionError for durations below ten minutes.
Scenario benign_traffic(std::uint64_t seed, TimestampMs duration_ms = 12 * 60 * 1000);

void write_truth(std::ostream &out, const Scenario &scenario);
// Writes trace.jsonl, store.txt, topology.txt, ti.jsonl and truth.txt.
void save_scenario(const std::string &dir, const Scenario &scenario);

} // namespace udsmon
