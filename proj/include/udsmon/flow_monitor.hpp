#pragma once

// Message Flow Inconsistency checks at a gateway vantage point.
//
// The topology names every ECU, the link it sits on and its logical
// address, the links a gateway forwards between, the home link of each
// external tester, and the permitted source addresses per (ECU, service).

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "udsmon/codec.hpp"
#include "udsmon/sensor.hpp"

namespace udsmon {

struct EcuNode {
    std::string id;
    std::string link;
    SourceAddress address = 0;
    bool operator==(const EcuNode &) const = default;
};

class Topology {
public:
    std::string vehicle_id;

    void add_link(const std::string &link);
    // The ECU's link must already exist.
    void add_ecu(EcuNode node);
    void add_route(const std::string &from, const std::string &to);
    void add_source(SourceAddress source, const std::string &home_link);
    // sid == nullopt is the wildcard row for the ECU.
    void permit(const std::string &ecu, std::optional<Sid> sid, std::set<SourceAddress> sources);

    const EcuNode &ecu(const std::string &id) const;
    bool has_ecu(const std::string &id) const { return ecus_.contains(id); }
    // Exact (ecu, sid) row, then the ECU wildcard, then the empty set.
    std::set<SourceAddress> permitted_sources(const std::string &ecu, Sid sid) const;
    // Tester table first, then ECU addresses.
    std::optional<std::string> home_link(SourceAddress source) const;
    bool routes(const std::string &from, const std::string &to) const;

    const std::set<std::string> &links() const { return links_; }
    const std::map<std::string, EcuNode> &ecus() const { return ecus_; }
    const std::set<std::pair<std::string, std::string>> &route_pairs() const { return routes_; }
    const std::map<SourceAddress, std::string> &sources() const { return sources_; }
    const std::map<std::pair<std::string, std::optional<Sid>>, std::set<SourceAddress>> &permissions() const {
        return permitted_;
    }

    bool operator==(const Topology &) const = default;

private:
    std::set<std::string> links_;
    std::map<std::string, EcuNode> ecus_;
    std::set<std::pair<std::string, std::string>> routes_;
    std::map<SourceAddress, std::string> sources_;
    std::map<std::pair<std::string, std::optional<Sid>>, std::set<SourceAddress>> permitted_;
};

Topology read_topology(std::istream &in, const std::string &origin);
Topology load_topology(const std::string &path);
void write_topology(std::ostream &out, const Topology &topology);

struct MfiEvent {
    MfiKind kind = MfiKind::unexpected_source;
    Sid sid = 0;
    std::string target_ecu;
    SourceAddress observed_origin = 0;
    std::set<SourceAddress> expected_origins;
    std::string detail;
    TimestampMs timestamp = 0;
    std::string link;
    bool operator==(const MfiEvent &) const = default;
};

// Throws TopologyError for an unknown target ECU.
std::optional<MfiEvent> check_source(const Topology &topology, const UdsExchange &exchange);

// Compares a forwarded copy with its original, if one was found.
std::optional<MfiEvent> check_routing(const Topology &topology, const std::optional<UdsExchange> &upstream,
                                      const UdsExchange &downstream);

struct SequenceOptions {
    std::size_t run_threshold = 3;
};

// Requests for one ECU in timestamp order; runs are counted per source.
// Throws PreconditionError when timestamps decrease.
std::vector<MfiEvent> check_sequence(std::span<const UdsExchange> window, const SequenceOptions &options = {});

constexpr TimestampMs kRoutingPairWindowMs = 2000;

// True when the exchange was observed away from its source's home link.
bool is_forwarded_copy(const Topology &topology, const UdsExchange &exchange);

// Pairs every forwarded copy in a trace with an upstream original and
// returns the inconsistencies. Each original pairs with at most one copy.
// Throws PreconditionError for an unsorted trace.
std::vector<MfiEvent> correlate_routes(const Topology &topology, std::span<const UdsExchange> trace,
                                       TimestampMs pair_window_ms = kRoutingPairWindowMs);

// Wraps an MFI finding into the common event envelope.
SecurityEvent to_security_event(const MfiEvent &mfi);

} // namespace udsmon
