#pragma once

// Vehicle-side sensing: runs the on-board sensor and the gateway flow
// monitor over one recorded trace and returns the merged event log.

#include <span>
#include <vector>

#include "udsmon/context_store.hpp"
#include "udsmon/flow_monitor.hpp"
#include "udsmon/sensor.hpp"

namespace udsmon {

struct SensingOptions {
    SequenceOptions sequence;
    TimestampMs routing_pair_window_ms = kRoutingPairWindowMs;
};

// Each exchange is evaluated by the sensor only on its target ECU's own
// link. Vehicle speed and mode come from the store timeline when a store is
// given. Events are ordered by timestamp and numbered from 1.
// Throws TopologyError for exchanges addressed to unknown ECUs and
// PreconditionError for an unsorted trace.
std::vector<SecurityEvent> sense_trace(const LoggingPolicy &policy, const Topology &topology,
                                       const ContextStore *store, std::span<const UdsExchange> trace,
                                       const SensingOptions &options = {});

std::string format_event_log(std::span<const SecurityEvent> events);

} // namespace udsmon
