#include "udsmon/sensing.hpp"

#include <algorithm>
#include <map>

#include "udsmon/error.hpp"

namespace udsmon {

namespace {

struct Pending {
    TimestampMs timestamp;
    std::size_t order;
    SecurityEvent event;
};

void refresh_state(EcuState &state, const ContextStore *store, const std::string &vehicle, TimestampMs t) {
    if (!store || vehicle.empty() || !store->has_vehicle(vehicle)) return;
    const auto &rec = store->vehicle(vehicle);
    if (auto it = rec.ecus.find(state.ecu_id); it != rec.ecus.end()) state.mode = it->second.mode;
    if (auto sample = store->state_at(vehicle, t)) {
        state.vehicle_speed_kph = sample->speed_kph;
        state.mode = sample->mode;
        state.workshop_session_active = sample->workshop_session_active;
    }
}

} // namespace

std::vector<SecurityEvent> sense_trace(const LoggingPolicy &policy, const Topology &topology,
                                       const ContextStore *store, std::span<const UdsExchange> trace,
                                       const SensingOptions &options) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (trace[i].timestamp < trace[i - 1].timestamp) throw PreconditionError("trace is not sorted");
    }

    auto vehicle_of = [&](const std::string &ecu) -> std::string {
        if (!topology.vehicle_id.empty()) return topology.vehicle_id;
        if (store) return store->vehicle_of_ecu(ecu).value_or("");
        return "";
    };
    auto mfi_enabled = [&](Sid sid) { return !service_info(sid) || policy.for_sid(sid).mfi; };

    std::vector<Pending> pending;
    std::map<std::string, EcuState> states;
    std::map<std::string, std::vector<UdsExchange>> on_home;

    for (const auto &ex : trace) {
        const auto &node = topology.ecu(ex.target_ecu);
        if (ex.link != node.link) continue;
        on_home[ex.target_ecu].push_back(ex);

        auto [it, inserted] = states.try_emplace(ex.target_ecu);
        auto &state = it->second;
        if (inserted) state.ecu_id = ex.target_ecu;
        refresh_state(state, store, vehicle_of(ex.target_ecu), ex.timestamp);

        for (auto &ev : evaluate_exchange(policy, ex, state)) {
            pending.push_back({ex.timestamp, pending.size(), std::move(ev)});
        }
        apply_exchange(state, ex);

        if (!ex.request.unknown_service() && mfi_enabled(ex.request.sid)) {
            if (auto mfi = check_source(topology, ex)) {
                pending.push_back({mfi->timestamp, pending.size(), to_security_event(*mfi)});
            }
        }
    }

    for (const auto &[ecu, window] : on_home) {
        for (const auto &mfi : check_sequence(window, options.sequence)) {
            if (mfi_enabled(mfi.sid)) pending.push_back({mfi.timestamp, pending.size(), to_security_event(mfi)});
        }
    }
    for (const auto &mfi : correlate_routes(topology, trace, options.routing_pair_window_ms)) {
        if (mfi_enabled(mfi.sid)) pending.push_back({mfi.timestamp, pending.size(), to_security_event(mfi)});
    }

    std::stable_sort(pending.begin(), pending.end(), [](const Pending &a, const Pending &b) {
        return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.order < b.order;
    });
    std::vector<SecurityEvent> out;
    out.reserve(pending.size());
    for (auto &p : pending) {
        p.event.id = out.size() + 1;
        p.event.vehicle_id = vehicle_of(p.event.ecu_id);
        out.push_back(std::move(p.event));
    }
    return out;
}

std::string format_event_log(std::span<const SecurityEvent> events) {
    std::string out;
    for (const auto &ev : events) {
        out += format_event_line(ev);
        out += '\n';
    }
    return out;
}

} // namespace udsmon
