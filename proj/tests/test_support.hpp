#pragma once

// Builders shared by the test suites.

#include <initializer_list>
#include <string>

#include "udsmon/codec.hpp"
#include "udsmon/sensor.hpp"

namespace udsmon::testing {

inline UdsExchange exchange(std::initializer_list<std::uint8_t> req, std::initializer_list<std::uint8_t> rsp,
                            TimestampMs t = 1000, SourceAddress src = 0x0E80, std::string ecu = "ECM",
                            std::string link = "pt") {
    UdsExchange ex;
    ex.request = parse_request(Bytes(req));
    if (rsp.size() > 0) ex.response = parse_response(Bytes(rsp));
    ex.timestamp = t;
    ex.source = src;
    ex.target_ecu = std::move(ecu);
    ex.link = std::move(link);
    return ex;
}

inline SecurityEvent event(std::uint64_t id, Strategy strategy, Sid sid, TimestampMs t, std::string ecu = "ECM",
                           std::string vehicle = "V1") {
    SecurityEvent ev;
    ev.id = id;
    ev.strategy = strategy;
    ev.sid = sid;
    ev.timestamp = t;
    ev.ecu_id = std::move(ecu);
    ev.vehicle_id = std::move(vehicle);
    ev.context.fields = {{"sid", std::uint64_t{sid}}};
    return ev;
}

inline std::string data_path(const std::string &name) { return std::string(UDSMON_DATA_DIR) + "/" + name; }

} // namespace udsmon::testing
