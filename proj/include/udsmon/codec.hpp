#pragma once

// UDS application-layer codec and the service registry.
//
// Frames handled here are already reassembled by the transport; the codec
// never looks below the SID byte. Unknown SIDs parse into requests whose
// `unknown_service()` is true so discovery traffic stays representable.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "udsmon/hex.hpp"

namespace udsmon {

using Sid = std::uint8_t;
using SourceAddress = std::uint16_t;
using TimestampMs = std::uint64_t;

constexpr std::uint8_t kNegativeResponseSid = 0x7F;
constexpr std::uint8_t kPositiveResponseOffset = 0x40;

struct ServiceDescriptor {
    Sid sid;
    std::string_view name;
    std::string_view short_name;
    bool has_subfunction;
    bool in_context_table;
};

// All 27 registered services, ordered by SID.
std::span<const ServiceDescriptor> service_registry();
std::optional<ServiceDescriptor> service_info(Sid sid);

struct UdsRequest {
    Sid sid = 0;
    std::optional<std::uint8_t> subfunction;
    Bytes payload;

    bool unknown_service() const { return !service_info(sid).has_value(); }
    bool operator==(const UdsRequest &) const = default;
};

enum class ResponseKind { positive, negative };

struct UdsResponse {
    ResponseKind kind = ResponseKind::positive;
    Sid sid = 0;
    std::optional<std::uint8_t> nrc;
    Bytes payload;

    bool positive() const { return kind == ResponseKind::positive; }
    bool negative() const { return kind == ResponseKind::negative; }
    bool operator==(const UdsResponse &) const = default;

    static UdsResponse make_positive(Sid sid, Bytes payload = {});
    static UdsResponse make_negative(Sid sid, std::uint8_t nrc);
};

struct UdsExchange {
    UdsRequest request;
    std::optional<UdsResponse> response;
    TimestampMs timestamp = 0;
    SourceAddress source = 0;
    std::string target_ecu;
    std::string link;

    bool operator==(const UdsExchange &) const = default;
};

UdsRequest parse_request(std::span<const std::uint8_t> bytes);
UdsResponse parse_response(std::span<const std::uint8_t> bytes);
Bytes encode_request(const UdsRequest &req);
Bytes encode_response(const UdsResponse &resp);

// Newline-delimited trace records: one JSON object per exchange with
// fields ts, link, src, ecu, req and optional rsp (lowercase hex).
std::string format_trace_line(const UdsExchange &ex);
std::vector<UdsExchange> read_trace(std::istream &in, const std::string &origin);
std::vector<UdsExchange> load_trace(const std::string &path);
void write_trace(std::ostream &out, std::span<const UdsExchange> trace);

} // namespace udsmon
