#include "udsmon/codec.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "udsmon/error.hpp"

namespace udsmon {

namespace {

// Subfunction flags follow ISO 14229: every service whose request carries a
// subfunction byte. 0x3E and 0x83 have one even though neither lists SF as
// logged context.
constexpr std::array<ServiceDescriptor, 27> kServices{{
    {0x10, "DiagnosticSessionControl", "DSC", true, true},
    {0x11, "ECUReset", "ER", true, true},
    {0x14, "ClearDiagnosticInformation", "CDTCI", false, true},
    {0x19, "ReadDTCInformation", "RDTCI", true, true},
    {0x22, "ReadDataByIdentifier", "RDBI", false, true},
    {0x23, "ReadMemoryByAddress", "RMBA", false, true},
    {0x24, "ReadScalingDataByIdentifier", "RSDBI", false, true},
    {0x27, "SecurityAccess", "SA", true, true},
    {0x28, "CommunicationControl", "CC", true, true},
    {0x29, "Authentication", "AUTH", true, true},
    {0x2A, "ReadDataByPeriodicIdentifier", "RDBPI", false, true},
    {0x2C, "DynamicallyDefineDataIdentifier", "DDDID", true, true},
    {0x2E, "WriteDataByIdentifier", "WDBI", false, true},
    {0x2F, "InputOutputControlByIdentifier", "IOCBI", false, true},
    {0x31, "RoutineControl", "RC", true, true},
    {0x34, "RequestDownload", "RD", false, true},
    {0x35, "RequestUpload", "RU", false, true},
    {0x36, "TransferData", "TD", false, true},
    {0x37, "RequestTransferExit", "RTE", false, true},
    {0x38, "RequestFileTransfer", "RFT", false, true},
    {0x3D, "WriteMemoryByAddress", "WMBA", false, true},
    {0x3E, "TesterPresent", "TP", true, true},
    {0x83, "AccessTimingParameters", "ATP", true, false},
    {0x84, "SecuredDataTransmission", "SDT", false, true},
    {0x85, "ControlDTCSetting", "CDTCS", true, true},
    {0x86, "ResponseOnEvent", "ROE", true, true},
    {0x87, "LinkControl", "LC", true, true},
}};

} // namespace

std::span<const ServiceDescriptor> service_registry() { return kServices; }

std::optional<ServiceDescriptor> service_info(Sid sid) {
    auto it = std::lower_bound(kServices.begin(), kServices.end(), sid,
                               [](const ServiceDescriptor &d, Sid s) { return d.sid < s; });
    if (it == kServices.end() || it->sid != sid) return std::nullopt;
    return *it;
}

UdsResponse UdsResponse::make_positive(Sid sid, Bytes payload) {
    return UdsResponse{ResponseKind::positive, sid, std::nullopt, std::move(payload)};
}

UdsResponse UdsResponse::make_negative(Sid sid, std::uint8_t nrc) {
    return UdsResponse{ResponseKind::negative, sid, nrc, {}};
}

UdsRequest parse_request(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw MalformedFrame("empty request frame");
    UdsRequest req;
    req.sid = bytes[0];
    std::size_t offset = 1;
    auto info = service_info(req.sid);
    if (info && info->has_subfunction && bytes.size() >= 2) {
        req.subfunction = bytes[1];
        offset = 2;
    }
    req.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
    return req;
}

UdsResponse parse_response(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw MalformedFrame("empty response frame");
    const std::uint8_t lead = bytes[0];
    if (lead == kNegativeResponseSid) {
        if (bytes.size() != 3) {
            throw MalformedFrame("negative response must be exactly 3 bytes, got " +
                                 std::to_string(bytes.size()));
        }
        return UdsResponse::make_negative(bytes[1], bytes[2]);
    }
    if (lead < 0x50) throw NotAResponse("leading byte " + hex_byte(lead) + " is not a response SID");
    return UdsResponse::make_positive(static_cast<Sid>(lead - kPositiveResponseOffset),
                                      Bytes(bytes.begin() + 1, bytes.end()));
}

Bytes encode_request(const UdsRequest &req) {
    Bytes out;
    out.reserve(2 + req.payload.size());
    out.push_back(req.sid);
    if (req.subfunction) out.push_back(*req.subfunction);
    out.insert(out.end(), req.payload.begin(), req.payload.end());
    return out;
}

Bytes encode_response(const UdsResponse &resp) {
    if (resp.negative()) return {kNegativeResponseSid, resp.sid, resp.nrc.value_or(0)};
    Bytes out;
    out.reserve(1 + resp.payload.size());
    out.push_back(static_cast<std::uint8_t>(resp.sid + kPositiveResponseOffset));
    out.insert(out.end(), resp.payload.begin(), resp.payload.end());
    return out;
}

std::string format_trace_line(const UdsExchange &ex) {
    nlohmann::ordered_json j;
    j["ts"] = ex.timestamp;
    j["link"] = ex.link;
    j["src"] = to_hex(std::array<std::uint8_t, 2>{static_cast<std::uint8_t>(ex.source >> 8),
                                                  static_cast<std::uint8_t>(ex.source & 0xFF)});
    j["ecu"] = ex.target_ecu;
    j["req"] = to_hex(encode_request(ex.request));
    if (ex.response) j["rsp"] = to_hex(encode_response(*ex.response));
    return j.dump();
}

namespace {

Bytes hex_field(const nlohmann::json &j, const char *key, const std::string &origin, std::size_t line) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw ParseError(origin, line, std::string("missing string field '") + key + "'");
    }
    auto bytes = from_hex(j[key].get<std::string>());
    if (!bytes) throw ParseError(origin, line, std::string("malformed hex in field '") + key + "'");
    return *bytes;
}

} // namespace

std::vector<UdsExchange> read_trace(std::istream &in, const std::string &origin) {
    std::vector<UdsExchange> trace;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error &e) {
            throw ParseError(origin, line, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object() || !j.contains("ts") || !j["ts"].is_number_unsigned()) {
            throw ParseError(origin, line, "missing unsigned field 'ts'");
        }
        UdsExchange ex;
        ex.timestamp = j["ts"].get<TimestampMs>();
        if (!j.contains("link") || !j["link"].is_string() || !j.contains("ecu") || !j["ecu"].is_string()) {
            throw ParseError(origin, line, "missing 'link' or 'ecu'");
        }
        ex.link = j["link"].get<std::string>();
        ex.target_ecu = j["ecu"].get<std::string>();
        auto src = hex_field(j, "src", origin, line);
        if (src.size() != 2) throw ParseError(origin, line, "source address must be 2 bytes");
        ex.source = static_cast<SourceAddress>((src[0] << 8) | src[1]);
        try {
            ex.request = parse_request(hex_field(j, "req", origin, line));
            if (j.contains("rsp")) ex.response = parse_response(hex_field(j, "rsp", origin, line));
        } catch (const ParseError &) {
            throw;
        } catch (const Error &e) {
            throw ParseError(origin, line, e.what());
        }
        if (!trace.empty() && ex.timestamp < trace.back().timestamp) {
            throw ParseError(origin, line, "timestamp decreases");
        }
        trace.push_back(std::move(ex));
    }
    return trace;
}

std::vector<UdsExchange> load_trace(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return read_trace(in, path);
}

void write_trace(std::ostream &out, std::span<const UdsExchange> trace) {
    for (const auto &ex : trace) out << format_trace_line(ex) << '\n';
}

} // namespace udsmon
