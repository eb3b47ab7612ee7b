#pragma once

// On-board logging: Invalid Request (IR) and Function Execution (FE)
// security events with per-service context data.
//
// Every event carries exactly the context fields listed for its
// (service, strategy) pair; payload bytes never leave the sensor except as
// SHA-256 digests.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "udsmon/codec.hpp"
#include "udsmon/context_store.hpp"
#include "udsmon/digest.hpp"

namespace udsmon {

enum class Strategy { IR, FE, MFI };
std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view text);

enum class MfiKind { unexpected_source, modified_in_transit, routed_without_original, bad_sequence };
std::string_view to_string(MfiKind k);
std::optional<MfiKind> parse_mfi_kind(std::string_view text);

enum class Circumstance { speed, authorization, mode };
std::string_view to_string(Circumstance c);

enum class FeMode { off, always, sensitive_only };

struct SidPolicy {
    bool ir = false;
    FeMode fe = FeMode::off;
    bool mfi = false; // marks intent only; evaluated by the flow monitor
    bool operator==(const SidPolicy &) const = default;
};

struct LoggingPolicy {
    std::map<Sid, SidPolicy> per_sid;
    std::uint32_t speed_threshold_kph = 5;
    std::set<Sid> state_changing_sids;
    std::map<Sid, std::uint8_t> protected_sids;        // required security level
    std::map<std::uint16_t, std::uint8_t> protected_dids; // for 0x2E / 0x2F
    std::set<Sid> dev_only_sids;
    std::map<std::pair<Sid, Strategy>, std::uint32_t> autosar_event_ids;
    // Identifiers that turn sensitive_only FE logging on for a request.
    SensitiveRegistry sensitive;

    const SidPolicy &for_sid(Sid sid) const;
    // Throws PreconditionError for SIDs outside the service registry.
    void set(Sid sid, SidPolicy p);

    // IR for every service, FE for the critical set, 5 km/h speed threshold.
    static LoggingPolicy defaults();
    bool operator==(const LoggingPolicy &) const = default;
};

LoggingPolicy read_policy(std::istream &in, const std::string &origin);
LoggingPolicy load_policy(const std::string &path);
void write_policy(std::ostream &out, const LoggingPolicy &policy);

struct EcuState {
    std::string ecu_id;
    std::uint8_t active_session = 0x01;
    bool security_access_unlocked = false;
    std::uint8_t security_level = 0;
    std::uint32_t vehicle_speed_kph = 0;
    EcuMode mode = EcuMode::production;
    bool workshop_session_active = false;
    // Data received through TransferData since the last download/upload request.
    Bytes transferred;
};

// Advances the ECU state after the exchange has been evaluated.
void apply_exchange(EcuState &state, const UdsExchange &exchange);

using FieldValue = std::variant<std::monostate, std::uint64_t, std::vector<std::uint16_t>, Digest, std::string>;

struct ContextField {
    std::string name;
    FieldValue value;
    bool operator==(const ContextField &) const = default;
};

struct ContextData {
    std::vector<ContextField> fields;

    const FieldValue *find(std::string_view name) const;
    std::optional<std::uint64_t> number(std::string_view name) const;
    std::vector<std::string> names() const;
    bool operator==(const ContextData &) const = default;
};

// Field names for (sid, strategy) in logging order; empty when undefined.
std::vector<std::string_view> context_field_names(Sid sid, Strategy strategy);

struct SecurityEvent {
    std::uint64_t id = 0;
    Strategy strategy = Strategy::IR;
    Sid sid = 0;
    std::string ecu_id;
    std::string vehicle_id;
    SourceAddress source_address = 0;
    TimestampMs timestamp = 0;
    ContextData context;
    std::optional<Circumstance> violation;
    std::optional<MfiKind> mfi_kind;
    std::string detail;
    bool autosar_supported = false;
    std::optional<std::uint32_t> autosar_event_id;

    bool operator==(const SecurityEvent &) const = default;
};

struct CircumstanceViolation {
    Circumstance kind;
    std::string detail;
};

std::optional<CircumstanceViolation> classify_circumstance(const UdsExchange &exchange, const EcuState &state,
                                                           const LoggingPolicy &policy);

ContextData extract_context(Sid sid, const UdsRequest &request, const std::optional<UdsResponse> &response,
                            Strategy strategy, std::span<const std::uint8_t> transferred = {});

// True when a request's context references a sensitive DID, RID, memory
// range or file path.
bool references_sensitive(const ContextData &ctx, const SensitiveRegistry &registry);

enum class AutosarSupport { none, ir_fe };
AutosarSupport autosar_support(Sid sid);

std::vector<SecurityEvent> evaluate_exchange(const LoggingPolicy &policy, const UdsExchange &exchange,
                                             const EcuState &state);

// JSON-lines event log with a stable field order.
std::string format_event_line(const SecurityEvent &event);
std::string format_field_value(std::string_view name, const FieldValue &v);

} // namespace udsmon
