#pragma once

// Backend detection over security event logs: counting rules (SLP),
// contextual checks against the store (CLC) and threat-intelligence
// matching (PTI).

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "udsmon/context_store.hpp"
#include "udsmon/sensor.hpp"

namespace udsmon {

enum class DetectionStrategy { SLP, CLC, PTI };
std::string_view to_string(DetectionStrategy s);
std::optional<DetectionStrategy> parse_detection_strategy(std::string_view text);

enum class Severity { info, warn, critical };
std::string_view to_string(Severity s);

// Where an alert fired: on the vehicle before upload, or in the backend.
enum class Stage { vehicle, vsoc };
std::string_view to_string(Stage s);

enum class GroupKey { ecu, source, vehicle };

// Conjunction of constraints; an empty set leaves that attribute open.
struct EventPredicate {
    std::set<Strategy> strategies;
    std::set<Sid> sids;
    std::set<std::uint8_t> subfunctions; // compared without the suppress bit
    std::optional<bool> sf_even;
    std::set<std::uint8_t> nrcs;
    std::set<MfiKind> mfi_kinds;
    std::set<Circumstance> violations;

    bool matches(const SecurityEvent &ev) const;
    bool operator==(const EventPredicate &) const = default;
};

struct SlpRule {
    std::string id;
    EventPredicate match;
    std::size_t threshold = 1;
    TimestampMs window_ms = 60000;
    std::set<GroupKey> group_by{GroupKey::vehicle, GroupKey::ecu};
    std::vector<std::string> techniques;
    Stage stage = Stage::vsoc;
    bool operator==(const SlpRule &) const = default;
};

enum class ClcCheck {
    vehicle_status,
    permission,
    configuration,
    cross_log,
    firmware_hash,
    sensitive_reference,
};
std::string_view to_string(ClcCheck c);
std::optional<ClcCheck> parse_clc_check(std::string_view text);

enum class CrossLogMode { requires_prior, conflicts };

struct ClcRule {
    std::string id;
    EventPredicate trigger;
    ClcCheck check = ClcCheck::vehicle_status;
    std::vector<std::string> techniques;
    // vehicle-status: the ECU must also be in this mode.
    std::optional<EcuMode> required_mode;
    // permission and cross-log (requires): how far back to look.
    TimestampMs lookback_ms = 600000;
    // cross-log
    CrossLogMode cross_mode = CrossLogMode::requires_prior;
    EventPredicate companion;
    TimestampMs tolerance_ms = 2000;
    bool operator==(const ClcRule &) const = default;
};

struct RuleSet {
    std::vector<SlpRule> slp;
    std::vector<ClcRule> clc;
    bool operator==(const RuleSet &) const = default;
};

RuleSet read_rules(std::istream &in, const std::string &origin);
RuleSet load_rules(const std::string &path);
void write_rules(std::ostream &out, const RuleSet &rules);
// The shipped rule set.
const RuleSet &default_rules();
std::string_view default_rules_text();

enum class TiSource { public_report, disclosed, internal_test };
std::string_view to_string(TiSource s);

// Tags are "model:<name>", "ecu_type:<type>", "technique:<id>" or "sid:0x..".
struct ThreatIntelItem {
    std::string id;
    TiSource source = TiSource::public_report;
    std::set<std::string> tags;
    std::string text;
    bool operator==(const ThreatIntelItem &) const = default;
};

std::vector<ThreatIntelItem> read_ti_feed(std::istream &in, const std::string &origin);
std::vector<ThreatIntelItem> load_ti_feed(const std::string &path);
void write_ti_feed(std::ostream &out, std::span<const ThreatIntelItem> items);

struct AssetTags {
    std::string vehicle_id;
    std::string model;
    std::set<std::string> ecu_types;
    bool operator==(const AssetTags &) const = default;
};

std::vector<AssetTags> fleet_assets(const ContextStore &store);

struct Alert {
    std::string id;
    DetectionStrategy strategy = DetectionStrategy::SLP;
    std::string rule_id;
    std::vector<std::string> techniques;
    std::string vehicle_id;
    std::string ecu_id;
    std::vector<std::uint64_t> event_ids;
    std::vector<std::string> ti_items;
    std::optional<TimestampMs> window_start;
    std::optional<TimestampMs> window_end;
    std::string explanation;
    std::string context_fact;
    Severity severity = Severity::warn;
    Stage stage = Stage::vsoc;
    bool operator==(const Alert &) const = default;
};

// Content-derived id so merges do not depend on processing order.
std::string alert_id(const Alert &alert);

// Sliding window per group; events that trigger an alert are consumed.
// Throws PreconditionError for unsorted input or an invalid rule.
std::vector<Alert> slp_evaluate(const SlpRule &rule, std::span<const SecurityEvent> events);

// `neighborhood` is the time-ordered log of the event's vehicle.
// Throws ContextUnavailable when the check needs a store that is missing or
// does not know the vehicle.
std::optional<Alert> clc_evaluate(const ClcRule &rule, const SecurityEvent &event, const ContextStore *store,
                                  std::span<const SecurityEvent> neighborhood);

std::vector<Alert> pti_evaluate(std::span<const ThreatIntelItem> items, std::span<const AssetTags> assets);

struct DeferredCheck {
    std::uint64_t event_id = 0;
    std::string rule_id;
    std::string reason;
    bool operator==(const DeferredCheck &) const = default;
};

struct AlertReport {
    std::vector<Alert> alerts;
    std::map<std::string, std::vector<std::string>> by_technique; // technique -> alert ids
    std::set<DetectionStrategy> strategies_fired;
    std::vector<DeferredCheck> deferred;

    bool empty() const { return alerts.empty() && deferred.empty(); }
    bool operator==(const AlertReport &) const = default;
};

AlertReport run_pipeline(const RuleSet &rules, std::span<const SecurityEvent> events, const ContextStore *store,
                         std::span<const ThreatIntelItem> ti);

std::string format_report_text(const AlertReport &report);
std::string format_report_json(const AlertReport &report);

} // namespace udsmon
