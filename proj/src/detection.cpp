#include "udsmon/detection.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "udsmon/digest.hpp"
#include "udsmon/error.hpp"
#include "udsmon/recfile.hpp"

namespace udsmon {

std::string_view to_string(DetectionStrategy s) {
    switch (s) {
    case DetectionStrategy::SLP: return "SLP";
    case DetectionStrategy::CLC: return "CLC";
    case DetectionStrategy::PTI: return "PTI";
    }
    return "?";
}

std::optional<DetectionStrategy> parse_detection_strategy(std::string_view text) {
    if (text == "SLP") return DetectionStrategy::SLP;
    if (text == "CLC") return DetectionStrategy::CLC;
    if (text == "PTI") return DetectionStrategy::PTI;
    return std::nullopt;
}

std::string_view to_string(Severity s) {
    switch (s) {
    case Severity::info: return "info";
    case Severity::warn: return "warn";
    case Severity::critical: return "critical";
    }
    return "?";
}

std::string_view to_string(Stage s) { return s == Stage::vehicle ? "vehicle" : "vsoc"; }

std::string_view to_string(ClcCheck c) {
    switch (c) {
    case ClcCheck::vehicle_status: return "vehicle-status";
    case ClcCheck::permission: return "permission";
    case ClcCheck::configuration: return "configuration";
    case ClcCheck::cross_log: return "cross-log";
    case ClcCheck::firmware_hash: return "firmware-hash";
    case ClcCheck::sensitive_reference: return "sensitive-reference";
    }
    return "?";
}

std::optional<ClcCheck> parse_clc_check(std::string_view text) {
    for (auto c : {ClcCheck::vehicle_status, ClcCheck::permission, ClcCheck::configuration, ClcCheck::cross_log,
                   ClcCheck::firmware_hash, ClcCheck::sensitive_reference}) {
        if (to_string(c) == text) return c;
    }
    return std::nullopt;
}

std::string_view to_string(TiSource s) {
    switch (s) {
    case TiSource::public_report: return "public";
    case TiSource::disclosed: return "disclosed";
    case TiSource::internal_test: return "internal-test";
    }
    return "?";
}

namespace {

std::optional<TiSource> parse_ti_source(std::string_view text) {
    for (auto s : {TiSource::public_report, TiSource::disclosed, TiSource::internal_test}) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

std::string_view group_key_name(GroupKey k) {
    switch (k) {
    case GroupKey::ecu: return "ecu";
    case GroupKey::source: return "source";
    case GroupKey::vehicle: return "vehicle";
    }
    return "?";
}

std::optional<std::uint8_t> event_sf(const SecurityEvent &ev) {
    if (auto sf = ev.context.number("sf")) return static_cast<std::uint8_t>(*sf & 0x7F);
    return std::nullopt;
}

} // namespace

bool EventPredicate::matches(const SecurityEvent &ev) const {
    if (!strategies.empty() && !strategies.contains(ev.strategy)) return false;
    if (!sids.empty() && !sids.contains(ev.sid)) return false;
    if (!subfunctions.empty() || sf_even) {
        auto sf = event_sf(ev);
        if (!sf) return false;
        if (!subfunctions.empty() && !subfunctions.contains(*sf)) return false;
        if (sf_even && (*sf == 0 || (*sf % 2 == 0) != *sf_even)) return false;
    }
    if (!nrcs.empty()) {
        auto nrc = ev.context.number("nrc");
        if (!nrc || !nrcs.contains(static_cast<std::uint8_t>(*nrc))) return false;
    }
    if (!mfi_kinds.empty() && (!ev.mfi_kind || !mfi_kinds.contains(*ev.mfi_kind))) return false;
    if (!violations.empty() && (!ev.violation || !violations.contains(*ev.violation))) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Rules file

namespace {

template <typename T, typename Parse>
std::set<T> parse_set(const Record &r, const std::string &key, Parse parse) {
    std::set<T> out;
    for (const auto &item : r.list(key)) {
        auto v = parse(item);
        if (!v) r.fail("bad value '" + item + "' for " + key);
        out.insert(*v);
    }
    return out;
}

std::optional<std::uint8_t> parse_byte(std::string_view text) {
    bool ok = false;
    auto v = parse_number(text, ok);
    if (!ok || v > 0xFF) return std::nullopt;
    return static_cast<std::uint8_t>(v);
}

std::optional<Circumstance> parse_circumstance(std::string_view text) {
    for (auto c : {Circumstance::speed, Circumstance::authorization, Circumstance::mode}) {
        if (to_string(c) == text) return c;
    }
    return std::nullopt;
}

EventPredicate read_predicate(const Record &r, const std::string &prefix) {
    EventPredicate p;
    p.strategies = parse_set<Strategy>(r, prefix + "strategy", parse_strategy);
    p.sids = parse_set<Sid>(r, prefix + "sids", parse_byte);
    p.subfunctions = parse_set<std::uint8_t>(r, prefix + "sf", parse_byte);
    if (auto parity = r.get(prefix + "sf_parity")) {
        if (*parity == "even") p.sf_even = true;
        else if (*parity == "odd") p.sf_even = false;
        else r.fail("sf_parity must be even or odd");
    }
    p.nrcs = parse_set<std::uint8_t>(r, prefix + "nrcs", parse_byte);
    p.mfi_kinds = parse_set<MfiKind>(r, prefix + "mfi_kinds", parse_mfi_kind);
    p.violations = parse_set<Circumstance>(r, prefix + "violations", parse_circumstance);
    return p;
}

template <typename T, typename Name>
std::string csv(const std::set<T> &items, Name name) {
    std::vector<std::string> out;
    for (const auto &i : items) out.push_back(std::string(name(i)));
    return join(out, ",");
}

void write_predicate(std::vector<std::pair<std::string, std::string>> &fields, const EventPredicate &p,
                     const std::string &prefix) {
    auto byte = [](std::uint8_t b) { return hex_byte(b); };
    if (!p.strategies.empty()) fields.push_back({prefix + "strategy", csv(p.strategies, [](Strategy s) { return to_string(s); })});
    if (!p.sids.empty()) fields.push_back({prefix + "sids", csv(p.sids, byte)});
    if (!p.subfunctions.empty()) fields.push_back({prefix + "sf", csv(p.subfunctions, byte)});
    if (p.sf_even) fields.push_back({prefix + "sf_parity", *p.sf_even ? "even" : "odd"});
    if (!p.nrcs.empty()) fields.push_back({prefix + "nrcs", csv(p.nrcs, byte)});
    if (!p.mfi_kinds.empty()) fields.push_back({prefix + "mfi_kinds", csv(p.mfi_kinds, [](MfiKind k) { return to_string(k); })});
    if (!p.violations.empty()) {
        fields.push_back({prefix + "violations", csv(p.violations, [](Circumstance c) { return to_string(c); })});
    }
}

std::vector<std::string> technique_list(const Record &r) {
    auto items = r.list("techniques");
    if (items.empty()) r.fail("rule needs at least one technique tag");
    for (const auto &t : items) {
        if (!t.starts_with("AT-")) r.fail("technique tag '" + t + "' must look like AT-<TT>-<NO>");
    }
    return items;
}

} // namespace

RuleSet read_rules(std::istream &in, const std::string &origin) {
    auto file = parse_records(in, origin);
    RuleSet rules;
    std::set<std::string> ids;
    for (const auto &r : file.records) {
        if (r.kind != "rule" || (r.section != "slp" && r.section != "clc")) r.fail("unknown record");
        auto id = r.require("id");
        if (!ids.insert(id).second) r.fail("duplicate rule id " + id);
        if (r.section == "slp") {
            SlpRule rule;
            rule.id = id;
            rule.match = read_predicate(r, "");
            rule.threshold = r.require_number("threshold");
            rule.window_ms = r.require_number("window_ms");
            if (rule.threshold < 1) r.fail("threshold must be at least 1");
            if (rule.window_ms == 0) r.fail("window_ms must be positive");
            if (r.has("group_by")) {
                rule.group_by.clear();
                for (const auto &k : r.list("group_by")) {
                    if (k == "ecu") rule.group_by.insert(GroupKey::ecu);
                    else if (k == "source") rule.group_by.insert(GroupKey::source);
                    else if (k == "vehicle") rule.group_by.insert(GroupKey::vehicle);
                    else r.fail("unknown group key '" + k + "'");
                }
            }
            rule.techniques = technique_list(r);
            auto stage = r.get("stage").value_or("vsoc");
            if (stage == "vehicle") rule.stage = Stage::vehicle;
            else if (stage != "vsoc") r.fail("stage must be vehicle or vsoc");
            rules.slp.push_back(std::move(rule));
        } else {
            ClcRule rule;
            rule.id = id;
            rule.trigger = read_predicate(r, "");
            auto check = parse_clc_check(r.require("check"));
            if (!check) r.fail("unknown check kind");
            rule.check = *check;
            rule.techniques = technique_list(r);
            if (auto mode = r.get("required_mode")) {
                rule.required_mode = parse_ecu_mode(*mode);
                if (!rule.required_mode) r.fail("unknown mode");
            }
            if (auto v = r.number("lookback_ms")) rule.lookback_ms = *v;
            if (auto v = r.number("tolerance_ms")) rule.tolerance_ms = *v;
            if (auto mode = r.get("cross_mode")) {
                if (*mode == "requires") rule.cross_mode = CrossLogMode::requires_prior;
                else if (*mode == "conflicts") rule.cross_mode = CrossLogMode::conflicts;
                else r.fail("cross_mode must be requires or conflicts");
            }
            rule.companion = read_predicate(r, "with_");
            if (rule.check == ClcCheck::cross_log && rule.companion == EventPredicate{}) {
                r.fail("cross-log rule needs a companion predicate");
            }
            rules.clc.push_back(std::move(rule));
        }
    }
    return rules;
}

RuleSet load_rules(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return read_rules(in, path);
}

void write_rules(std::ostream &out, const RuleSet &rules) {
    RecordWriter w(out);
    w.section("slp");
    for (const auto &rule : rules.slp) {
        std::vector<std::pair<std::string, std::string>> f{{"id", rule.id}};
        write_predicate(f, rule.match, "");
        f.push_back({"threshold", std::to_string(rule.threshold)});
        f.push_back({"window_ms", std::to_string(rule.window_ms)});
        f.push_back({"group_by", csv(rule.group_by, group_key_name)});
        f.push_back({"techniques", join(rule.techniques, ",")});
        f.push_back({"stage", std::string(to_string(rule.stage))});
        w.record("rule", f);
    }
    w.section("clc");
    for (const auto &rule : rules.clc) {
        std::vector<std::pair<std::string, std::string>> f{{"id", rule.id}, {"check", std::string(to_string(rule.check))}};
        write_predicate(f, rule.trigger, "");
        f.push_back({"techniques", join(rule.techniques, ",")});
        if (rule.required_mode) f.push_back({"required_mode", std::string(to_string(*rule.required_mode))});
        if (rule.check == ClcCheck::permission || rule.check == ClcCheck::cross_log ||
            rule.check == ClcCheck::firmware_hash) {
            f.push_back({"lookback_ms", std::to_string(rule.lookback_ms)});
        }
        if (rule.check == ClcCheck::cross_log) {
            f.push_back({"cross_mode", rule.cross_mode == CrossLogMode::conflicts ? "conflicts" : "requires"});
            f.push_back({"tolerance_ms", std::to_string(rule.tolerance_ms)});
            write_predicate(f, rule.companion, "with_");
        }
        w.record("rule", f);
    }
}

const RuleSet &default_rules() {
    static const RuleSet rules = [] {
        std::istringstream in{std::string(default_rules_text())};
        return read_rules(in, "<default rules>");
    }();
    return rules;
}

// ---------------------------------------------------------------------------
// TI feed

std::vector<ThreatIntelItem> read_ti_feed(std::istream &in, const std::string &origin) {
    std::vector<ThreatIntelItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            ThreatIntelItem item;
            item.id = j.at("id").get<std::string>();
            auto source = parse_ti_source(j.at("source").get<std::string>());
            if (!source) throw ParseError(origin, line_no, "unknown source kind");
            item.source = *source;
            for (const auto &t : j.at("tags")) item.tags.insert(t.get<std::string>());
            if (item.tags.empty()) throw ParseError(origin, line_no, "item without tags");
            item.text = j.value("text", "");
            items.push_back(std::move(item));
        } catch (const nlohmann::json::exception &e) {
            throw ParseError(origin, line_no, e.what());
        }
    }
    return items;
}

std::vector<ThreatIntelItem> load_ti_feed(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return read_ti_feed(in, path);
}

void write_ti_feed(std::ostream &out, std::span<const ThreatIntelItem> items) {
    for (const auto &item : items) {
        nlohmann::ordered_json j;
        j["id"] = item.id;
        j["source"] = to_string(item.source);
        j["tags"] = item.tags;
        j["text"] = item.text;
        out << j.dump() << '\n';
    }
}

std::vector<AssetTags> fleet_assets(const ContextStore &store) {
    std::vector<AssetTags> out;
    for (const auto &[id, v] : store.vehicles()) {
        AssetTags a{id, v.model, {}};
        for (const auto &[ecu, entry] : v.ecus) a.ecu_types.insert(entry.ecu_type);
        out.push_back(std::move(a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Alerts

std::string alert_id(const Alert &a) {
    std::ostringstream s;
    s << to_string(a.strategy) << '|' << a.rule_id << '|' << a.vehicle_id << '|' << a.ecu_id << '|';
    for (auto id : a.event_ids) s << id << ',';
    s << '|';
    for (const auto &t : a.ti_items) s << t << ',';
    s << '|' << a.window_start.value_or(0) << '|' << a.window_end.value_or(0);
    return digest_hex(hash_text(s.str())).substr(0, 12);
}

namespace {

std::string group_of(const SlpRule &rule, const SecurityEvent &ev) {
    std::string key;
    if (rule.group_by.contains(GroupKey::vehicle)) key += ev.vehicle_id;
    key += '|';
    if (rule.group_by.contains(GroupKey::ecu)) key += ev.ecu_id;
    key += '|';
    if (rule.group_by.contains(GroupKey::source)) key += hex_u16(ev.source_address);
    return key;
}

void require_sorted(std::span<const SecurityEvent> events) {
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].timestamp < events[i - 1].timestamp) throw PreconditionError("event stream is not sorted");
    }
}

} // namespace

std::vector<Alert> slp_evaluate(const SlpRule &rule, std::span<const SecurityEvent> events) {
    if (rule.threshold < 1 || rule.window_ms == 0) throw PreconditionError("SLP rule needs N >= 1 and W > 0");
    require_sorted(events);
    std::map<std::string, std::deque<std::size_t>> windows;
    std::vector<Alert> out;
    for (std::size_t j = 0; j < events.size(); ++j) {
        const auto &ev = events[j];
        if (!rule.match.matches(ev)) continue;
        auto &dq = windows[group_of(rule, ev)];
        dq.push_back(j);
        while (ev.timestamp - events[dq.front()].timestamp >= rule.window_ms) dq.pop_front();
        if (dq.size() < rule.threshold) continue;

        Alert a;
        a.strategy = DetectionStrategy::SLP;
        a.rule_id = rule.id;
        a.techniques = rule.techniques;
        a.vehicle_id = ev.vehicle_id;
        a.ecu_id = rule.group_by.contains(GroupKey::ecu) ? ev.ecu_id : "";
        for (auto i : dq) a.event_ids.push_back(events[i].id);
        a.window_start = events[dq.front()].timestamp;
        a.window_end = ev.timestamp;
        a.explanation = std::to_string(dq.size()) + " matching events within " + std::to_string(rule.window_ms) + " ms";
        a.severity = Severity::warn;
        a.stage = rule.stage;
        a.id = alert_id(a);
        out.push_back(std::move(a));
        dq.clear();
    }
    return out;
}

namespace {

const VehicleRecord &vehicle_or_defer(const ClcRule &rule, const SecurityEvent &ev, const ContextStore *store) {
    if (!store) throw ContextUnavailable("rule " + rule.id + " needs a context store");
    if (!store->has_vehicle(ev.vehicle_id)) {
        throw ContextUnavailable("no store record for vehicle '" + ev.vehicle_id + "'");
    }
    return store->vehicle(ev.vehicle_id);
}

// Events of the same ECU logged before `ev`, newest first, within lookback.
template <typename F>
const SecurityEvent *find_prior(std::span<const SecurityEvent> log, const SecurityEvent &ev, TimestampMs lookback,
                                F &&pred) {
    const TimestampMs earliest = ev.timestamp > lookback ? ev.timestamp - lookback : 0;
    for (auto it = log.rbegin(); it != log.rend(); ++it) {
        if (it->timestamp > ev.timestamp || it->id >= ev.id) continue;
        if (it->timestamp < earliest) break;
        if (it->ecu_id == ev.ecu_id && pred(*it)) return &*it;
    }
    return nullptr;
}

bool grants_access(const SecurityEvent &e) {
    if (e.strategy != Strategy::FE) return false;
    auto sf = e.context.number("sf");
    if (!sf) return false;
    const auto s = *sf & 0x7F;
    if (e.sid == 0x27) return s != 0 && s % 2 == 0;
    if (e.sid == 0x29) return s == 0x03 || s == 0x06 || s == 0x07;
    return false;
}

std::string describe(const SecurityEvent &ev) {
    std::string s = std::string(to_string(ev.strategy)) + " " + hex_byte(ev.sid) + " on " + ev.ecu_id;
    if (auto sf = ev.context.number("sf")) s += " sf " + hex_byte(static_cast<std::uint8_t>(*sf));
    return s;
}

} // namespace

std::optional<Alert> clc_evaluate(const ClcRule &rule, const SecurityEvent &ev, const ContextStore *store,
                                  std::span<const SecurityEvent> log) {
    std::optional<std::string> fact;
    Severity severity = Severity::warn;

    switch (rule.check) {
    case ClcCheck::vehicle_status: {
        const auto &vehicle = vehicle_or_defer(rule, ev, store);
        auto sample = store->state_at(ev.vehicle_id, ev.timestamp);
        const bool in_window = store->in_maintenance(ev.vehicle_id, ev.timestamp);
        const bool workshop = sample && sample->workshop_session_active;
        if (!in_window && !workshop) {
            fact = "no maintenance window or workshop session at " + std::to_string(ev.timestamp);
        } else if (rule.required_mode) {
            auto mode = sample ? sample->mode : EcuMode::production;
            if (auto it = vehicle.ecus.find(ev.ecu_id); !sample && it != vehicle.ecus.end()) mode = it->second.mode;
            if (mode != *rule.required_mode) {
                fact = "ECU mode " + std::string(to_string(mode)) + ", rule requires " +
                       std::string(to_string(*rule.required_mode));
            }
        }
        break;
    }
    case ClcCheck::permission: {
        severity = Severity::critical;
        if (!find_prior(log, ev, rule.lookback_ms, grants_access)) {
            fact = "no granted security access on " + ev.ecu_id + " within " + std::to_string(rule.lookback_ms) + " ms";
        }
        break;
    }
    case ClcCheck::configuration: {
        const auto &vehicle = vehicle_or_defer(rule, ev, store);
        auto sf = event_sf(ev);
        for (const auto &f : vehicle.forbidden) {
            if (f.ecu == ev.ecu_id && f.sid == ev.sid && (!f.subfunction || (sf && *f.subfunction == *sf))) {
                fact = "service " + hex_byte(ev.sid) + " disabled in vehicle configuration";
                break;
            }
        }
        if (!fact && ev.sid == 0x2E) {
            auto did = ev.context.number("did");
            const auto *hash = ev.context.find("data_hash");
            const auto *digest = hash ? std::get_if<Digest>(hash) : nullptr;
            if (did && digest) {
                for (const auto &e : vehicle.expected_dids) {
                    if (e.ecu == ev.ecu_id && e.did == *did && e.digest != *digest) {
                        fact = "DID " + hex_u16(e.did) + " written with unexpected content";
                        break;
                    }
                }
            }
        }
        break;
    }
    case ClcCheck::cross_log: {
        if (rule.cross_mode == CrossLogMode::requires_prior) {
            auto companion = [&](const SecurityEvent &e) { return rule.companion.matches(e); };
            if (!find_prior(log, ev, rule.lookback_ms, companion)) {
                fact = "required companion event missing within " + std::to_string(rule.lookback_ms) + " ms";
            }
        } else {
            const TimestampMs lo = ev.timestamp > rule.tolerance_ms ? ev.timestamp - rule.tolerance_ms : 0;
            const TimestampMs hi = ev.timestamp + rule.tolerance_ms;
            for (const auto &e : log) {
                if (e.timestamp < lo) continue;
                if (e.timestamp > hi) break;
                if (e.id != ev.id && e.ecu_id == ev.ecu_id && e.sid == ev.sid && rule.companion.matches(e)) {
                    fact = "conflicting " + describe(e) + " (event " + std::to_string(e.id) + ")";
                    break;
                }
            }
        }
        break;
    }
    case ClcCheck::firmware_hash: {
        severity = Severity::critical;
        const auto *hash = ev.context.find("transfer_hash");
        const auto *digest = hash ? std::get_if<Digest>(hash) : nullptr;
        if (!digest) break;
        auto request = find_prior(log, ev, rule.lookback_ms, [](const SecurityEvent &e) {
            return e.strategy == Strategy::FE && (e.sid == 0x34 || e.sid == 0x35);
        });
        if (!request || request->sid != 0x34) break; // uploads carry no image
        const auto &vehicle = vehicle_or_defer(rule, ev, store);
        auto it = vehicle.ecus.find(ev.ecu_id);
        if (it == vehicle.ecus.end()) throw ContextUnavailable("ECU " + ev.ecu_id + " missing from inventory");
        FirmwareStatus status;
        try {
            status = store->firmware_known(it->second.ecu_type, *digest);
        } catch (const LookupError &e) {
            throw ContextUnavailable(e.what());
        }
        if (status == FirmwareStatus::authorized_older) {
            fact = "downgrade: image is an older authorized " + it->second.ecu_type + " release";
        } else if (status == FirmwareStatus::unknown) {
            fact = "image digest unknown to the " + it->second.ecu_type + " firmware registry";
        }
        break;
    }
    case ClcCheck::sensitive_reference: {
        severity = Severity::critical;
        vehicle_or_defer(rule, ev, store);
        if (references_sensitive(ev.context, store->sensitive())) fact = "request references a sensitive identifier";
        break;
    }
    }

    if (!fact) return std::nullopt;
    Alert a;
    a.strategy = DetectionStrategy::CLC;
    a.rule_id = rule.id;
    a.techniques = rule.techniques;
    a.vehicle_id = ev.vehicle_id;
    a.ecu_id = ev.ecu_id;
    a.event_ids = {ev.id};
    a.explanation = std::string(to_string(rule.check)) + " check failed for " + describe(ev);
    a.context_fact = *fact;
    a.severity = severity;
    a.id = alert_id(a);
    return a;
}

std::vector<Alert> pti_evaluate(std::span<const ThreatIntelItem> items, std::span<const AssetTags> assets) {
    std::vector<Alert> out;
    for (const auto &item : items) {
        std::vector<std::string> techniques;
        for (const auto &t : item.tags) {
            if (t.starts_with("technique:")) techniques.push_back(t.substr(10));
        }
        for (const auto &asset : assets) {
            std::vector<std::string> hits;
            if (item.tags.contains("model:" + asset.model)) hits.push_back("model:" + asset.model);
            for (const auto &type : asset.ecu_types) {
                if (item.tags.contains("ecu_type:" + type)) hits.push_back("ecu_type:" + type);
            }
            if (hits.empty()) continue;
            Alert a;
            a.strategy = DetectionStrategy::PTI;
            a.rule_id = "pti";
            a.techniques = techniques;
            a.vehicle_id = asset.vehicle_id;
            a.ti_items = {item.id};
            a.explanation = "threat intelligence item " + item.id + " matches " + join(hits, ",");
            a.context_fact = item.text;
            if (item.source != TiSource::public_report) a.severity = Severity::warn;
            else a.severity = techniques.empty() ? Severity::info : Severity::critical;
            a.id = alert_id(a);
            out.push_back(std::move(a));
        }
    }
    std::sort(out.begin(), out.end(), [](const Alert &x, const Alert &y) {
        return std::tie(x.ti_items, x.vehicle_id) < std::tie(y.ti_items, y.vehicle_id);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

AlertReport run_pipeline(const RuleSet &rules, std::span<const SecurityEvent> events, const ContextStore *store,
                         std::span<const ThreatIntelItem> ti) {
    require_sorted(events);
    std::map<std::string, std::vector<SecurityEvent>> partitions;
    for (const auto &ev : events) partitions[ev.vehicle_id].push_back(ev);

    AlertReport report;
    std::vector<Alert> alerts;
    for (const auto &[vehicle, log] : partitions) {
        for (const auto &rule : rules.slp) {
            auto found = slp_evaluate(rule, log);
            alerts.insert(alerts.end(), found.begin(), found.end());
        }
        for (const auto &ev : log) {
            for (const auto &rule : rules.clc) {
                if (!rule.trigger.matches(ev)) continue;
                try {
                    if (auto a = clc_evaluate(rule, ev, store, log)) alerts.push_back(std::move(*a));
                } catch (const ContextUnavailable &e) {
                    report.deferred.push_back({ev.id, rule.id, e.what()});
                }
            }
        }
    }
    if (store && !ti.empty()) {
        auto assets = fleet_assets(*store);
        auto found = pti_evaluate(ti, assets);
        alerts.insert(alerts.end(), found.begin(), found.end());
    }

    std::stable_sort(alerts.begin(), alerts.end(), [](const Alert &a, const Alert &b) {
        auto ka = std::make_tuple(a.strategy, a.vehicle_id, a.window_end.value_or(0),
                                  a.event_ids.empty() ? 0 : a.event_ids.front(), a.rule_id, a.id);
        auto kb = std::make_tuple(b.strategy, b.vehicle_id, b.window_end.value_or(0),
                                  b.event_ids.empty() ? 0 : b.event_ids.front(), b.rule_id, b.id);
        return ka < kb;
    });
    alerts.erase(std::unique(alerts.begin(), alerts.end(), [](const Alert &a, const Alert &b) { return a.id == b.id; }),
                 alerts.end());

    for (const auto &a : alerts) {
        report.strategies_fired.insert(a.strategy);
        for (const auto &t : a.techniques) report.by_technique[t].push_back(a.id);
    }
    report.alerts = std::move(alerts);
    return report;
}

std::string format_report_text(const AlertReport &report) {
    std::ostringstream out;
    out << "alerts " << report.alerts.size() << '\n';
    for (const auto &a : report.alerts) {
        out << a.id << ' ' << to_string(a.strategy) << ' ' << to_string(a.severity) << ' ' << to_string(a.stage)
            << " rule=" << a.rule_id << " vehicle=" << a.vehicle_id;
        if (!a.ecu_id.empty()) out << " ecu=" << a.ecu_id;
        out << " techniques=" << join(a.techniques, ",");
        if (!a.event_ids.empty()) {
            std::vector<std::string> ids;
            for (auto id : a.event_ids) ids.push_back(std::to_string(id));
            out << " events=" << join(ids, ",");
        }
        if (!a.ti_items.empty()) out << " ti=" << join(a.ti_items, ",");
        if (a.window_start) out << " window=" << *a.window_start << ".." << *a.window_end;
        out << '\n' << "  " << a.explanation;
        if (!a.context_fact.empty()) out << "; " << a.context_fact;
        out << '\n';
    }
    out << "techniques";
    for (const auto &[t, ids] : report.by_technique) out << ' ' << t << ':' << ids.size();
    out << '\n' << "strategies";
    for (auto s : report.strategies_fired) out << ' ' << to_string(s);
    out << '\n' << "deferred " << report.deferred.size() << '\n';
    for (const auto &d : report.deferred) out << "  event=" << d.event_id << " rule=" << d.rule_id << ' ' << d.reason << '\n';
    return out.str();
}

std::string format_report_json(const AlertReport &report) {
    nlohmann::ordered_json j;
    auto alerts = nlohmann::ordered_json::array();
    for (const auto &a : report.alerts) {
        nlohmann::ordered_json o;
        o["id"] = a.id;
        o["strategy"] = to_string(a.strategy);
        o["rule"] = a.rule_id;
        o["techniques"] = a.techniques;
        o["vehicle"] = a.vehicle_id;
        o["ecu"] = a.ecu_id.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(a.ecu_id);
        o["events"] = a.event_ids;
        o["ti_items"] = a.ti_items;
        if (a.window_start) o["window"] = {*a.window_start, *a.window_end};
        o["explanation"] = a.explanation;
        o["context_fact"] = a.context_fact;
        o["severity"] = to_string(a.severity);
        o["stage"] = to_string(a.stage);
        alerts.push_back(std::move(o));
    }
    j["alerts"] = std::move(alerts);
    j["by_technique"] = report.by_technique;
    auto fired = nlohmann::ordered_json::array();
    for (auto s : report.strategies_fired) fired.push_back(to_string(s));
    j["strategies"] = std::move(fired);
    auto deferred = nlohmann::ordered_json::array();
    for (const auto &d : report.deferred) {
        deferred.push_back({{"event", d.event_id}, {"rule", d.rule_id}, {"reason", d.reason}});
    }
    j["deferred"] = std::move(deferred);
    return j.dump(2) + "\n";
}

} // namespace udsmon
