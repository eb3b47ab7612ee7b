#include "udsmon/sensor.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "udsmon/error.hpp"
#include "udsmon/recfile.hpp"

namespace udsmon {

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::IR: return "IR";
    case Strategy::FE: return "FE";
    case Strategy::MFI: return "MFI";
    }
    return "?";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
    if (text == "IR") return Strategy::IR;
    if (text == "FE") return Strategy::FE;
    if (text == "MFI") return Strategy::MFI;
    return std::nullopt;
}

std::string_view to_string(MfiKind k) {
    switch (k) {
    case MfiKind::unexpected_source: return "unexpected-source";
    case MfiKind::modified_in_transit: return "modified-in-transit";
    case MfiKind::routed_without_original: return "routed-without-original";
    case MfiKind::bad_sequence: return "bad-sequence";
    }
    return "?";
}

std::optional<MfiKind> parse_mfi_kind(std::string_view text) {
    for (auto k : {MfiKind::unexpected_source, MfiKind::modified_in_transit, MfiKind::routed_without_original,
                   MfiKind::bad_sequence}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

std::string_view to_string(Circumstance c) {
    switch (c) {
    case Circumstance::speed: return "speed";
    case Circumstance::authorization: return "authorization";
    case Circumstance::mode: return "mode";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Policy

const SidPolicy &LoggingPolicy::for_sid(Sid sid) const {
    static const SidPolicy kDisabled{};
    auto it = per_sid.find(sid);
    return it == per_sid.end() ? kDisabled : it->second;
}

void LoggingPolicy::set(Sid sid, SidPolicy p) {
    if (!service_info(sid)) throw PreconditionError("policy SID " + hex_byte(sid) + " is not a registered service");
    per_sid[sid] = p;
}

LoggingPolicy LoggingPolicy::defaults() {
    LoggingPolicy p;
    const std::set<Sid> fe_always{0x10, 0x11, 0x14, 0x19, 0x27, 0x28, 0x29, 0x2A, 0x2E, 0x2F,
                                  0x31, 0x34, 0x35, 0x37, 0x38, 0x3D, 0x84, 0x85, 0x86, 0x87};
    const std::set<Sid> fe_sensitive{0x22, 0x23, 0x24, 0x2C};
    for (const auto &d : service_registry()) {
        SidPolicy sp;
        sp.ir = true;
        sp.mfi = true;
        if (fe_always.contains(d.sid)) sp.fe = FeMode::always;
        if (fe_sensitive.contains(d.sid)) sp.fe = FeMode::sensitive_only;
        p.per_sid[d.sid] = sp;
    }
    p.state_changing_sids = {0x11, 0x28, 0x2E, 0x2F, 0x31, 0x34, 0x36, 0x37, 0x38, 0x3D, 0x85};
    p.protected_sids = {{0x2E, 1}, {0x2F, 1}, {0x34, 1}, {0x35, 1}, {0x3D, 1}};
    p.autosar_event_ids[{0x27, Strategy::IR}] = 103; // SEV_UDS_SECURITY_ACCESS_FAILED
    return p;
}

namespace {

std::string_view fe_mode_name(FeMode m) {
    switch (m) {
    case FeMode::off: return "off";
    case FeMode::always: return "always";
    case FeMode::sensitive_only: return "sensitive";
    }
    return "off";
}

std::vector<Sid> sid_list(const Record &r, std::string_view key) {
    std::vector<Sid> out;
    for (const auto &item : r.list(key)) {
        bool ok = false;
        auto v = parse_number(item, ok);
        if (!ok || v > 0xFF) r.fail("bad SID '" + item + "'");
        out.push_back(static_cast<Sid>(v));
    }
    return out;
}

std::string sid_csv(const std::set<Sid> &sids) {
    std::vector<std::string> items;
    for (auto s : sids) items.push_back(hex_byte(s));
    return join(items, ",");
}

} // namespace

LoggingPolicy read_policy(std::istream &in, const std::string &origin) {
    auto file = parse_records(in, origin);
    LoggingPolicy p;
    for (const auto &r : file.records) {
        if (r.section == "logging" && r.kind == "sid") {
            auto sid = r.require_number("id");
            if (sid > 0xFF || !service_info(static_cast<Sid>(sid))) r.fail("not a registered service SID");
            SidPolicy sp;
            auto flag = [&](std::string_view key) {
                auto v = r.get(key).value_or("false");
                if (v != "true" && v != "false") r.fail(std::string(key) + " must be true or false");
                return v == "true";
            };
            sp.ir = flag("ir");
            sp.mfi = flag("mfi");
            auto fe = r.get("fe").value_or("off");
            if (fe == "off") sp.fe = FeMode::off;
            else if (fe == "always") sp.fe = FeMode::always;
            else if (fe == "sensitive") sp.fe = FeMode::sensitive_only;
            else r.fail("fe must be off, always or sensitive");
            p.per_sid[static_cast<Sid>(sid)] = sp;
        } else if (r.section == "circumstances" && r.kind == "speed") {
            p.speed_threshold_kph = static_cast<std::uint32_t>(r.require_number("threshold_kph"));
            auto sids = sid_list(r, "sids");
            p.state_changing_sids = {sids.begin(), sids.end()};
        } else if (r.section == "circumstances" && r.kind == "protected") {
            p.protected_sids[static_cast<Sid>(r.require_number("sid"))] = static_cast<std::uint8_t>(r.require_number("level"));
        } else if (r.section == "circumstances" && r.kind == "protected_did") {
            p.protected_dids[static_cast<std::uint16_t>(r.require_number("did"))] =
                static_cast<std::uint8_t>(r.require_number("level"));
        } else if (r.section == "circumstances" && r.kind == "dev_only") {
            auto sids = sid_list(r, "sids");
            p.dev_only_sids.insert(sids.begin(), sids.end());
        } else if (r.section == "autosar" && r.kind == "event") {
            auto strategy = parse_strategy(r.require("strategy"));
            if (!strategy) r.fail("unknown strategy");
            p.autosar_event_ids[{static_cast<Sid>(r.require_number("sid")), *strategy}] =
                static_cast<std::uint32_t>(r.require_number("id"));
        } else if (r.section == "sensitive" && r.kind == "did") {
            p.sensitive.add_did(static_cast<std::uint16_t>(r.require_number("id")), r.get("label").value_or(""));
        } else if (r.section == "sensitive" && r.kind == "memory") {
            p.sensitive.add_memory({r.require_number("addr"), r.require_number("size"), r.get("label").value_or("")});
        } else if (r.section == "sensitive" && r.kind == "rid") {
            p.sensitive.add_rid(static_cast<std::uint16_t>(r.require_number("id")), r.get("label").value_or(""));
        } else if (r.section == "sensitive" && r.kind == "path") {
            p.sensitive.add_path_prefix(r.require("prefix"), r.get("label").value_or(""));
        } else {
            r.fail("unknown record");
        }
    }
    return p;
}

LoggingPolicy load_policy(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return read_policy(in, path);
}

void write_policy(std::ostream &out, const LoggingPolicy &p) {
    RecordWriter w(out);
    w.section("logging");
    for (const auto &[sid, sp] : p.per_sid) {
        w.record("sid", {{"id", hex_byte(sid)},
                         {"ir", sp.ir ? "true" : "false"},
                         {"fe", std::string(fe_mode_name(sp.fe))},
                         {"mfi", sp.mfi ? "true" : "false"}});
    }
    w.section("circumstances");
    w.record("speed", {{"threshold_kph", std::to_string(p.speed_threshold_kph)}, {"sids", sid_csv(p.state_changing_sids)}});
    for (const auto &[sid, level] : p.protected_sids) {
        w.record("protected", {{"sid", hex_byte(sid)}, {"level", std::to_string(level)}});
    }
    for (const auto &[did, level] : p.protected_dids) {
        w.record("protected_did", {{"did", hex_u16(did)}, {"level", std::to_string(level)}});
    }
    if (!p.dev_only_sids.empty()) w.record("dev_only", {{"sids", sid_csv(p.dev_only_sids)}});
    w.section("autosar");
    for (const auto &[key, id] : p.autosar_event_ids) {
        w.record("event", {{"sid", hex_byte(key.first)}, {"strategy", std::string(to_string(key.second))},
                           {"id", std::to_string(id)}});
    }
    if (!p.sensitive.empty()) {
        w.section("sensitive");
        for (const auto &[did, label] : p.sensitive.dids()) w.record("did", {{"id", hex_u16(did)}, {"label", label}});
        for (const auto &m : p.sensitive.memory()) {
            w.record("memory", {{"addr", hex_u64(m.addr)}, {"size", std::to_string(m.size)}, {"label", m.label}});
        }
        for (const auto &[rid, label] : p.sensitive.rids()) w.record("rid", {{"id", hex_u16(rid)}, {"label", label}});
        for (const auto &[prefix, label] : p.sensitive.paths()) w.record("path", {{"prefix", prefix}, {"label", label}});
    }
}

// ---------------------------------------------------------------------------
// ECU state

namespace {

constexpr std::array<std::uint8_t, 3> kAuthProofSubfunctions{0x03, 0x06, 0x07};

bool is_auth_proof(std::uint8_t sf) {
    return std::find(kAuthProofSubfunctions.begin(), kAuthProofSubfunctions.end(), sf) != kAuthProofSubfunctions.end();
}

} // namespace

void apply_exchange(EcuState &state, const UdsExchange &ex) {
    if (!ex.response || !ex.response->positive()) return;
    const auto &req = ex.request;
    const std::uint8_t sf = req.subfunction.value_or(0) & 0x7F;
    switch (req.sid) {
    case 0x10:
        state.active_session = sf;
        state.security_access_unlocked = false;
        state.security_level = 0;
        break;
    case 0x11:
        state.active_session = 0x01;
        state.security_access_unlocked = false;
        state.security_level = 0;
        state.transferred.clear();
        break;
    case 0x27:
        if (sf != 0 && sf % 2 == 0) {
            state.security_access_unlocked = true;
            state.security_level = static_cast<std::uint8_t>(sf / 2);
        }
        break;
    case 0x29:
        if (sf == 0x00) {
            state.security_access_unlocked = false;
            state.security_level = 0;
        } else if (is_auth_proof(sf)) {
            state.security_access_unlocked = true;
            state.security_level = std::max<std::uint8_t>(state.security_level, 1);
        }
        break;
    case 0x34:
    case 0x35:
        state.transferred.clear();
        break;
    case 0x36:
        if (req.payload.size() > 1) state.transferred.insert(state.transferred.end(), req.payload.begin() + 1, req.payload.end());
        break;
    case 0x37:
        state.transferred.clear();
        break;
    default:
        break;
    }
}

// ---------------------------------------------------------------------------
// Context data

const FieldValue *ContextData::find(std::string_view name) const {
    for (const auto &f : fields) {
        if (f.name == name) return &f.value;
    }
    return nullptr;
}

std::optional<std::uint64_t> ContextData::number(std::string_view name) const {
    const auto *v = find(name);
    if (!v) return std::nullopt;
    if (const auto *n = std::get_if<std::uint64_t>(v)) return *n;
    return std::nullopt;
}

std::vector<std::string> ContextData::names() const {
    std::vector<std::string> out;
    out.reserve(fields.size());
    for (const auto &f : fields) out.push_back(f.name);
    return out;
}

std::vector<std::string_view> context_field_names(Sid sid, Strategy strategy) {
    if (strategy == Strategy::MFI) return {"sid", "target_ecu", "observed_origin", "expected_origin"};
    const bool ir = strategy == Strategy::IR;
    std::vector<std::string_view> body;
    switch (sid) {
    case 0x10: case 0x11: case 0x19: case 0x27: case 0x28: case 0x29: case 0x85: case 0x87:
        body = {"sf"};
        break;
    case 0x14: body = {"group_of_dtc", "memory_selection"}; break;
    case 0x22: body = {"did_list"}; break;
    case 0x23: case 0x34: case 0x35: body = {"mem_addr", "mem_size"}; break;
    case 0x24: body = {"did"}; break;
    case 0x2A: body = {"transmission_mode", "periodic_did_list"}; break;
    case 0x2C: body = {"sf", "dddid", "source_did_list", "mem_addr", "mem_size"}; break;
    case 0x2E: body = {"did", "data_hash"}; break;
    case 0x2F: body = {"did", "io_control_parameter"}; break;
    case 0x31: body = {"sf", "rid"}; break;
    case 0x36:
        if (!ir) return {};
        body = {"block_sequence_counter"};
        break;
    case 0x37:
        if (!ir) return {"sid", "transfer_hash"};
        break;
    case 0x38: body = {"mode_of_operation", "file_path"}; break;
    case 0x3D:
        if (!ir) return {"sid", "mem_addr", "mem_size", "data_hash"};
        body = {"mem_addr", "mem_size"};
        break;
    case 0x84: body = {"apar", "crypto_calc", "wrapped_sid"}; break;
    case 0x86: body = {"sf", "response_sid"}; break;
    default:
        return {};
    }
    std::vector<std::string_view> out{"sid"};
    out.insert(out.end(), body.begin(), body.end());
    if (ir) out.push_back("nrc");
    return out;
}

namespace {

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::optional<std::uint64_t> be(std::size_t n) {
        if (n == 0 || n > 8 || pos_ + n > data_.size()) return std::nullopt;
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v = (v << 8) | data_[pos_ + i];
        pos_ += n;
        return v;
    }
    std::optional<std::uint64_t> u8() { return be(1); }
    std::optional<std::uint64_t> u16() { return be(2); }
    std::span<const std::uint8_t> rest() const { return data_.subspan(pos_); }
    bool done() const { return pos_ >= data_.size(); }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

FieldValue num(std::optional<std::uint64_t> v) {
    if (v) return *v;
    return std::monostate{};
}

struct AddrLen {
    FieldValue addr;
    FieldValue size;
};

// addressAndLengthFormatIdentifier followed by address and size.
AddrLen read_addr_len(Reader &r) {
    auto alfid = r.u8();
    if (!alfid) return {};
    const std::size_t size_len = (*alfid >> 4) & 0xF;
    const std::size_t addr_len = *alfid & 0xF;
    auto addr = r.be(addr_len);
    auto size = r.be(size_len);
    return {num(addr), num(size)};
}

std::vector<std::uint16_t> read_u16_list(Reader &r) {
    std::vector<std::uint16_t> out;
    while (auto v = r.u16()) out.push_back(static_cast<std::uint16_t>(*v));
    return out;
}

std::size_t roe_event_record_length(std::uint8_t event_type) {
    switch (event_type & 0x3F) {
    case 0x01: return 1; // onDTCStatusChange
    case 0x03: return 2; // onChangeOfDataIdentifier
    case 0x07: return 10; // onComparisonOfValues
    case 0x08: return 1; // reportMostRecentDtcOnStatusChange
    default: return 0;
    }
}

} // namespace

ContextData extract_context(Sid sid, const UdsRequest &req, const std::optional<UdsResponse> &response,
                            Strategy strategy, std::span<const std::uint8_t> transferred) {
    if (strategy == Strategy::MFI) throw PreconditionError("MFI context is built by the flow monitor");
    auto names = context_field_names(sid, strategy);
    if (names.empty()) {
        throw NoContextDefined("no context defined for SID " + hex_byte(sid) + " with strategy " +
                               std::string(to_string(strategy)));
    }

    std::map<std::string_view, FieldValue> values;
    values["sid"] = std::uint64_t{sid};
    if (req.subfunction) values["sf"] = std::uint64_t{*req.subfunction};
    if (response && response->negative() && response->nrc) values["nrc"] = std::uint64_t{*response->nrc};

    Reader r(req.payload);
    switch (sid) {
    case 0x14:
        values["group_of_dtc"] = num(r.be(3));
        values["memory_selection"] = num(r.u8());
        break;
    case 0x22:
        values["did_list"] = read_u16_list(r);
        break;
    case 0x23:
    case 0x3D: {
        auto al = read_addr_len(r);
        values["mem_addr"] = al.addr;
        values["mem_size"] = al.size;
        if (sid == 0x3D) values["data_hash"] = hash_payload(r.rest());
        break;
    }
    case 0x34:
    case 0x35: {
        r.u8(); // dataFormatIdentifier
        auto al = read_addr_len(r);
        values["mem_addr"] = al.addr;
        values["mem_size"] = al.size;
        break;
    }
    case 0x24:
        values["did"] = num(r.u16());
        break;
    case 0x2A: {
        values["transmission_mode"] = num(r.u8());
        std::vector<std::uint16_t> periodic;
        while (auto b = r.u8()) periodic.push_back(static_cast<std::uint16_t>(0xF200 | *b));
        values["periodic_did_list"] = periodic;
        break;
    }
    case 0x2C: {
        values["dddid"] = num(r.u16());
        const std::uint8_t mode = req.subfunction.value_or(0) & 0x7F;
        if (mode == 0x01) {
            std::vector<std::uint16_t> sources;
            while (auto did = r.u16()) {
                sources.push_back(static_cast<std::uint16_t>(*did));
                r.u8(); // positionInSourceDataRecord
                r.u8(); // memorySize
            }
            values["source_did_list"] = sources;
        } else if (mode == 0x02) {
            auto al = read_addr_len(r);
            values["mem_addr"] = al.addr;
            values["mem_size"] = al.size;
        }
        break;
    }
    case 0x2E:
        values["did"] = num(r.u16());
        values["data_hash"] = hash_payload(r.rest());
        break;
    case 0x2F:
        values["did"] = num(r.u16());
        values["io_control_parameter"] = num(r.u8());
        break;
    case 0x31:
        values["rid"] = num(r.u16());
        break;
    case 0x36:
        values["block_sequence_counter"] = num(r.u8());
        break;
    case 0x37:
        values["transfer_hash"] = hash_payload(transferred);
        break;
    case 0x38: {
        values["mode_of_operation"] = num(r.u8());
        auto len = r.u16();
        if (len) {
            auto rest = r.rest();
            auto n = std::min<std::size_t>(*len, rest.size());
            values["file_path"] = std::string(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n));
        }
        break;
    }
    case 0x84: {
        values["apar"] = num(r.u16());
        values["crypto_calc"] = num(r.u8());
        r.u16(); // signatureLength
        r.u16(); // antiReplayCounter
        values["wrapped_sid"] = num(r.u8());
        break;
    }
    case 0x86: {
        r.u8(); // eventWindowTime
        r.be(roe_event_record_length(req.subfunction.value_or(0)));
        values["response_sid"] = num(r.u8());
        break;
    }
    default:
        break;
    }

    ContextData ctx;
    ctx.fields.reserve(names.size());
    for (auto name : names) {
        auto it = values.find(name);
        ctx.fields.push_back({std::string(name), it == values.end() ? FieldValue{} : it->second});
    }
    return ctx;
}

bool references_sensitive(const ContextData &ctx, const SensitiveRegistry &reg) {
    auto did_hit = [&](const char *name) {
        const auto *v = ctx.find(name);
        if (!v) return false;
        if (const auto *list = std::get_if<std::vector<std::uint16_t>>(v)) {
            return std::any_of(list->begin(), list->end(), [&](auto d) { return reg.is_sensitive_did(d); });
        }
        if (const auto *n = std::get_if<std::uint64_t>(v)) return *n <= 0xFFFF && reg.is_sensitive_did(static_cast<std::uint16_t>(*n));
        return false;
    };
    if (did_hit("did_list") || did_hit("did") || did_hit("source_did_list") || did_hit("periodic_did_list") ||
        did_hit("dddid")) {
        return true;
    }
    auto addr = ctx.number("mem_addr");
    auto size = ctx.number("mem_size");
    if (addr && size && reg.overlaps_sensitive_memory(*addr, *size)) return true;
    if (auto rid = ctx.number("rid"); rid && *rid <= 0xFFFF && reg.is_sensitive_rid(static_cast<std::uint16_t>(*rid))) {
        return true;
    }
    if (const auto *p = ctx.find("file_path")) {
        if (const auto *s = std::get_if<std::string>(p); s && reg.is_sensitive_path(*s)) return true;
    }
    return false;
}

AutosarSupport autosar_support(Sid sid) {
    switch (sid) {
    case 0x11: case 0x14: case 0x27: case 0x28: case 0x29: case 0x2E: case 0x2F:
    case 0x31: case 0x34: case 0x35: case 0x38: case 0x3D: case 0x85:
        return AutosarSupport::ir_fe;
    default:
        return AutosarSupport::none;
    }
}

std::optional<CircumstanceViolation> classify_circumstance(const UdsExchange &ex, const EcuState &state,
                                                           const LoggingPolicy &policy) {
    const Sid sid = ex.request.sid;
    if (policy.state_changing_sids.contains(sid) && state.vehicle_speed_kph > policy.speed_threshold_kph) {
        return CircumstanceViolation{Circumstance::speed, "vehicle speed " + std::to_string(state.vehicle_speed_kph) +
                                                              " km/h above " +
                                                              std::to_string(policy.speed_threshold_kph)};
    }
    auto missing_level = [&](std::uint8_t required) {
        return !state.security_access_unlocked || state.security_level < required;
    };
    if (auto it = policy.protected_sids.find(sid); it != policy.protected_sids.end() && missing_level(it->second)) {
        return CircumstanceViolation{Circumstance::authorization,
                                     "security level " + std::to_string(it->second) + " required"};
    }
    if ((sid == 0x2E || sid == 0x2F) && ex.request.payload.size() >= 2) {
        auto did = static_cast<std::uint16_t>((ex.request.payload[0] << 8) | ex.request.payload[1]);
        if (auto it = policy.protected_dids.find(did); it != policy.protected_dids.end() && missing_level(it->second)) {
            return CircumstanceViolation{Circumstance::authorization, "protected DID " + hex_u16(did)};
        }
    }
    if (policy.dev_only_sids.contains(sid) && state.mode == EcuMode::production) {
        return CircumstanceViolation{Circumstance::mode, "development-only service in production mode"};
    }
    return std::nullopt;
}

std::vector<SecurityEvent> evaluate_exchange(const LoggingPolicy &policy, const UdsExchange &ex, const EcuState &state) {
    std::vector<SecurityEvent> out;
    const Sid sid = ex.request.sid;
    if (ex.request.unknown_service()) return out;
    const auto &sp = policy.for_sid(sid);

    auto make = [&](Strategy strategy, ContextData ctx) {
        SecurityEvent ev;
        ev.strategy = strategy;
        ev.sid = sid;
        ev.ecu_id = ex.target_ecu;
        ev.source_address = ex.source;
        ev.timestamp = ex.timestamp;
        ev.context = std::move(ctx);
        ev.autosar_supported = autosar_support(sid) == AutosarSupport::ir_fe;
        if (auto it = policy.autosar_event_ids.find({sid, strategy}); it != policy.autosar_event_ids.end()) {
            ev.autosar_event_id = it->second;
        }
        return ev;
    };

    if (sp.ir && !context_field_names(sid, Strategy::IR).empty()) {
        const bool negative = ex.response && ex.response->negative();
        auto violation = classify_circumstance(ex, state, policy);
        if (negative || violation) {
            auto ev = make(Strategy::IR, extract_context(sid, ex.request, ex.response, Strategy::IR));
            if (violation) {
                ev.violation = violation->kind;
                ev.detail = violation->detail;
            }
            out.push_back(std::move(ev));
        }
    }
    if (sp.fe != FeMode::off && ex.response && ex.response->positive() &&
        !context_field_names(sid, Strategy::FE).empty()) {
        auto ctx = extract_context(sid, ex.request, ex.response, Strategy::FE, state.transferred);
        if (sp.fe == FeMode::always || references_sensitive(ctx, policy.sensitive)) {
            out.push_back(make(Strategy::FE, std::move(ctx)));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Event log

std::string format_field_value(std::string_view name, const FieldValue &v) {
    return std::visit(
        [&](const auto &x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "null";
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
                if (name == "did" || name == "rid" || name == "dddid" || name == "apar" || name == "observed_origin") {
                    return hex_u16(static_cast<std::uint16_t>(x));
                }
                if (name == "mem_addr" || name == "mem_size" || name == "group_of_dtc") return hex_u64(x);
                return hex_byte(static_cast<std::uint8_t>(x));
            } else if constexpr (std::is_same_v<T, std::vector<std::uint16_t>>) {
                std::vector<std::string> items;
                for (auto d : x) items.push_back(hex_u16(d));
                return "[" + join(items, ",") + "]";
            } else if constexpr (std::is_same_v<T, Digest>) {
                return digest_hex(x);
            } else {
                return x;
            }
        },
        v);
}

namespace {

nlohmann::ordered_json field_json(std::string_view name, const FieldValue &v) {
    if (std::holds_alternative<std::monostate>(v)) return nullptr;
    if (const auto *list = std::get_if<std::vector<std::uint16_t>>(&v)) {
        auto arr = nlohmann::ordered_json::array();
        for (auto d : *list) arr.push_back(hex_u16(d));
        return arr;
    }
    return format_field_value(name, v);
}

} // namespace

std::string format_event_line(const SecurityEvent &ev) {
    nlohmann::ordered_json j;
    j["id"] = ev.id;
    j["strategy"] = to_string(ev.strategy);
    j["sid"] = hex_byte(ev.sid);
    j["ecu"] = ev.ecu_id;
    j["vehicle"] = ev.vehicle_id;
    j["source"] = hex_u16(ev.source_address);
    j["ts"] = ev.timestamp;
    auto ctx = nlohmann::ordered_json::object();
    for (const auto &f : ev.context.fields) ctx[f.name] = field_json(f.name, f.value);
    j["context"] = ctx;
    if (ev.violation) j["violation"] = to_string(*ev.violation);
    if (ev.mfi_kind) j["mfi_kind"] = to_string(*ev.mfi_kind);
    if (!ev.detail.empty()) j["detail"] = ev.detail;
    j["autosar_supported"] = ev.autosar_supported;
    j["autosar_event_id"] = ev.autosar_event_id ? nlohmann::ordered_json(*ev.autosar_event_id) : nullptr;
    return j.dump();
}

} // namespace udsmon
