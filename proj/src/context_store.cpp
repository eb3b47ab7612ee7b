#include "udsmon/context_store.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "udsmon/error.hpp"
#include "udsmon/recfile.hpp"

namespace udsmon {

std::string_view to_string(EcuMode mode) {
    return mode == EcuMode::development ? "development" : "production";
}

std::optional<EcuMode> parse_ecu_mode(std::string_view text) {
    if (text == "development") return EcuMode::development;
    if (text == "production") return EcuMode::production;
    return std::nullopt;
}

std::string_view to_string(FirmwareStatus s) {
    switch (s) {
    case FirmwareStatus::authorized_current: return "authorized-current";
    case FirmwareStatus::authorized_older: return "authorized-older";
    case FirmwareStatus::unknown: return "unknown";
    }
    return "unknown";
}

void VehicleRecord::add_maintenance(MaintenanceWindow w) {
    if (w.end <= w.start) {
        throw PreconditionError("maintenance window end " + std::to_string(w.end) +
                                " not after start " + std::to_string(w.start));
    }
    auto pos = std::lower_bound(maintenance.begin(), maintenance.end(), w,
                                [](const auto &a, const auto &b) { return a.start < b.start; });
    if (pos != maintenance.end() && pos->start < w.end) {
        throw PreconditionError("maintenance window overlaps a later window");
    }
    if (pos != maintenance.begin() && std::prev(pos)->end > w.start) {
        throw PreconditionError("maintenance window overlaps an earlier window");
    }
    maintenance.insert(pos, std::move(w));
}

void SensitiveRegistry::add_did(std::uint16_t did, std::string label) { dids_[did] = std::move(label); }

void SensitiveRegistry::add_rid(std::uint16_t rid, std::string label) { rids_[rid] = std::move(label); }

void SensitiveRegistry::add_path_prefix(std::string prefix, std::string label) {
    if (prefix.empty()) throw PreconditionError("empty sensitive path prefix");
    paths_[std::move(prefix)] = std::move(label);
}

void SensitiveRegistry::add_memory(MemoryRange range) {
    if (range.size == 0) return;
    std::vector<MemoryRange> kept;
    for (auto &r : memory_) {
        if (r.addr < range.end() && range.addr < r.end()) {
            std::uint64_t lo = std::min(r.addr, range.addr);
            std::uint64_t hi = std::max(r.end(), range.end());
            range.label = r.label == range.label ? r.label : r.label + "+" + range.label;
            range.addr = lo;
            range.size = hi - lo;
        } else {
            kept.push_back(std::move(r));
        }
    }
    kept.push_back(std::move(range));
    std::sort(kept.begin(), kept.end(), [](const auto &a, const auto &b) { return a.addr < b.addr; });
    memory_ = std::move(kept);
}

bool SensitiveRegistry::overlaps_sensitive_memory(std::uint64_t addr, std::uint64_t size) const {
    if (size == 0) return false;
    const std::uint64_t end = addr + size;
    return std::any_of(memory_.begin(), memory_.end(),
                       [&](const MemoryRange &r) { return addr < r.end() && r.addr < end; });
}

bool SensitiveRegistry::is_sensitive_path(std::string_view path) const {
    return std::any_of(paths_.begin(), paths_.end(),
                       [&](const auto &p) { return path.starts_with(p.first); });
}

void ContextStore::add_vehicle(VehicleRecord v) {
    if (v.vehicle_id.empty()) throw PreconditionError("vehicle id must not be empty");
    auto id = v.vehicle_id;
    vehicles_[id] = std::move(v);
}

void ContextStore::add_release(const std::string &ecu_type, FirmwareRelease r) {
    auto &list = firmware_[ecu_type];
    for (const auto &existing : list) {
        if (existing.version == r.version) {
            throw PreconditionError("duplicate firmware version " + std::to_string(r.version) + " for " + ecu_type);
        }
        if (existing.digest == r.digest) {
            throw PreconditionError("digest registered twice for " + ecu_type);
        }
    }
    auto pos = std::lower_bound(list.begin(), list.end(), r,
                                [](const auto &a, const auto &b) { return a.version < b.version; });
    list.insert(pos, std::move(r));
}

void ContextStore::add_sample(const std::string &vehicle_id, StateSample s) {
    auto &tl = timelines_[vehicle_id];
    if (!tl.empty() && s.timestamp <= tl.back().timestamp) {
        throw PreconditionError("timeline timestamps must be strictly increasing");
    }
    tl.push_back(std::move(s));
}

const VehicleRecord &ContextStore::vehicle(const std::string &vehicle_id) const {
    auto it = vehicles_.find(vehicle_id);
    if (it == vehicles_.end()) throw LookupError("unknown vehicle '" + vehicle_id + "'");
    return it->second;
}

bool ContextStore::in_maintenance(const std::string &vehicle_id, TimestampMs t) const {
    const auto &windows = vehicle(vehicle_id).maintenance;
    // Windows are sorted and disjoint: only the last window starting at or before t can hold it.
    auto it = std::upper_bound(windows.begin(), windows.end(), t,
                               [](TimestampMs v, const MaintenanceWindow &w) { return v < w.start; });
    if (it == windows.begin()) return false;
    return std::prev(it)->contains(t);
}

FirmwareStatus ContextStore::firmware_known(const std::string &ecu_type, const Digest &digest) const {
    auto it = firmware_.find(ecu_type);
    if (it == firmware_.end()) throw LookupError("unknown ECU type '" + ecu_type + "'");
    const auto &list = it->second;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].digest == digest) {
            return i + 1 == list.size() ? FirmwareStatus::authorized_current : FirmwareStatus::authorized_older;
        }
    }
    return FirmwareStatus::unknown;
}

std::optional<StateSample> ContextStore::state_at(const std::string &vehicle_id, TimestampMs t) const {
    auto it = timelines_.find(vehicle_id);
    if (it == timelines_.end()) return std::nullopt;
    const auto &tl = it->second;
    auto pos = std::upper_bound(tl.begin(), tl.end(), t,
                                [](TimestampMs v, const StateSample &s) { return v < s.timestamp; });
    if (pos == tl.begin()) return std::nullopt;
    return *std::prev(pos);
}

std::optional<std::string> ContextStore::vehicle_of_ecu(const std::string &ecu_id) const {
    for (const auto &[id, v] : vehicles_) {
        if (v.ecus.contains(ecu_id)) return id;
    }
    return std::nullopt;
}

namespace {

std::uint16_t require_u16(const Record &r, std::string_view key) {
    auto v = r.require_number(key);
    if (v > 0xFFFF) r.fail(std::string(key) + " exceeds 16 bits");
    return static_cast<std::uint16_t>(v);
}

Digest require_digest(const Record &r, std::string_view key) {
    auto d = parse_digest(r.require(key));
    if (!d) r.fail(std::string(key) + " must be 64 hex characters");
    return *d;
}

bool parse_flag(const Record &r, std::string_view key) {
    auto v = r.get(key).value_or("false");
    if (v == "true") return true;
    if (v == "false") return false;
    r.fail(std::string(key) + " must be true or false");
}

VehicleRecord &owning_vehicle(std::map<std::string, VehicleRecord> &vehicles, const Record &r) {
    auto id = r.require("vehicle");
    auto it = vehicles.find(id);
    if (it == vehicles.end()) r.fail("unknown vehicle '" + id + "'");
    return it->second;
}

} // namespace

ContextStore read_store(std::istream &in, const std::string &origin) {
    auto file = parse_records(in, origin);
    std::map<std::string, VehicleRecord> vehicles;
    ContextStore store;

    for (const auto *r : file.in_section("vehicles")) {
        if (r->kind != "vehicle") continue;
        VehicleRecord v;
        v.vehicle_id = r->require("id");
        v.model = r->require("model");
        if (vehicles.contains(v.vehicle_id)) r->fail("duplicate vehicle");
        vehicles.emplace(v.vehicle_id, std::move(v));
    }
    for (const auto *r : file.in_section("vehicles")) {
        try {
            if (r->kind == "vehicle") {
                continue;
            } else if (r->kind == "ecu") {
                auto &v = owning_vehicle(vehicles, *r);
                auto mode = parse_ecu_mode(r->get("mode").value_or("production"));
                if (!mode) r->fail("mode must be development or production");
                v.ecus[r->require("id")] = EcuInventoryEntry{r->require("type"), *mode};
            } else if (r->kind == "maintenance") {
                auto &v = owning_vehicle(vehicles, *r);
                v.add_maintenance({r->require_number("start"), r->require_number("end"), r->get("workshop").value_or("")});
            } else if (r->kind == "forbid") {
                auto &v = owning_vehicle(vehicles, *r);
                ForbiddenService f{r->require("ecu"), static_cast<Sid>(r->require_number("sid")), std::nullopt};
                if (auto sf = r->number("sf")) f.subfunction = static_cast<std::uint8_t>(*sf);
                v.forbidden.push_back(std::move(f));
            } else if (r->kind == "expect") {
                auto &v = owning_vehicle(vehicles, *r);
                v.expected_dids.push_back({r->require("ecu"), require_u16(*r, "did"), require_digest(*r, "digest")});
            } else {
                r->fail("unknown record kind");
            }
        } catch (const ParseError &) {
            throw;
        } catch (const Error &e) {
            r->fail(e.what());
        }
    }
    for (auto &[id, v] : vehicles) store.add_vehicle(std::move(v));

    for (const auto *r : file.in_section("firmware")) {
        if (r->kind != "release") r->fail("unknown record kind");
        try {
            store.add_release(r->require("ecu_type"),
                              {static_cast<std::uint32_t>(r->require_number("version")), require_digest(*r, "digest")});
        } catch (const ParseError &) {
            throw;
        } catch (const Error &e) {
            r->fail(e.what());
        }
    }

    for (const auto *r : file.in_section("sensitive")) {
        auto label = r->get("label").value_or("");
        if (r->kind == "did") {
            store.sensitive().add_did(require_u16(*r, "id"), label);
        } else if (r->kind == "memory") {
            store.sensitive().add_memory({r->require_number("addr"), r->require_number("size"), label});
        } else if (r->kind == "rid") {
            store.sensitive().add_rid(require_u16(*r, "id"), label);
        } else if (r->kind == "path") {
            auto prefix = r->require("prefix");
            if (prefix.empty()) r->fail("empty path prefix");
            store.sensitive().add_path_prefix(prefix, label);
        } else {
            r->fail("unknown record kind");
        }
    }

    for (const auto *r : file.in_section("timeline")) {
        if (r->kind != "sample") r->fail("unknown record kind");
        StateSample s;
        s.timestamp = r->require_number("ts");
        s.speed_kph = static_cast<std::uint32_t>(r->require_number("speed"));
        auto mode = parse_ecu_mode(r->get("mode").value_or("production"));
        if (!mode) r->fail("mode must be development or production");
        s.mode = *mode;
        s.workshop_session_active = parse_flag(*r, "workshop");
        s.campaign = r->get("campaign");
        try {
            store.add_sample(r->require("vehicle"), std::move(s));
        } catch (const Error &e) {
            r->fail(e.what());
        }
    }

    for (const auto &rec : file.records) {
        if (rec.section != "vehicles" && rec.section != "firmware" && rec.section != "sensitive" &&
            rec.section != "timeline") {
            rec.fail("unknown section");
        }
    }
    return store;
}

ContextStore load_store(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return read_store(in, path);
}

void write_store(std::ostream &out, const ContextStore &store) {
    RecordWriter w(out);
    w.section("vehicles");
    for (const auto &[id, v] : store.vehicles()) {
        w.record("vehicle", {{"id", id}, {"model", v.model}});
        for (const auto &[ecu, e] : v.ecus) {
            w.record("ecu", {{"vehicle", id}, {"id", ecu}, {"type", e.ecu_type}, {"mode", std::string(to_string(e.mode))}});
        }
        for (const auto &m : v.maintenance) {
            w.record("maintenance", {{"vehicle", id},
                                     {"start", std::to_string(m.start)},
                                     {"end", std::to_string(m.end)},
                                     {"workshop", m.workshop}});
        }
        for (const auto &f : v.forbidden) {
            std::vector<std::pair<std::string, std::string>> fields{{"vehicle", id}, {"ecu", f.ecu}, {"sid", hex_byte(f.sid)}};
            if (f.subfunction) fields.emplace_back("sf", hex_byte(*f.subfunction));
            w.record("forbid", fields);
        }
        for (const auto &e : v.expected_dids) {
            w.record("expect", {{"vehicle", id}, {"ecu", e.ecu}, {"did", hex_u16(e.did)}, {"digest", digest_hex(e.digest)}});
        }
    }
    w.section("firmware");
    for (const auto &[type, list] : store.firmware()) {
        for (const auto &r : list) {
            w.record("release", {{"ecu_type", type}, {"version", std::to_string(r.version)}, {"digest", digest_hex(r.digest)}});
        }
    }
    w.section("sensitive");
    const auto &s = store.sensitive();
    for (const auto &[did, label] : s.dids()) w.record("did", {{"id", hex_u16(did)}, {"label", label}});
    for (const auto &m : s.memory()) {
        w.record("memory", {{"addr", hex_u64(m.addr)},
                            {"size", std::to_string(m.size)},
                            {"label", m.label}});
    }
    for (const auto &[rid, label] : s.rids()) w.record("rid", {{"id", hex_u16(rid)}, {"label", label}});
    for (const auto &[prefix, label] : s.paths()) w.record("path", {{"prefix", prefix}, {"label", label}});
    w.section("timeline");
    for (const auto &[vid, tl] : store.timelines()) {
        for (const auto &smp : tl) {
            std::vector<std::pair<std::string, std::string>> fields{
                {"vehicle", vid},
                {"ts", std::to_string(smp.timestamp)},
                {"speed", std::to_string(smp.speed_kph)},
                {"mode", std::string(to_string(smp.mode))},
                {"workshop", smp.workshop_session_active ? "true" : "false"}};
            if (smp.campaign) fields.emplace_back("campaign", *smp.campaign);
            w.record("sample", fields);
        }
    }
}

void save_store(const std::string &path, const ContextStore &store) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    write_store(out, store);
}

} // namespace udsmon
