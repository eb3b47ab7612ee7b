#include "udsmon/flow_monitor.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "udsmon/error.hpp"
#include "udsmon/recfile.hpp"

namespace udsmon {

void Topology::add_link(const std::string &link) {
    if (link.empty()) throw TopologyError("empty link name");
    links_.insert(link);
}

void Topology::add_ecu(EcuNode node) {
    if (!links_.contains(node.link)) throw TopologyError("ECU " + node.id + " on unknown link " + node.link);
    if (ecus_.contains(node.id)) throw TopologyError("duplicate ECU " + node.id);
    ecus_[node.id] = std::move(node);
}

void Topology::add_route(const std::string &from, const std::string &to) {
    if (!links_.contains(from) || !links_.contains(to)) throw TopologyError("route between unknown links");
    routes_.insert({from, to});
}

void Topology::add_source(SourceAddress source, const std::string &home_link) {
    if (!links_.contains(home_link)) throw TopologyError("source on unknown link " + home_link);
    sources_[source] = home_link;
}

void Topology::permit(const std::string &ecu, std::optional<Sid> sid, std::set<SourceAddress> sources) {
    if (!ecus_.contains(ecu)) throw TopologyError("permission for unknown ECU " + ecu);
    permitted_[{ecu, sid}] = std::move(sources);
}

const EcuNode &Topology::ecu(const std::string &id) const {
    auto it = ecus_.find(id);
    if (it == ecus_.end()) throw TopologyError("unknown ECU " + id);
    return it->second;
}

std::set<SourceAddress> Topology::permitted_sources(const std::string &ecu_id, Sid sid) const {
    ecu(ecu_id);
    if (auto it = permitted_.find({ecu_id, sid}); it != permitted_.end()) return it->second;
    if (auto it = permitted_.find({ecu_id, std::nullopt}); it != permitted_.end()) return it->second;
    return {};
}

std::optional<std::string> Topology::home_link(SourceAddress source) const {
    if (auto it = sources_.find(source); it != sources_.end()) return it->second;
    for (const auto &[id, node] : ecus_) {
        if (node.address == source) return node.link;
    }
    return std::nullopt;
}

bool Topology::routes(const std::string &from, const std::string &to) const { return routes_.contains({from, to}); }

// ---------------------------------------------------------------------------
// File format

namespace {

SourceAddress address_field(const Record &r, std::string_view key) {
    auto v = r.require_number(key);
    if (v > 0xFFFF) r.fail("address out of range");
    return static_cast<SourceAddress>(v);
}

template <typename F>
void topology_step(const Record &r, F &&f) {
    try {
        f();
    } catch (const TopologyError &e) {
        r.fail(e.what());
    }
}

} // namespace

Topology read_topology(std::istream &in, const std::string &origin) {
    auto file = parse_records(in, origin);
    Topology t;
    for (const auto &r : file.records) {
        if (r.section == "vehicle" && r.kind == "vehicle") {
            t.vehicle_id = r.require("id");
        } else if (r.section == "links" && r.kind == "link") {
            topology_step(r, [&] { t.add_link(r.require("id")); });
        } else if (r.section == "ecus" && r.kind == "ecu") {
            topology_step(r, [&] { t.add_ecu({r.require("id"), r.require("link"), address_field(r, "address")}); });
        } else if (r.section == "routes" && r.kind == "route") {
            topology_step(r, [&] { t.add_route(r.require("from"), r.require("to")); });
        } else if (r.section == "sources" && r.kind == "source") {
            topology_step(r, [&] { t.add_source(address_field(r, "address"), r.require("link")); });
        } else if (r.section == "permitted" && r.kind == "permit") {
            std::optional<Sid> sid;
            auto sid_text = r.require("sid");
            if (sid_text != "*") {
                auto v = r.require_number("sid");
                if (v > 0xFF) r.fail("SID out of range");
                sid = static_cast<Sid>(v);
            }
            std::set<SourceAddress> sources;
            for (const auto &item : r.list("sources")) {
                bool ok = false;
                auto v = parse_number(item, ok);
                if (!ok || v > 0xFFFF) r.fail("bad source address '" + item + "'");
                sources.insert(static_cast<SourceAddress>(v));
            }
            topology_step(r, [&] { t.permit(r.require("ecu"), sid, sources); });
        } else {
            r.fail("unknown record");
        }
    }
    return t;
}

Topology load_topology(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return read_topology(in, path);
}

void write_topology(std::ostream &out, const Topology &t) {
    RecordWriter w(out);
    if (!t.vehicle_id.empty()) {
        w.section("vehicle");
        w.record("vehicle", {{"id", t.vehicle_id}});
    }
    w.section("links");
    for (const auto &l : t.links()) w.record("link", {{"id", l}});
    w.section("ecus");
    for (const auto &[id, node] : t.ecus()) {
        w.record("ecu", {{"id", id}, {"link", node.link}, {"address", hex_u16(node.address)}});
    }
    w.section("routes");
    for (const auto &[from, to] : t.route_pairs()) w.record("route", {{"from", from}, {"to", to}});
    w.section("sources");
    for (const auto &[addr, link] : t.sources()) w.record("source", {{"address", hex_u16(addr)}, {"link", link}});
    w.section("permitted");
    for (const auto &[key, sources] : t.permissions()) {
        std::vector<std::string> items;
        for (auto s : sources) items.push_back(hex_u16(s));
        w.record("permit", {{"ecu", key.first},
                            {"sid", key.second ? hex_byte(*key.second) : "*"},
                            {"sources", join(items, ",")}});
    }
}

// ---------------------------------------------------------------------------
// Checks

namespace {

MfiEvent base_event(MfiKind kind, const UdsExchange &ex) {
    MfiEvent ev;
    ev.kind = kind;
    ev.sid = ex.request.sid;
    ev.target_ecu = ex.target_ecu;
    ev.observed_origin = ex.source;
    ev.timestamp = ex.timestamp;
    ev.link = ex.link;
    return ev;
}

bool same_bytes(const UdsExchange &a, const UdsExchange &b) {
    if (a.request != b.request) return false;
    if (a.response.has_value() != b.response.has_value()) return false;
    return !a.response || *a.response == *b.response;
}

} // namespace

std::optional<MfiEvent> check_source(const Topology &topology, const UdsExchange &ex) {
    auto permitted = topology.permitted_sources(ex.target_ecu, ex.request.sid);
    if (permitted.contains(ex.source)) return std::nullopt;
    auto ev = base_event(MfiKind::unexpected_source, ex);
    ev.expected_origins = std::move(permitted);
    ev.detail = "source " + hex_u16(ex.source) + " not permitted for " + hex_byte(ex.request.sid);
    return ev;
}

std::optional<MfiEvent> check_routing(const Topology &, const std::optional<UdsExchange> &upstream,
                                      const UdsExchange &downstream) {
    if (!upstream) {
        auto ev = base_event(MfiKind::routed_without_original, downstream);
        ev.expected_origins = {downstream.source};
        ev.detail = "no original on the source link";
        return ev;
    }
    if (same_bytes(*upstream, downstream)) return std::nullopt;
    auto ev = base_event(MfiKind::modified_in_transit, downstream);
    ev.expected_origins = {upstream->source};
    ev.detail = "request " + to_hex(encode_request(upstream->request)) + " forwarded as " +
                to_hex(encode_request(downstream.request));
    return ev;
}

namespace {

enum class SeqRole { none, challenge, proof };

SeqRole sequence_role(const UdsRequest &req) {
    if (!req.subfunction) return SeqRole::none;
    const std::uint8_t sf = *req.subfunction & 0x7F;
    if (req.sid == 0x27) {
        if (sf == 0) return SeqRole::none;
        return sf % 2 == 1 ? SeqRole::challenge : SeqRole::proof;
    }
    if (req.sid == 0x29) {
        if (sf == 0x01 || sf == 0x02 || sf == 0x05) return SeqRole::challenge;
        if (sf == 0x03 || sf == 0x06 || sf == 0x07) return SeqRole::proof;
    }
    return SeqRole::none;
}

} // namespace

std::vector<MfiEvent> check_sequence(std::span<const UdsExchange> window, const SequenceOptions &options) {
    if (options.run_threshold == 0) throw PreconditionError("sequence run threshold must be positive");
    for (std::size_t i = 1; i < window.size(); ++i) {
        if (window[i].timestamp < window[i - 1].timestamp) throw PreconditionError("sequence window is not sorted");
    }
    std::map<std::pair<SourceAddress, Sid>, std::size_t> runs;
    std::vector<MfiEvent> out;
    for (const auto &ex : window) {
        auto role = sequence_role(ex.request);
        if (role == SeqRole::none) continue;
        auto &run = runs[{ex.source, ex.request.sid}];
        if (role == SeqRole::proof) {
            run = 0;
            continue;
        }
        if (++run >= options.run_threshold) {
            auto ev = base_event(MfiKind::bad_sequence, ex);
            ev.expected_origins = {ex.source};
            ev.detail = std::to_string(run) + " challenge requests without a response step";
            out.push_back(std::move(ev));
            run = 0;
        }
    }
    return out;
}

bool is_forwarded_copy(const Topology &topology, const UdsExchange &ex) {
    auto home = topology.home_link(ex.source);
    return home && *home != ex.link;
}

std::vector<MfiEvent> correlate_routes(const Topology &topology, std::span<const UdsExchange> trace,
                                       TimestampMs pair_window_ms) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (trace[i].timestamp < trace[i - 1].timestamp) throw PreconditionError("trace is not sorted");
    }
    std::vector<bool> consumed(trace.size(), false);
    std::vector<MfiEvent> out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto &down = trace[i];
        if (!is_forwarded_copy(topology, down)) continue;
        const auto home = *topology.home_link(down.source);
        std::optional<std::size_t> exact;
        std::optional<std::size_t> same_sid;
        const TimestampMs earliest = down.timestamp > pair_window_ms ? down.timestamp - pair_window_ms : 0;
        auto first = std::partition_point(trace.begin(), trace.end(),
                                          [&](const UdsExchange &e) { return e.timestamp < earliest; });
        for (auto j = static_cast<std::size_t>(first - trace.begin());
             j < trace.size() && trace[j].timestamp <= down.timestamp; ++j) {
            const auto &up = trace[j];
            if (consumed[j] || j == i || up.link != home) continue;
            if (up.source != down.source || up.target_ecu != down.target_ecu) continue;
            if (!exact && same_bytes(up, down)) exact = j;
            if (!same_sid && up.request.sid == down.request.sid) same_sid = j;
        }
        auto pick = exact ? exact : same_sid;
        std::optional<UdsExchange> upstream;
        if (pick) {
            consumed[*pick] = true;
            upstream = trace[*pick];
        }
        if (auto ev = check_routing(topology, upstream, down)) out.push_back(std::move(*ev));
    }
    return out;
}

SecurityEvent to_security_event(const MfiEvent &mfi) {
    SecurityEvent ev;
    ev.strategy = Strategy::MFI;
    ev.sid = mfi.sid;
    ev.ecu_id = mfi.target_ecu;
    ev.source_address = mfi.observed_origin;
    ev.timestamp = mfi.timestamp;
    ev.mfi_kind = mfi.kind;
    ev.detail = mfi.detail;
    std::vector<std::uint16_t> expected(mfi.expected_origins.begin(), mfi.expected_origins.end());
    ev.context.fields = {{"sid", std::uint64_t{mfi.sid}},
                         {"target_ecu", mfi.target_ecu},
                         {"observed_origin", std::uint64_t{mfi.observed_origin}},
                         {"expected_origin", expected}};
    return ev;
}

} // namespace udsmon
