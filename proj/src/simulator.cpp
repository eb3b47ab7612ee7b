#include "udsmon/simulator.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>

#include "udsmon/catalog.hpp"
#include "udsmon/digest.hpp"
#include "udsmon/error.hpp"
#include "udsmon/recfile.hpp"

namespace udsmon {

namespace {

constexpr TimestampMs kSecond = 1000;
constexpr TimestampMs kMinute = 60 * kSecond;
constexpr TimestampMs kHour = 60 * kMinute;

const std::string kEcm = "ECM";
const std::string kBcm = "BCM";
const std::string kTcu = "TCU";
const std::string kVin = "WSIM0000000000001";

Bytes cat(std::initializer_list<Bytes> parts) {
    Bytes out;
    for (const auto &p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

Bytes u16(std::uint16_t v) { return {static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)}; }
Bytes u32(std::uint32_t v) {
    return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
            static_cast<std::uint8_t>(v)};
}
Bytes text(std::string_view s) { return Bytes(s.begin(), s.end()); }

Bytes pos(Sid sid, Bytes tail = {}) { return cat({{static_cast<std::uint8_t>(sid + kPositiveResponseOffset)}, tail}); }
Bytes neg(Sid sid, std::uint8_t nrc) { return {kNegativeResponseSid, sid, nrc}; }

// NRCs used by the simulated ECUs.
constexpr std::uint8_t kNotSupported = 0x11;
constexpr std::uint8_t kSfNotSupported = 0x12;
constexpr std::uint8_t kBadLength = 0x13;
constexpr std::uint8_t kBusy = 0x21;
constexpr std::uint8_t kConditions = 0x22;
constexpr std::uint8_t kSequence = 0x24;
constexpr std::uint8_t kOutOfRange = 0x31;
constexpr std::uint8_t kDenied = 0x33;
constexpr std::uint8_t kInvalidKey = 0x35;
constexpr std::uint8_t kAttempts = 0x36;
constexpr std::uint8_t kDelay = 0x37;
constexpr std::uint8_t kNotInSession = 0x7F;

class Builder {
public:
    Builder(const Topology &topology, std::mt19937_64 &rng, TimestampMs start)
        : topology_(topology), rng_(rng), now_(start) {}

    TimestampMs now() const { return now_; }
    void wait(TimestampMs ms) { now_ += ms; }
    std::uint64_t pick(std::uint64_t n) { return rng_() % n; }
    Bytes random_bytes(std::size_t n) {
        Bytes out(n);
        for (auto &b : out) b = static_cast<std::uint8_t>(rng_());
        return out;
    }

    // Tester on the diagnostic port; the gateway forwards to the ECU's link.
    void tester(const std::string &ecu, const Bytes &req, const Bytes &rsp) {
        add(sim::kTester, "obd", ecu, req, rsp, now_);
        const auto &link = topology_.ecu(ecu).link;
        if (link != "obd") add(sim::kTester, link, ecu, req, rsp, now_ + 1);
        step();
    }

    // Request sent by another ECU.
    void from_ecu(const std::string &sender, const std::string &ecu, const Bytes &req, const Bytes &rsp) {
        const auto &node = topology_.ecu(sender);
        add(node.address, node.link, ecu, req, rsp, now_);
        const auto &link = topology_.ecu(ecu).link;
        if (link != node.link) add(node.address, link, ecu, req, rsp, now_ + 1);
        step();
    }

    // Frame placed directly on the ECU's link.
    void inject(SourceAddress source, const std::string &ecu, const Bytes &req, const Bytes &rsp) {
        add(source, topology_.ecu(ecu).link, ecu, req, rsp, now_);
        step();
    }

    // Tester request altered by a compromised gateway.
    void tamper(const std::string &ecu, const Bytes &original, const Bytes &forwarded, const Bytes &rsp) {
        add(sim::kTester, "obd", ecu, original, rsp, now_);
        add(sim::kTester, topology_.ecu(ecu).link, ecu, forwarded, rsp, now_ + 1);
        step();
    }

    std::vector<UdsExchange> take() {
        std::stable_sort(trace_.begin(), trace_.end(),
                         [](const UdsExchange &a, const UdsExchange &b) { return a.timestamp < b.timestamp; });
        return std::move(trace_);
    }

private:
    void step() { now_ += 120 + rng_() % 120; }

    void add(SourceAddress source, const std::string &link, const std::string &ecu, const Bytes &req, const Bytes &rsp,
             TimestampMs t) {
        UdsExchange ex;
        ex.request = parse_request(req);
        if (!rsp.empty()) ex.response = parse_response(rsp);
        ex.timestamp = t;
        ex.source = source;
        ex.target_ecu = ecu;
        ex.link = link;
        trace_.push_back(std::move(ex));
    }

    const Topology &topology_;
    std::mt19937_64 &rng_;
    TimestampMs now_;
    std::vector<UdsExchange> trace_;
};

// ---------------------------------------------------------------------------
// Diagnostic building blocks

Bytes key_for(const Bytes &seed) {
    Bytes key = seed;
    for (std::size_t i = 0; i < key.size(); ++i) key[i] = static_cast<std::uint8_t>((key[i] ^ 0x5A) + i);
    return key;
}

void session(Builder &b, const std::string &ecu, std::uint8_t sf) {
    b.tester(ecu, {0x10, sf}, pos(0x10, {sf, 0x00, 0x32, 0x01, 0xF4}));
}

void unlock(Builder &b, const std::string &ecu) {
    auto seed = b.random_bytes(4);
    b.tester(ecu, {0x27, 0x01}, pos(0x27, cat({{0x01}, seed})));
    b.tester(ecu, cat({{0x27, 0x02}, key_for(seed)}), pos(0x27, {0x02}));
}

void failed_unlock(Builder &b, const std::string &ecu, std::uint8_t nrc = kInvalidKey) {
    auto seed = b.random_bytes(4);
    b.tester(ecu, {0x27, 0x01}, pos(0x27, cat({{0x01}, seed})));
    b.tester(ecu, cat({{0x27, 0x02}, b.random_bytes(4)}), neg(0x27, nrc));
}

Bytes request_download(std::uint32_t addr, std::uint32_t size, Sid sid = 0x34) {
    return cat({{sid, 0x00, 0x44}, u32(addr), u32(size)});
}

void download(Builder &b, const std::string &ecu, const Bytes &image, std::uint32_t addr = 0x00080000) {
    b.tester(ecu, request_download(addr, static_cast<std::uint32_t>(image.size())), pos(0x34, {0x20, 0x00, 0x82}));
    std::uint8_t counter = 1;
    for (std::size_t off = 0; off < image.size(); off += 128, ++counter) {
        auto end = std::min(image.size(), off + 128);
        Bytes block(image.begin() + static_cast<std::ptrdiff_t>(off), image.begin() + static_cast<std::ptrdiff_t>(end));
        b.tester(ecu, cat({{0x36, counter}, block}), pos(0x36, {counter}));
    }
    b.tester(ecu, {0x37}, pos(0x37));
}

Bytes read_did(std::uint16_t did) { return cat({{0x22}, u16(did)}); }
Bytes did_value(std::uint16_t did, const Bytes &data) { return pos(0x22, cat({u16(did), data})); }

Bytes file_request(std::uint8_t mode, std::string_view path) {
    return cat({{0x38, mode}, u16(static_cast<std::uint16_t>(path.size())), text(path)});
}

Bytes memory_request(Sid sid, std::uint32_t addr, std::uint16_t size, const Bytes &data = {}) {
    return cat({{sid, 0x24}, u32(addr), u16(size), data});
}

// A well-behaved workshop visit: sessions, access, reads, a routine,
// DTC handling, a current firmware update and resets. One wrong key and one
// unknown DID stand in for ordinary operator mistakes.
void workshop_visit(Builder &b) {
    session(b, kEcm, 0x03);
    failed_unlock(b, kEcm);
    b.wait(1500);
    unlock(b, kEcm);
    b.tester(kEcm, read_did(0xF190), did_value(0xF190, text(kVin)));
    b.tester(kEcm, read_did(0xF18C), did_value(0xF18C, text("ECM0042")));
    b.tester(kEcm, read_did(0xF1F7), neg(0x22, kOutOfRange));
    b.tester(kEcm, {0x19, 0x02, 0xFF}, pos(0x19, {0x02, 0xFF, 0x01, 0x23, 0x45, 0x09}));
    b.tester(kEcm, {0x14, 0xFF, 0xFF, 0xFF}, pos(0x14));
    b.tester(kEcm, cat({{0x2E}, u16(0xF198), text("WS-042")}), pos(0x2E, u16(0xF198)));
    b.tester(kEcm, {0x31, 0x01, 0x02, 0x03}, pos(0x31, {0x01, 0x02, 0x03, 0x00}));
    b.wait(2000);
    b.tester(kEcm, {0x31, 0x03, 0x02, 0x03}, pos(0x31, {0x03, 0x02, 0x03, 0x00}));
    b.tester(kEcm, {0x85, 0x02}, pos(0x85, {0x02}));
    session(b, kEcm, 0x02);
    unlock(b, kEcm);
    download(b, kEcm, firmware_image("ecm-gen3", 3));
    b.tester(kEcm, {0x85, 0x01}, pos(0x85, {0x01}));
    b.tester(kEcm, {0x11, 0x01}, pos(0x11, {0x01}));
    b.wait(3000);

    session(b, kBcm, 0x03);
    unlock(b, kBcm);
    b.tester(kBcm, {0x2F, 0xF0, 0x10, 0x03, 0x01}, pos(0x2F, {0xF0, 0x10, 0x03, 0x01}));
    b.tester(kBcm, {0x2F, 0xF0, 0x10, 0x00}, pos(0x2F, {0xF0, 0x10, 0x00}));
    b.tester(kBcm, cat({{0x2E}, u16(0xF190), text(kVin)}), pos(0x2E, u16(0xF190)));
    b.tester(kBcm, {0x28, 0x03, 0x01}, pos(0x28, {0x03}));
    b.tester(kBcm, {0x28, 0x00, 0x01}, pos(0x28, {0x00}));
    b.tester(kBcm, {0x11, 0x01}, pos(0x11, {0x01}));
    b.wait(3000);

    session(b, kTcu, 0x03);
    unlock(b, kTcu);
    b.tester(kTcu, {0x2A, 0x03, 0x0D, 0x0E}, pos(0x2A));
    b.wait(4000);
    b.tester(kTcu, {0x2A, 0x04, 0x0D, 0x0E}, pos(0x2A));
    b.tester(kTcu, file_request(0x05, "/log/"), pos(0x38, {0x05, 0x00, 0x02, 0x00, 0x40}));
    b.tester(kTcu, {0x86, 0x05, 0x02}, pos(0x86, {0x05, 0x00, 0x02}));
    b.tester(kTcu, {0x86, 0x00, 0x02}, pos(0x86, {0x00, 0x00, 0x02}));
    b.tester(kTcu, {0x10, 0x01}, pos(0x10, {0x01, 0x00, 0x32, 0x01, 0xF4}));
}

// Telematics polling of non-sensitive ECM values over the whole period.
void fleet_polling(Builder &b, TimestampMs until, bool with_hiccup) {
    static constexpr std::uint16_t kDids[] = {0xF40D, 0xF405, 0xF40C, 0xF42F};
    bool hiccup_done = !with_hiccup;
    while (b.now() < until) {
        auto did = kDids[b.pick(std::size(kDids))];
        if (!hiccup_done && b.pick(20) == 0) {
            b.from_ecu(kTcu, kEcm, read_did(did), neg(0x22, kConditions));
            hiccup_done = true;
        } else {
            b.from_ecu(kTcu, kEcm, read_did(did), did_value(did, b.random_bytes(2)));
        }
        b.wait(5000 + b.pick(2000));
    }
}

// ---------------------------------------------------------------------------
// Context fixture

ContextStore make_store(const std::vector<MaintenanceWindow> &windows, const std::vector<StateSample> &samples) {
    ContextStore store;
    VehicleRecord v;
    v.vehicle_id = sim::kVehicle;
    v.model = sim::kModel;
    v.ecus[kEcm] = {"ecm-gen3", EcuMode::production};
    v.ecus[kBcm] = {"bcm-gen2", EcuMode::production};
    v.ecus[kTcu] = {"tcu-gen1", EcuMode::production};
    for (const auto &w : windows) v.add_maintenance(w);
    v.forbidden.push_back({kEcm, 0x3D, std::nullopt});
    v.expected_dids.push_back({kBcm, 0xF190, hash_text(kVin)});
    store.add_vehicle(std::move(v));

    for (std::uint32_t version = 1; version <= 3; ++version) {
        store.add_release("ecm-gen3", {version, hash_payload(firmware_image("ecm-gen3", version))});
    }
    for (std::uint32_t version = 1; version <= 2; ++version) {
        store.add_release("bcm-gen2", {version, hash_payload(firmware_image("bcm-gen2", version))});
    }
    store.add_release("tcu-gen1", {1, hash_payload(firmware_image("tcu-gen1", 1))});

    auto &reg = store.sensitive();
    reg.add_did(0xF1A0, "immobilizer-key");
    reg.add_did(0xF1A1, "sa-secret");
    reg.add_did(0xF2A0, "key-state");
    reg.add_memory({0x00FF0000, 0x1000, "key-store"});
    reg.add_rid(0xFF10, "dump-keys");
    reg.add_path_prefix("/secure/", "credential-store");

    for (const auto &s : samples) store.add_sample(sim::kVehicle, s);
    return store;
}

StateSample parked(TimestampMs t) { return {t, 0, EcuMode::production, false, std::nullopt}; }

// ---------------------------------------------------------------------------
// Technique generators

struct Gen {
    Builder &b;
    std::string technique;
    std::vector<MaintenanceWindow> windows;
    std::vector<StateSample> samples;
    std::vector<ThreatIntelItem> ti;
    bool labeled = true;
    bool undetectable = false;

    void intel(TiSource source, const std::string &text, const std::string &ecu_type = "ecm-gen3") {
        ThreatIntelItem item;
        item.id = "ti-" + technique.substr(3);
        item.source = source;
        item.tags = {"model:" + sim::kModel, "ecu_type:" + ecu_type, "technique:" + technique};
        item.text = text;
        ti.push_back(std::move(item));
    }
};

using Generator = std::function<void(Gen &)>;

void gen_rd(Gen &g, const std::string &text) {
    g.labeled = false;
    g.intel(TiSource::public_report, text);
}

void gen_ps1(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x02);
    for (int i = 0; i < 3; ++i) b.tester(kEcm, request_download(0x00080000, 1024), neg(0x34, kDenied));
    unlock(b, kEcm);
    download(b, kEcm, b.random_bytes(1024));
    g.intel(TiSource::public_report, "tool for flashing unsigned packages published");
}

void gen_pe1(Gen &g) {
    g.b.from_ecu(kTcu, kEcm, {0x10, 0x03}, pos(0x10, {0x03, 0x00, 0x32, 0x01, 0xF4}));
    g.b.from_ecu(kTcu, kEcm, {0x10, 0x02}, pos(0x10, {0x02, 0x00, 0x32, 0x01, 0xF4}));
}

void gen_pe2(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    unlock(b, kEcm);
    b.tester(kEcm, {0x29, 0x05, 0x00, 0x01}, pos(0x29, cat({{0x05, 0x00, 0x10}, b.random_bytes(16)})));
    b.tester(kEcm, cat({{0x29, 0x03, 0x00, 0x10}, b.random_bytes(16)}), pos(0x29, {0x03, 0x12}));
    g.intel(TiSource::public_report, "diagnostic credentials for this platform offered for sale");
}

void gen_pe3(Gen &g) {
    auto &b = g.b;
    const Bytes recorded_seed{0x1A, 0x2B, 0x3C, 0x4D};
    const Bytes recorded_key = key_for(recorded_seed);
    b.inject(sim::kTester, kEcm, {0x10, 0x03}, pos(0x10, {0x03, 0x00, 0x32, 0x01, 0xF4}));
    for (int i = 0; i < 11; ++i) {
        b.inject(sim::kTester, kEcm, {0x27, 0x01}, pos(0x27, cat({{0x01}, b.random_bytes(4)})));
        b.inject(sim::kTester, kEcm, cat({{0x27, 0x02}, recorded_key}), neg(0x27, kInvalidKey));
    }
    b.inject(sim::kTester, kEcm, {0x27, 0x01}, pos(0x27, cat({{0x01}, recorded_seed})));
    b.inject(sim::kTester, kEcm, cat({{0x27, 0x02}, recorded_key}), pos(0x27, {0x02}));
    g.intel(TiSource::disclosed, "seed reuse in security access reported by researcher");
}

void gen_pe4(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    for (int i = 0; i < 12; ++i) failed_unlock(b, kEcm);
    unlock(b, kEcm);
}

void gen_pe5(Gen &g) {
    auto &b = g.b;
    session(b, kBcm, 0x03);
    b.tester(kBcm, {0x29, 0x08}, pos(0x29, {0x08, 0x02}));
    b.tester(kBcm, cat({{0x29, 0x01, 0x00, 0x00, 0x20}, b.random_bytes(32), {0x00, 0x00}}), neg(0x29, 0x50));
    b.tester(kBcm, cat({{0x29, 0x01, 0x00, 0x00, 0x20}, b.random_bytes(32), {0x00, 0x00}}),
             pos(0x29, cat({{0x01, 0x11, 0x00, 0x10}, b.random_bytes(16)})));
    b.tester(kBcm, cat({{0x29, 0x03, 0x00, 0x10}, b.random_bytes(16)}), pos(0x29, {0x03, 0x12}));
}

void gen_de1(Gen &g) {
    session(g.b, kEcm, 0x03);
    unlock(g.b, kEcm);
    g.b.tester(kEcm, {0x85, 0x02}, pos(0x85, {0x02}));
}

void gen_de2(Gen &g) {
    session(g.b, kEcm, 0x03);
    g.b.tester(kEcm, {0x14, 0xFF, 0xFF, 0xFF}, pos(0x14));
}

void gen_de3(Gen &g) {
    session(g.b, kEcm, 0x02);
    unlock(g.b, kEcm);
    download(g.b, kEcm, firmware_image("ecm-gen3", 1));
}

void gen_de4(Gen &g) {
    auto &b = g.b;
    // Session jump from default and a seed without a key, then writes the
    // ECU accepts anyway.
    session(b, kEcm, 0x02);
    b.tester(kEcm, {0x27, 0x01}, pos(0x27, cat({{0x01}, b.random_bytes(4)})));
    b.tester(kEcm, cat({{0x2E}, u16(0xF198), text("XX-000")}), pos(0x2E, u16(0xF198)));
    b.tester(kEcm, {0x2F, 0xF0, 0x30, 0x03, 0x01}, pos(0x2F, {0xF0, 0x30, 0x03, 0x01}));
    b.tester(kEcm, {0x31, 0x01, 0xFF, 0x00}, pos(0x31, {0x01, 0xFF, 0x00, 0x00}));
    g.intel(TiSource::public_report, "session and security access checks skipped in default session");
}

void gen_de5(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    b.tester(kEcm, cat({{0x2C, 0x01}, u16(0xF300), u16(0xF1A0), {0x01, 0x10}}), pos(0x2C, cat({{0x01}, u16(0xF300)})));
    b.tester(kEcm, read_did(0xF300), did_value(0xF300, b.random_bytes(16)));
    g.intel(TiSource::disclosed, "dynamically defined identifiers expose protected data");
}

void gen_ca1(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    b.tester(kEcm, read_did(0xF1A1), did_value(0xF1A1, b.random_bytes(16)));
    b.tester(kEcm, memory_request(0x23, 0x00FF0000, 0x20), pos(0x23, b.random_bytes(32)));
    b.tester(kEcm, {0x31, 0x01, 0xFF, 0x10}, pos(0x31, cat({{0x01, 0xFF, 0x10}, b.random_bytes(8)})));
}

bool ecm_supports(Sid sid) {
    static const std::set<Sid> kSupported{0x10, 0x11, 0x14, 0x19, 0x22, 0x23, 0x27, 0x28, 0x2E,
                                          0x2F, 0x31, 0x34, 0x35, 0x36, 0x37, 0x3D, 0x3E, 0x85};
    return kSupported.contains(sid);
}

void gen_ds1(Gen &g) {
    auto &b = g.b;
    static constexpr Sid kUnknown[] = {0x01, 0x05, 0x09, 0xA0, 0xBA};
    for (const auto &d : service_registry()) {
        b.tester(kEcm, {d.sid}, neg(d.sid, ecm_supports(d.sid) ? kBadLength : kNotSupported));
    }
    for (auto sid : kUnknown) b.tester(kEcm, {sid}, neg(sid, kNotSupported));
    session(b, kEcm, 0x01);
    b.tester(kEcm, {0x3E, 0x00}, pos(0x3E, {0x00}));
}

void gen_ds2(Gen &g) {
    auto &b = g.b;
    const std::vector<std::pair<Sid, std::vector<std::uint8_t>>> probes{
        {0x10, {0x04, 0x05, 0x06, 0x07}}, {0x11, {0x06, 0x07}}, {0x19, {0x30, 0x31}},
        {0x27, {0x61, 0x62}},             {0x28, {0x06}},       {0x31, {0x04}},
        {0x85, {0x05}},
    };
    for (const auto &[sid, sfs] : probes) {
        for (auto sf : sfs) b.tester(kEcm, {sid, sf}, neg(sid, kSfNotSupported));
    }
    session(b, kEcm, 0x01);
    b.tester(kEcm, {0x19, 0x01, 0xFF}, pos(0x19, {0x01, 0xFF, 0x00, 0x00, 0x05}));
}

void gen_ds3(Gen &g) {
    for (std::uint8_t sf = 0x01; sf <= 0x20; ++sf) {
        if (sf <= 0x03) session(g.b, kEcm, sf);
        else g.b.tester(kEcm, {0x10, sf}, neg(0x10, kSfNotSupported));
    }
}

Bytes fuzz_response(const Bytes &req) {
    const Sid sid = req[0];
    const auto len = req.size();
    switch (sid) {
    case 0x10:
        if (len != 2) return neg(sid, kBadLength);
        if (req[1] >= 0x01 && req[1] <= 0x03) return pos(0x10, {req[1], 0x00, 0x32, 0x01, 0xF4});
        return neg(sid, kSfNotSupported);
    case 0x22:
        if (len < 3 || len % 2 == 0) return neg(sid, kBadLength);
        return neg(sid, kOutOfRange);
    case 0x27:
        if (len < 2) return neg(sid, kBadLength);
        if ((req[1] & 0x7F) == 0x01) return pos(0x27, {0x01, 0x11, 0x22, 0x33, 0x44});
        return neg(sid, kSfNotSupported);
    case 0x31:
        if (len < 4) return neg(sid, kBadLength);
        return neg(sid, kOutOfRange);
    default:
        if (len == 2 && req[1] == 0x00) return pos(sid, {0x00});
        return neg(sid, kBadLength);
    }
}

void gen_ds4(Gen &g) {
    auto &b = g.b;
    static constexpr Sid kTargets[] = {0x10, 0x22, 0x27, 0x31, 0x3E};
    session(b, kEcm, 0x01);
    int counted = 0;
    for (int i = 0; i < 40 || counted < 12; ++i) {
        auto sid = kTargets[b.pick(std::size(kTargets))];
        auto req = cat({{sid}, b.random_bytes(b.pick(6))});
        auto rsp = fuzz_response(req);
        if (sid != 0x3E && rsp[0] == kNegativeResponseSid && rsp[2] != kSequence) ++counted;
        b.tester(kEcm, req, rsp);
        b.wait(b.pick(100));
    }
}

void gen_ds5(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    for (int i = 0; i < 30; ++i) {
        if (i < 6 || i % 3 == 0) b.tester(kEcm, {0x27, 0x01}, pos(0x27, cat({{0x01}, b.random_bytes(4)})));
        else b.tester(kEcm, {0x27, 0x01}, neg(0x27, kDelay));
    }
}

void gen_ds6(Gen &g) {
    session(g.b, kEcm, 0x03);
    for (int i = 0; i < 4; ++i) unlock(g.b, kEcm);
    g.intel(TiSource::public_report, "security access algorithm recovered from firmware dump");
}

void gen_ds7(Gen &g) {
    session(g.b, kBcm, 0x03);
    g.b.tester(kBcm, {0x29, 0x08}, pos(0x29, {0x08, 0x02}));
    g.intel(TiSource::internal_test, "authentication configuration readable without access", "bcm-gen2");
}

void gen_ds8(Gen &g) {
    auto &b = g.b;
    session(b, kBcm, 0x03);
    for (std::uint8_t algo = 0; algo < 4; ++algo) {
        auto req = cat({{0x29, 0x05, 0x00}, b.random_bytes(16)});
        req[3] = algo;
        if (algo == 3) b.tester(kBcm, req, neg(0x29, kOutOfRange));
        else b.tester(kBcm, req, pos(0x29, cat({{0x05, 0x00, 0x10}, b.random_bytes(16)})));
    }
    g.intel(TiSource::internal_test, "weak authentication algorithms still accepted", "bcm-gen2");
}

void gen_ds9(Gen &g) {
    auto &b = g.b;
    session(b, kBcm, 0x03);
    for (int i = 0; i < 15; ++i) {
        if (i % 4 == 3) b.tester(kBcm, {0x29, 0x05, 0x00, 0x01}, neg(0x29, kDelay));
        else b.tester(kBcm, {0x29, 0x05, 0x00, 0x01}, pos(0x29, cat({{0x05, 0x00, 0x10}, b.random_bytes(16)})));
    }
}

void gen_ds10(Gen &g) {
    auto &b = g.b;
    session(b, kTcu, 0x03);
    for (std::uint8_t calc = 0; calc < 3; ++calc) {
        auto req = cat({{0x84, 0x00, 0x01, calc}, u16(0x0020), u16(0x0001), {0x22, 0xF1, 0x90}});
        b.tester(kTcu, req, pos(0x84, {0x00, 0x01, calc, 0x00, 0x00, 0x00, 0x01, 0x62}));
    }
    g.intel(TiSource::disclosed, "secured data transmission accepts unsigned payloads", "tcu-gen1");
}

void gen_ds11(Gen &g) {
    auto &b = g.b;
    static const std::set<std::uint16_t> kKnown{0xF180, 0xF186, 0xF187, 0xF18C, 0xF190, 0xF1A0, 0xF1A1};
    session(b, kEcm, 0x03);
    for (std::uint16_t did = 0xF180; did < 0xF1B0; ++did) {
        if (kKnown.contains(did)) b.tester(kEcm, read_did(did), did_value(did, b.random_bytes(8)));
        else b.tester(kEcm, read_did(did), neg(0x22, kOutOfRange));
        b.wait(b.pick(60));
    }
}

void gen_ds12(Gen &g) {
    auto &b = g.b;
    static const std::set<std::uint16_t> kKnown{0xFF00, 0xFF01, 0xFF10};
    session(b, kEcm, 0x03);
    for (std::uint16_t rid = 0xFF00; rid < 0xFF20; ++rid) {
        auto req = cat({{0x31, 0x01}, u16(rid)});
        if (kKnown.contains(rid)) b.tester(kEcm, req, pos(0x31, cat({{0x01}, u16(rid), {0x00}})));
        else b.tester(kEcm, req, neg(0x31, kOutOfRange));
    }
}

void gen_ds13(Gen &g) {
    auto &b = g.b;
    static const std::vector<std::pair<std::string, bool>> kPaths{
        {"/", true},       {"/bin/", false},  {"/etc/", false},  {"/cfg/", true},   {"/fw/", true},
        {"/var/", false},  {"/tmp/", false},  {"/usr/", false},  {"/log/", true},   {"/data/", false},
        {"/keys/", false}, {"/diag/", false}, {"/opt/", false},  {"/boot/", false}, {"/secure/", true},
        {"/home/", false},
    };
    session(b, kTcu, 0x03);
    for (const auto &[path, exists] : kPaths) {
        if (exists) b.tester(kTcu, file_request(0x05, path), pos(0x38, {0x05, 0x00, 0x02, 0x00, 0x10}));
        else b.tester(kTcu, file_request(0x05, path), neg(0x38, kOutOfRange));
    }
}

void gen_ds14(Gen &g) {
    g.labeled = false;
    g.undetectable = true;
    auto start = g.b.now();
    workshop_visit(g.b);
    g.windows = {{start - kMinute, g.b.now() + 5 * kMinute, "WS-042"}};
}

void gen_lm1(Gen &g) {
    auto &b = g.b;
    auto start = b.now();
    session(b, kEcm, 0x03);
    unlock(b, kEcm);
    b.tamper(kEcm, read_did(0xF190), read_did(0xF1A0), did_value(0xF1A0, b.random_bytes(16)));
    b.tamper(kEcm, {0x31, 0x01, 0x02, 0x03}, {0x31, 0x01, 0xFF, 0x10}, pos(0x31, {0x01, 0xFF, 0x10, 0x00}));
    auto seed = b.random_bytes(4);
    b.tester(kEcm, {0x27, 0x01}, pos(0x27, cat({{0x01}, seed})));
    b.tamper(kEcm, cat({{0x27, 0x02}, key_for(seed)}), cat({{0x27, 0x02}, b.random_bytes(4)}), neg(0x27, kInvalidKey));
    b.tamper(kEcm, {0x10, 0x03}, {0x10, 0x02}, pos(0x10, {0x02, 0x00, 0x32, 0x01, 0xF4}));
    g.windows = {{start - kMinute, b.now() + 30 * kMinute, "WS-042"}};
    g.samples = {parked(sim::kStart), {start - kMinute, 0, EcuMode::production, true, std::nullopt}};
    g.intel(TiSource::public_report, "gateway firmware allows frame rewriting between domains");
}

void gen_cl1(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    b.tester(kEcm, cat({{0x86, 0x03, 0x02}, u16(0xF1A0), {0x22}, u16(0xF1A0)}), pos(0x86, {0x03, 0x00, 0x02}));
    for (int i = 0; i < 6; ++i) {
        b.tester(kEcm, cat({{0x86, 0x03, 0x02}, u16(static_cast<std::uint16_t>(0xF1B0 + i)), {0x22}}),
                 neg(0x86, kOutOfRange));
    }
    b.tester(kEcm, {0x86, 0x05, 0x02}, pos(0x86, {0x05, 0x00, 0x02}));
}

void gen_af51(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    for (int i = 0; i < 10; ++i) {
        auto req = Bytes{0x86, 0x01, 0x02, 0xFF, 0x19, 0x02, 0xFF};
        if (i < 3) b.tester(kEcm, req, pos(0x86, {0x01, 0x00, 0x02}));
        else b.tester(kEcm, req, neg(0x86, kConditions));
        b.wait(50);
    }
}

void gen_cl2(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    b.tester(kEcm, {0x2A, 0x03, 0xA0, 0x0D}, pos(0x2A));
    for (int i = 0; i < 6; ++i) {
        b.tester(kEcm, {0x2A, 0x03, static_cast<std::uint8_t>(0xB0 + i)}, neg(0x2A, kOutOfRange));
    }
}

void gen_af52(Gen &g) {
    auto &b = g.b;
    for (int i = 0; i < 8; ++i) {
        auto req = Bytes{0x2A, 0x03, static_cast<std::uint8_t>(0x01 + i), static_cast<std::uint8_t>(0x20 + i)};
        if (i < 3) b.from_ecu(kTcu, kEcm, req, pos(0x2A));
        else b.from_ecu(kTcu, kEcm, req, neg(0x2A, kOutOfRange));
    }
}

void gen_af6(Gen &g) {
    auto &b = g.b;
    b.tester(kEcm, {0x2A, 0x04, 0x0D, 0x0E}, pos(0x2A));
    for (int i = 0; i < 6; ++i) b.tester(kEcm, {0x2A, 0x04, static_cast<std::uint8_t>(0x90 + i)}, neg(0x2A, kOutOfRange));
    b.tester(kEcm, {0x2A, 0x04}, pos(0x2A));
}

void gen_af7(Gen &g) {
    auto &b = g.b;
    const Bytes req{0x2F, 0xF0, 0x10, 0x03, 0x01};
    for (int i = 0; i < 3; ++i) b.from_ecu(kTcu, kBcm, req, neg(0x2F, kDenied));
    for (int i = 0; i < 2; ++i) b.from_ecu(kTcu, kBcm, req, pos(0x2F, {0xF0, 0x10, 0x03, 0x01}));
}

void gen_af8(Gen &g) {
    session(g.b, kEcm, 0x03);
    unlock(g.b, kEcm);
    g.b.tester(kEcm, {0x31, 0x01, 0xFF, 0x00}, pos(0x31, {0x01, 0xFF, 0x00, 0x00}));
}

void gen_af9(Gen &g) {
    auto &b = g.b;
    auto start = b.now();
    session(b, kEcm, 0x02);
    unlock(b, kEcm);
    auto image = firmware_image("ecm-gen3", 3);
    b.tester(kEcm, request_download(0x00080000, static_cast<std::uint32_t>(image.size())), pos(0x34, {0x20, 0x00, 0x82}));
    for (std::uint8_t counter = 1; counter <= 3; ++counter) {
        Bytes block(image.begin() + (counter - 1) * 128, image.begin() + counter * 128);
        b.tester(kEcm, cat({{0x36, counter}, block}), pos(0x36, {counter}));
    }
    b.inject(sim::kTester, kEcm, {0x37}, pos(0x37));
    for (std::uint8_t counter = 4; counter <= 6; ++counter) {
        Bytes block(image.begin() + (counter - 1) * 128, image.begin() + counter * 128);
        b.tester(kEcm, cat({{0x36, counter}, block}), neg(0x36, kSequence));
    }
    b.tester(kEcm, {0x37}, neg(0x37, kSequence));
    g.windows = {{start - kMinute, b.now() + 30 * kMinute, "WS-042"}};
    g.samples = {parked(sim::kStart), {start - kMinute, 0, EcuMode::production, true, std::nullopt}};
}

void gen_af10(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    unlock(b, kEcm);
    b.tester(kEcm, {0x31, 0x01, 0x02, 0x03}, pos(0x31, {0x01, 0x02, 0x03, 0x00}));
    for (int i = 0; i < 3; ++i) b.from_ecu(kTcu, kEcm, {0x31, 0x02, 0x02, 0x03}, pos(0x31, {0x02, 0x02, 0x03, 0x00}));
    b.tester(kEcm, {0x31, 0x03, 0x02, 0x03}, neg(0x31, kSequence));
}

void gen_af11(Gen &g) {
    auto &b = g.b;
    b.from_ecu(kTcu, kEcm, {0x10, 0x03}, pos(0x10, {0x03, 0x00, 0x32, 0x01, 0xF4}));
    for (int i = 0; i < 10; ++i) {
        b.wait(1800);
        b.from_ecu(kTcu, kEcm, {0x3E, 0x00}, pos(0x3E, {0x00}));
    }
}

void gen_af12(Gen &g) {
    auto &b = g.b;
    session(b, kBcm, 0x03);
    for (int i = 0; i < 2; ++i) b.tester(kBcm, {0x2F, 0xF0, 0x20, 0x03, 0x01}, neg(0x2F, kDenied));
    b.tester(kBcm, {0x2F, 0xF0, 0x21, 0x03, 0x01}, pos(0x2F, {0xF0, 0x21, 0x03, 0x01}));
}

void driving(Gen &g, TimestampMs from, TimestampMs until) {
    g.samples = {parked(sim::kStart), {from, 60, EcuMode::production, false, std::nullopt}, parked(until)};
}

void gen_af13(Gen &g) {
    auto &b = g.b;
    auto start = b.now();
    b.from_ecu(kTcu, kEcm, {0x28, 0x03, 0x01}, pos(0x28, {0x03}));
    b.from_ecu(kTcu, kEcm, {0x28, 0x01, 0x01}, pos(0x28, {0x01}));
    b.from_ecu(kTcu, kEcm, {0x28, 0x03, 0x03}, neg(0x28, kConditions));
    driving(g, start - kSecond, b.now() + kMinute);
}

void gen_af14(Gen &g) {
    auto &b = g.b;
    auto start = b.now();
    for (int i = 0; i < 4; ++i) {
        b.from_ecu(kTcu, kEcm, {0x11, 0x01}, pos(0x11, {0x01}));
        b.wait(2000);
    }
    driving(g, start - kSecond, b.now() + kMinute);
}

void gen_af15(Gen &g) {
    auto &b = g.b;
    session(b, kBcm, 0x03);
    for (int i = 0; i < 6; ++i) {
        b.tester(kBcm, cat({{0x2E}, u16(0xF190), b.random_bytes(17)}), neg(0x2E, kDenied));
    }
    unlock(b, kBcm);
    b.tester(kBcm, cat({{0x2E}, u16(0xF190), text("WSIM9999999999999")}), pos(0x2E, u16(0xF190)));
}

void gen_af16(Gen &g) {
    auto &b = g.b;
    session(b, kTcu, 0x03);
    for (int i = 0; i < 11; ++i) {
        auto path = "/secure/cert" + std::to_string(i) + ".pem";
        b.tester(kTcu, cat({file_request(0x03, path), {0x00, 0x02}, u16(0x0400), u16(0x0400)}),
                 neg(0x38, i % 2 ? kDenied : kOutOfRange));
    }
    unlock(b, kTcu);
    b.tester(kTcu, cat({file_request(0x01, "/secure/backdoor.sh"), {0x00, 0x02}, u16(0x0100), u16(0x0100)}),
             pos(0x38, {0x01, 0x02, 0x01, 0x00, 0x00}));
}

void gen_af17(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    for (int i = 0; i < 6; ++i) {
        b.tester(kEcm, memory_request(0x3D, 0x00FF0000 + 0x10 * i, 4, b.random_bytes(4)), neg(0x3D, kDenied));
    }
    unlock(b, kEcm);
    b.tester(kEcm, memory_request(0x3D, 0x00FF0010, 4, b.random_bytes(4)),
             pos(0x3D, cat({{0x24}, u32(0x00FF0010), u16(4)})));
    b.tester(kEcm, request_download(0x00FF0100, 256), pos(0x34, {0x20, 0x00, 0x82}));
}

void gen_cl3(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    for (int i = 0; i < 2; ++i) b.tester(kEcm, read_did(0xF1A0), neg(0x22, kDenied));
    unlock(b, kEcm);
    b.tester(kEcm, read_did(0xF1A0), did_value(0xF1A0, b.random_bytes(16)));
}

void gen_cl4(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    unlock(b, kEcm);
    b.tester(kEcm, memory_request(0x23, 0x00FF0000, 0x100), pos(0x23, b.random_bytes(64)));
    b.tester(kEcm, memory_request(0x23, 0x7FFF0000, 0x100), neg(0x23, kOutOfRange));
    b.tester(kEcm, cat({{0x35, 0x00, 0x44}, u32(0x00FF0000), u32(0x400)}), pos(0x35, {0x20, 0x01, 0x02}));
    b.tester(kEcm, {0x36, 0x01}, pos(0x36, cat({{0x01}, b.random_bytes(64)})));
    b.tester(kEcm, {0x37}, pos(0x37));
}

void gen_cl5(Gen &g) {
    auto &b = g.b;
    session(b, kTcu, 0x03);
    unlock(b, kTcu);
    b.tester(kTcu, file_request(0x04, "/secure/keys.bin"), pos(0x38, {0x04, 0x02, 0x02, 0x00, 0x40, 0x00, 0x40, 0x00}));
    b.tester(kTcu, file_request(0x04, "/secure/missing.bin"), neg(0x38, kOutOfRange));
}

void gen_cl6(Gen &g) {
    auto &b = g.b;
    for (std::uint8_t sf : {0x42, 0x55, 0x56, 0x60, 0x61, 0x70}) b.tester(kEcm, {0x19, sf, 0xFF}, neg(0x19, kSfNotSupported));
    b.tester(kEcm, {0x19, 0x02, 0xFF}, pos(0x19, {0x02, 0xFF, 0x01, 0x23, 0x45, 0x09}));
}

void gen_af1(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x01);
    static const Bytes kFlood[] = {{0x22, 0xF1, 0x90}, {0x31, 0x01, 0x02, 0x03}, {0x27, 0x01}, {0x10, 0x03}};
    for (int i = 0; i < 30; ++i) {
        const auto &req = kFlood[i % 4];
        b.tester(kEcm, req, neg(req[0], kBusy));
    }
    g.intel(TiSource::public_report, "diagnostic flooding stalls gateway routing");
}

void gen_af2(Gen &g) {
    auto &b = g.b;
    for (int i = 0; i < 4; ++i) {
        b.inject(sim::kTester, kEcm, {0x10, 0x01}, pos(0x10, {0x01, 0x00, 0x32, 0x01, 0xF4}));
        b.inject(sim::kTester, kEcm, {0x31, 0x02, 0x02, 0x03}, neg(0x31, kSequence));
    }
    for (int i = 0; i < 12; ++i) b.tester(kEcm, read_did(0xF190), neg(0x22, kBusy));
    g.intel(TiSource::public_report, "spoofed session resets block workshop diagnostics");
}

void gen_af3(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    unlock(b, kEcm);
    for (int i = 0; i < 4; ++i) {
        b.from_ecu(kTcu, kEcm, {0x10, 0x01}, pos(0x10, {0x01, 0x00, 0x32, 0x01, 0xF4}));
        b.tester(kEcm, cat({{0x2E}, u16(0xF198), text("WS-042")}), neg(0x2E, kNotInSession));
    }
}

void gen_af4(Gen &g) {
    auto &b = g.b;
    session(b, kEcm, 0x03);
    for (int i = 0; i < 3; ++i) failed_unlock(b, kEcm);
    b.tester(kEcm, {0x27, 0x01}, pos(0x27, cat({{0x01}, b.random_bytes(4)})));
    b.tester(kEcm, cat({{0x27, 0x02}, b.random_bytes(4)}), neg(0x27, kAttempts));
    for (int i = 0; i < 8; ++i) b.tester(kEcm, {0x27, 0x01}, neg(0x27, kDelay));
}

const std::map<std::string, Generator, std::less<>> &generators() {
    static const std::map<std::string, Generator, std::less<>> table{
        {"AT-RD-1", [](Gen &g) { gen_rd(g, "firmware image for this ECU type circulating on forums"); }},
        {"AT-RD-2", [](Gen &g) { gen_rd(g, "security access secrets for this model leaked"); }},
        {"AT-PS-1", gen_ps1},
        {"AT-PE-1", gen_pe1},
        {"AT-PE-2", gen_pe2},
        {"AT-PE-3", gen_pe3},
        {"AT-PE-4", gen_pe4},
        {"AT-PE-5", gen_pe5},
        {"AT-DE-1", gen_de1},
        {"AT-DE-2", gen_de2},
        {"AT-DE-3", gen_de3},
        {"AT-DE-4", gen_de4},
        {"AT-DE-5", gen_de5},
        {"AT-CA-1", gen_ca1},
        {"AT-DS-1", gen_ds1},
        {"AT-DS-2", gen_ds2},
        {"AT-DS-3", gen_ds3},
        {"AT-DS-4", gen_ds4},
        {"AT-DS-5", gen_ds5},
        {"AT-DS-6", gen_ds6},
        {"AT-DS-7", gen_ds7},
        {"AT-DS-8", gen_ds8},
        {"AT-DS-9", gen_ds9},
        {"AT-DS-10", gen_ds10},
        {"AT-DS-11", gen_ds11},
        {"AT-DS-12", gen_ds12},
        {"AT-DS-13", gen_ds13},
        {"AT-DS-14", gen_ds14},
        {"AT-LM-1", gen_lm1},
        {"AT-CL-1", gen_cl1},
        {"AT-CL-2", gen_cl2},
        {"AT-CL-3", gen_cl3},
        {"AT-CL-4", gen_cl4},
        {"AT-CL-5", gen_cl5},
        {"AT-CL-6", gen_cl6},
        {"AT-AF-1", gen_af1},
        {"AT-AF-2", gen_af2},
        {"AT-AF-3", gen_af3},
        {"AT-AF-4", gen_af4},
        {"AT-AF-5.1", gen_af51},
        {"AT-AF-5.2", gen_af52},
        {"AT-AF-6", gen_af6},
        {"AT-AF-7", gen_af7},
        {"AT-AF-8", gen_af8},
        {"AT-AF-9", gen_af9},
        {"AT-AF-10", gen_af10},
        {"AT-AF-11", gen_af11},
        {"AT-AF-12", gen_af12},
        {"AT-AF-13", gen_af13},
        {"AT-AF-14", gen_af14},
        {"AT-AF-15", gen_af15},
        {"AT-AF-16", gen_af16},
        {"AT-AF-17", gen_af17},
    };
    return table;
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt) {
    auto d = hash_text(std::to_string(seed) + ":" + std::string(salt));
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | d[i];
    return v;
}

} // namespace

Topology reference_topology() {
    Topology t;
    t.vehicle_id = sim::kVehicle;
    for (const char *link : {"obd", "pt", "body"}) t.add_link(link);
    t.add_ecu({kEcm, "pt", sim::kEcm});
    t.add_ecu({kBcm, "body", sim::kBcm});
    t.add_ecu({kTcu, "body", sim::kTcu});
    t.add_route("obd", "pt");
    t.add_route("obd", "body");
    t.add_route("body", "pt");
    t.add_route("pt", "body");
    t.add_source(sim::kTester, "obd");
    for (const auto &ecu : {kEcm, kBcm, kTcu}) t.permit(ecu, std::nullopt, {sim::kTester});
    t.permit(kEcm, 0x22, {sim::kTester, sim::kTcu});
    return t;
}

Bytes firmware_image(const std::string &ecu_type, std::uint32_t version) {
    std::mt19937_64 rng(mix_seed(version, "firmware:" + ecu_type));
    Bytes image(1024);
    for (auto &b : image) b = static_cast<std::uint8_t>(rng());
    return image;
}

Scenario simulate(std::string_view technique, std::uint64_t seed) {
    const auto &table = generators();
    auto it = table.find(technique);
    if (it == table.end()) throw LookupError("unknown technique " + std::string(technique));

    Scenario s;
    s.technique = std::string(technique);
    s.seed = seed;
    s.topology = reference_topology();

    std::mt19937_64 rng(mix_seed(seed, technique));
    const TimestampMs start = sim::kStart + kMinute + rng() % (30 * kSecond);
    Builder b(s.topology, rng, start);
    Gen g{b, s.technique, {}, {}, {}, true, false};
    it->second(g);
    const TimestampMs end = b.now() + 1;

    if (g.windows.empty()) g.windows = {{sim::kStart + 6 * kHour, sim::kStart + 7 * kHour, "WS-042"}};
    if (g.samples.empty()) g.samples = {parked(sim::kStart)};
    s.store = make_store(g.windows, g.samples);
    s.trace = b.take();
    s.ti = std::move(g.ti);
    s.undetectable = g.undetectable;
    if (g.labeled) s.truth.push_back({s.technique, start, end});
    return s;
}

Scenario benign_traffic(std::uint64_t seed, TimestampMs duration_ms) {
    if (duration_ms < kMinBenignDurationMs) throw PreconditionError("benign traffic needs at least ten minutes");
    Scenario s;
    s.seed = seed;
    s.topology = reference_topology();

    std::mt19937_64 rng(mix_seed(seed, "benign"));
    const TimestampMs end = sim::kStart + duration_ms;
    const TimestampMs visit = sim::kStart + kMinute + rng() % kMinute;

    Builder workshop(s.topology, rng, visit);
    workshop_visit(workshop);
    const TimestampMs window_end = std::min(end, workshop.now() + 2 * kMinute);

    Builder fleet(s.topology, rng, sim::kStart + rng() % (5 * kSecond));
    fleet_polling(fleet, end, true);

    s.trace = workshop.take();
    auto background = fleet.take();
    s.trace.insert(s.trace.end(), background.begin(), background.end());
    std::stable_sort(s.trace.begin(), s.trace.end(),
                     [](const UdsExchange &a, const UdsExchange &b) { return a.timestamp < b.timestamp; });

    const TimestampMs window_start = visit - 30 * kSecond;
    s.store = make_store({{window_start, window_end, "WS-042"}},
                         {{sim::kStart, 40, EcuMode::production, false, std::nullopt},
                          {window_start, 0, EcuMode::production, true, std::nullopt},
                          {window_end, 35, EcuMode::production, false, std::nullopt}});

    ThreatIntelItem unrelated;
    unrelated.id = "ti-other-1";
    unrelated.source = TiSource::public_report;
    unrelated.tags = {"model:Other-Y", "ecu_type:hvac-gen1", "technique:AT-RD-1"};
    unrelated.text = "firmware leak for an unrelated platform";
    s.ti.push_back(std::move(unrelated));
    return s;
}

void write_truth(std::ostream &out, const Scenario &s) {
    RecordWriter w(out);
    w.section("scenario");
    w.record("scenario", {{"technique", s.technique.empty() ? "benign" : s.technique},
                          {"seed", std::to_string(s.seed)},
                          {"undetectable", s.undetectable ? "true" : "false"}});
    w.section("truth");
    for (const auto &l : s.truth) {
        w.record("label", {{"technique", l.technique}, {"start", std::to_string(l.start)}, {"end", std::to_string(l.end)}});
    }
}

void save_scenario(const std::string &dir, const Scenario &s) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const char *name) {
        std::ofstream out(fs::path(dir) / name);
        if (!out) throw Error("cannot write " + (fs::path(dir) / name).string());
        return out;
    };
    {
        auto out = open("trace.jsonl");
        write_trace(out, s.trace);
    }
    {
        auto out = open("store.txt");
        write_store(out, s.store);
    }
    {
        auto out = open("topology.txt");
        write_topology(out, s.topology);
    }
    {
        auto out = open("ti.jsonl");
        write_ti_feed(out, s.ti);
    }
    {
        auto out = open("truth.txt");
        write_truth(out, s);
    }
}

} // namespace udsmon
