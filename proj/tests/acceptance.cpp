// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "context_table.hpp"
#include "frame_gen.hpp"
#include "slp_oracle.hpp"
#include "udsmon/catalog.hpp"
#include "udsmon/coverage.hpp"
#include "udsmon/digest.hpp"
#include "udsmon/error.hpp"
#include "udsmon/sensing.hpp"
#include "udsmon/simulator.hpp"

using namespace udsmon;
using namespace udsmon::testing;

namespace {

// Pinned tolerances.
constexpr double kStatsBudgetS = 1.0;
constexpr double kCoverageBudgetS = 60.0;
constexpr double kRatioLow = 38.0;
constexpr double kRatioHigh = 56.0;
constexpr std::uint64_t kCoverageSeed = 1;
constexpr int kBenignSeeds = 20;
constexpr int kSlpStreams = 1000;
constexpr std::size_t kSlpMaxEvents = 200;
constexpr int kCodecFrames = 100000;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string &what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char *f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome sid_coverage() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    auto s = catalog_stats(catalog());
    auto text = format_stats_text(s);
    const double dt = seconds_since(t0);
    o.require(s.context_sids == 26 && s.ar_context_sids == 13, "expected 13 of 26");
    o.require(text.find("ar_supported_sids 13 of 26\n") != std::string::npos, "stats line missing");
    o.require(dt < kStatsBudgetS, "runtime " + fmt("%.3f s", dt));
    if (o.pass) o.detail = "13 of 26 in " + fmt("%.4f s", dt);
    return o;
}

Outcome attack_coverage() {
    Outcome o;
    auto s = catalog_stats(catalog());
    o.require(s.ar_full == 20, "full " + std::to_string(s.ar_full));
    o.require(s.ar_partial == 10, "partial " + std::to_string(s.ar_partial));
    const double r = s.ratio_derived();
    o.require(r >= kRatioLow && r <= kRatioHigh, "ratio " + fmt("%.1f%%", r));
    if (o.pass) o.detail = "full 20, partial 10, ratio " + fmt("%.1f%%", r);
    return o;
}

Outcome catalog_fidelity() {
    Outcome o;
    const std::string path = std::string(UDSMON_DATA_DIR) + "/attack_catalog.txt";
    std::ifstream in(path, std::ios::binary);
    std::stringstream file;
    file << in.rdbuf();
    std::stringstream built;
    write_catalog(built, catalog());
    std::set<std::string> tactics;
    for (const auto &t : catalog()) tactics.insert(t.tactic());
    o.require(catalog().size() == 53, "size " + std::to_string(catalog().size()));
    o.require(tactics.size() == 9, "tactics " + std::to_string(tactics.size()));
    o.require(!file.str().empty() && built.str() == file.str(), "catalog differs from " + path);
    auto parsed = load_catalog(path);
    o.require(std::equal(parsed.begin(), parsed.end(), catalog().begin(), catalog().end()), "parsed rows differ");
    if (o.pass) o.detail = "53 techniques, 9 tactics, byte-equal";
    return o;
}

Outcome coverage_matrix() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    auto m = run_coverage(kCoverageSeed, LoggingPolicy::defaults(), default_rules());
    const double dt = seconds_since(t0);
    for (const auto &r : m.rows) o.require(r.pass(), r.technique + " fails");
    o.require(m.rows.size() == 53, "rows " + std::to_string(m.rows.size()));
    for (const auto &r : m.rows) {
        if (r.technique == "AT-DS-14") o.require(r.alerts == 0, "AT-DS-14 raised alerts");
    }
    o.require(dt < kCoverageBudgetS, "runtime " + fmt("%.1f s", dt));
    if (o.pass) o.detail = std::to_string(m.passed()) + " of 53 pass in " + fmt("%.2f s", dt);
    return o;
}

// Seed request plus a rejected key, `attempts` times, 5 s apart. Each frame
// appears on the tester link and, one millisecond later, on the ECM link.
std::vector<UdsExchange> brute_force(int attempts) {
    std::vector<UdsExchange> trace;
    TimestampMs t = sim::kStart;
    auto both_legs = [&](UdsExchange ex) {
        trace.push_back(ex);
        ex.link = "pt";
        ex.timestamp += 1;
        trace.push_back(ex);
    };
    for (int i = 0; i < attempts; ++i) {
        both_legs(exchange({0x27, 0x01}, {0x67, 0x01, 0x12, 0x34}, t, sim::kTester, "ECM", "obd"));
        both_legs(exchange({0x27, 0x02, static_cast<std::uint8_t>(i), 0x00}, {0x7F, 0x27, 0x35}, t + 100,
                           sim::kTester, "ECM", "obd"));
        t += 5000;
    }
    return trace;
}

Outcome brute_force_example() {
    Outcome o;
    auto topology = reference_topology();
    auto run = [&](int attempts) {
        auto events = sense_trace(LoggingPolicy::defaults(), topology, nullptr, brute_force(attempts));
        auto report = run_pipeline(default_rules(), events, nullptr, {});
        return std::make_pair(events, report);
    };
    auto [events, report] = run(10);
    std::map<std::uint64_t, const SecurityEvent *> by_id;
    for (const auto &e : events) by_id[e.id] = &e;
    std::size_t slp = 0;
    for (const auto &a : report.alerts) {
        if (a.strategy != DetectionStrategy::SLP) continue;
        ++slp;
        o.require(a.event_ids.size() == 10, "alert carries " + std::to_string(a.event_ids.size()) + " events");
        for (auto id : a.event_ids) {
            const auto *e = by_id.at(id);
            o.require(e->strategy == Strategy::IR && e->sid == 0x27 && e->autosar_event_id == 103u,
                      "event " + std::to_string(id) + " is not an IR 0x27 event with id 103");
        }
    }
    o.require(slp == 1, std::to_string(slp) + " SLP alerts for 10 attempts");
    o.require(report.alerts.size() == 1, std::to_string(report.alerts.size()) + " alerts for 10 attempts");
    auto nine = run(9).second;
    o.require(nine.alerts.empty(), std::to_string(nine.alerts.size()) + " alerts for 9 attempts");
    if (o.pass) o.detail = "10 attempts: 1 alert over 10 IR events (103); 9 attempts: 0";
    return o;
}

Outcome firmware_example() {
    Outcome o;
    auto scenario = simulate("AT-PS-1", kCoverageSeed);
    auto events = sense_trace(LoggingPolicy::defaults(), scenario.topology, &scenario.store, scenario.trace);
    std::optional<Digest> image;
    std::string ecu;
    for (const auto &e : events) {
        if (e.strategy == Strategy::FE && e.sid == 0x37) {
            image = *std::get_if<Digest>(e.context.find("transfer_hash"));
            ecu = e.ecu_id;
        }
    }
    o.require(image.has_value(), "no transfer exit event");
    if (!image) return o;
    const auto type = scenario.store.vehicle(sim::kVehicle).ecus.at(ecu).ecu_type;
    std::uint32_t latest = 0;
    for (const auto &r : scenario.store.firmware().at(type)) latest = std::max(latest, r.version);

    auto firmware_alerts = [&](const ContextStore &store) {
        auto report = run_pipeline(default_rules(), events, &store, {});
        std::vector<Alert> out;
        for (const auto &a : report.alerts) {
            if (a.rule_id == "clc-firmware") out.push_back(a);
        }
        return out;
    };
    auto unknown = firmware_alerts(scenario.store);
    o.require(unknown.size() == 1 && unknown[0].strategy == DetectionStrategy::CLC, "unregistered image not flagged");

    auto current_store = scenario.store;
    current_store.add_release(type, {latest + 1, *image});
    o.require(firmware_alerts(current_store).empty(), "current image flagged");

    auto older_store = current_store;
    older_store.add_release(type, {latest + 2, hash_text("newer release")});
    auto older = firmware_alerts(older_store);
    o.require(older.size() == 1 && older[0].context_fact.find("downgrade") != std::string::npos,
              "older image not flagged as downgrade");
    if (o.pass) o.detail = "unknown: alert, current: none, older: downgrade";
    return o;
}

Outcome false_positive_floor() {
    Outcome o;
    std::size_t exchanges = 0;
    for (int seed = 0; seed < kBenignSeeds; ++seed) {
        auto s = benign_traffic(static_cast<std::uint64_t>(seed));
        const TimestampMs span = s.trace.back().timestamp - s.trace.front().timestamp;
        o.require(span >= kMinBenignDurationMs, "seed " + std::to_string(seed) + " spans " + std::to_string(span));
        auto run = run_scenario(s, LoggingPolicy::defaults(), default_rules());
        o.require(run.report.alerts.empty(), "seed " + std::to_string(seed) + " raised " +
                                                 std::to_string(run.report.alerts.size()) + " alerts");
        exchanges += s.trace.size();
    }
    if (o.pass) o.detail = "20 seeds, " + std::to_string(exchanges) + " exchanges, 0 alerts";
    return o;
}

Outcome slp_equivalence() {
    Outcome o;
    std::mt19937_64 rng(20240611);
    static const std::set<GroupKey> kGroups[] = {
        {GroupKey::vehicle, GroupKey::ecu}, {GroupKey::vehicle}, {GroupKey::source}, {}};
    std::size_t alerts = 0;
    for (int i = 0; i < kSlpStreams; ++i) {
        auto events = random_stream(rng, kSlpMaxEvents);
        SlpRule rule;
        rule.id = "acceptance";
        rule.match.strategies = {Strategy::IR};
        if (rng() % 2) rule.match.sids = {0x27};
        rule.threshold = 1 + rng() % 12;
        rule.window_ms = 1 + rng() % 90000;
        rule.group_by = kGroups[rng() % 4];
        auto fast = slp_evaluate(rule, events);
        auto slow = slp_oracle(rule, events);
        bool same = fast.size() == slow.size();
        for (std::size_t k = 0; same && k < fast.size(); ++k) same = fast[k].event_ids == slow[k].events;
        o.require(same, "stream " + std::to_string(i) + " disagrees");
        alerts += fast.size();
    }
    if (o.pass) o.detail = "1000 streams, " + std::to_string(alerts) + " alerts identical";
    return o;
}

Outcome codec_properties() {
    Outcome o;
    std::mt19937_64 rng(909);
    for (int i = 0; i < kCodecFrames; ++i) {
        auto req = random_request(rng);
        auto rsp = random_response(rng);
        o.require(parse_request(encode_request(req)) == req, "request roundtrip " + std::to_string(i));
        o.require(parse_response(encode_response(rsp)) == rsp, "response roundtrip " + std::to_string(i));
    }
    auto rejects = [](const std::function<void()> &f, bool want_malformed) {
        try {
            f();
        } catch (const MalformedFrame &) {
            return want_malformed;
        } catch (const NotAResponse &) {
            return !want_malformed;
        }
        return false;
    };
    o.require(rejects([] { parse_request(Bytes{}); }, true), "empty request accepted");
    o.require(rejects([] { parse_response(Bytes{}); }, true), "empty response accepted");
    o.require(rejects([] { parse_response(Bytes{0x7F}); }, true), "short negative accepted");
    o.require(rejects([] { parse_response(Bytes{0x7F, 0x22}); }, true), "short negative accepted");
    o.require(rejects([] { parse_response(Bytes{0x7F, 0x22, 0x31, 0x00}); }, true), "long negative accepted");
    o.require(rejects([] { parse_response(Bytes{0x22, 0xF1}); }, false), "request byte accepted as response");
    if (o.pass) o.detail = "2x" + std::to_string(kCodecFrames) + " frames, 6 malformed cases";
    return o;
}

Outcome field_sets() {
    Outcome o;
    const auto policy = log_everything();
    std::size_t checked = 0;
    for (const auto &d : service_registry()) {
        if (!d.in_context_table) continue;
        const auto &row = context_table().at(d.sid);
        const auto req = sample_request(d.sid);
        auto ir = evaluate_exchange(policy, with_frames(req, {0x7F, d.sid, 0x31}), unlocked());
        auto fe = evaluate_exchange(policy, with_frames(req, {static_cast<std::uint8_t>(d.sid + 0x40)}), unlocked());
        for (auto [events, want, name] : {std::tuple{&ir, &row.ir, "IR"}, std::tuple{&fe, &row.fe, "FE"}}) {
            if (want->empty()) {
                o.require(events->empty(), hex_byte(d.sid) + " " + name + " emitted without a defined row");
                continue;
            }
            ++checked;
            o.require(events->size() == 1 && events->front().context.names() == *want,
                      hex_byte(d.sid) + " " + name + " field set differs");
        }
    }
    if (o.pass) o.detail = std::to_string(checked) + " (sid, strategy) rows exact";
    return o;
}

} // namespace

int main() {
    const std::pair<const char *, std::function<Outcome()>> criteria[] = {
        {"AUTOSAR SID coverage", sid_coverage},
        {"AUTOSAR attack coverage", attack_coverage},
        {"catalog fidelity", catalog_fidelity},
        {"end-to-end coverage matrix", coverage_matrix},
        {"brute-force security access", brute_force_example},
        {"firmware digest check", firmware_example},
        {"false-positive floor", false_positive_floor},
        {"SLP oracle equivalence", slp_equivalence},
        {"codec properties", codec_properties},
        {"context field sets", field_sets},
    };
    int failed = 0;
    int n = 0;
    for (const auto &[name, run] : criteria) {
        ++n;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception &e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
