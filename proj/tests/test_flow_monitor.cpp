#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "test_support.hpp"
#include "udsmon/error.hpp"
#include "udsmon/flow_monitor.hpp"
#include "udsmon/sensing.hpp"
#include "udsmon/simulator.hpp"

using namespace udsmon;
using udsmon::testing::exchange;

namespace {

Topology two_link() {
    Topology t;
    t.vehicle_id = "V";
    t.add_link("obd");
    t.add_link("pt");
    t.add_ecu({"ECM", "pt", 0x1001});
    t.add_ecu({"TCU", "pt", 0x1003});
    t.add_route("obd", "pt");
    t.add_source(0x0E80, "obd");
    t.permit("ECM", std::nullopt, {0x0E80});
    return t;
}

// Brute-force run count: scan back from each challenge to the last proof or
// emitted event of the same (source, sid).
std::size_t oracle_bad_sequences(const std::vector<UdsExchange> &w, std::size_t k) {
    auto role = [](const UdsRequest &r) {
        if (!r.subfunction) return 0;
        auto sf = *r.subfunction & 0x7F;
        if (r.sid == 0x27) return sf == 0 ? 0 : (sf % 2 ? 1 : 2);
        if (r.sid == 0x29) {
            if (sf == 1 || sf == 2 || sf == 5) return 1;
            if (sf == 3 || sf == 6 || sf == 7) return 2;
        }
        return 0;
    };
    std::vector<bool> emitted(w.size(), false);
    std::size_t count = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (role(w[i].request) != 1) continue;
        std::size_t run = 0;
        for (std::size_t j = i + 1; j-- > 0;) {
            if (w[j].source != w[i].source || w[j].request.sid != w[i].request.sid) continue;
            int r = role(w[j].request);
            if (r == 2 || (j != i && emitted[j])) break;
            if (r == 1) ++run;
        }
        if (run >= k) {
            emitted[i] = true;
            ++count;
        }
    }
    return count;
}

} // namespace

TEST(Topology, Lookups) {
    auto t = two_link();
    t.permit("ECM", 0x22, {0x0E80, 0x1003});
    EXPECT_EQ(t.permitted_sources("ECM", 0x22), (std::set<SourceAddress>{0x0E80, 0x1003}));
    EXPECT_EQ(t.permitted_sources("ECM", 0x10), (std::set<SourceAddress>{0x0E80}));
    EXPECT_TRUE(t.permitted_sources("TCU", 0x10).empty());
    EXPECT_EQ(t.home_link(0x0E80), "obd");
    EXPECT_EQ(t.home_link(0x1003), "pt");
    EXPECT_FALSE(t.home_link(0x7777));
    EXPECT_THROW(t.ecu("XYZ"), TopologyError);
    EXPECT_THROW(t.add_ecu({"BCM", "body", 1}), TopologyError);
}

TEST(Topology, FileRoundtrip) {
    auto t = reference_topology();
    std::stringstream ss;
    write_topology(ss, t);
    EXPECT_EQ(read_topology(ss, "mem"), t);
    std::stringstream bad;
    bad << "[ecus]\necu id=ECM link=nowhere address=0x10\n";
    EXPECT_THROW(read_topology(bad, "t.txt"), ParseError);
}

TEST(CheckSource, Examples) {
    auto t = two_link();
    EXPECT_FALSE(check_source(t, exchange({0x10, 0x03}, {}, 1, 0x0E80)));
    auto ev = check_source(t, exchange({0x34, 0x00, 0x44}, {}, 1, 0x1003));
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->kind, MfiKind::unexpected_source);
    EXPECT_EQ(ev->observed_origin, 0x1003);
    EXPECT_FALSE(ev->expected_origins.contains(0x1003));
    // TCU has no permitted sources at all.
    EXPECT_TRUE(check_source(t, exchange({0x10, 0x01}, {}, 1, 0x0E80, "TCU")));
    EXPECT_THROW(check_source(t, exchange({0x10, 0x01}, {}, 1, 0x0E80, "XYZ")), TopologyError);
}

TEST(CheckSource, MonotoneInPermissions) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        auto small = two_link();
        std::set<SourceAddress> base;
        for (int i = 0; i < 3; ++i) base.insert(static_cast<SourceAddress>(rng() % 8));
        small.permit("ECM", 0x22, base);
        auto large = small;
        auto wider = base;
        for (int i = 0; i < 3; ++i) wider.insert(static_cast<SourceAddress>(rng() % 8));
        large.permit("ECM", 0x22, wider);
        for (SourceAddress s = 0; s < 8; ++s) {
            auto ex = exchange({0x22, 0xF1, 0x90}, {}, 1, s);
            if (!check_source(small, ex)) { ASSERT_FALSE(check_source(large, ex)); }
            ASSERT_EQ(check_source(large, ex).has_value(), !wider.contains(s));
        }
    }
}

TEST(CheckRouting, Examples) {
    auto t = two_link();
    auto up = exchange({0x22, 0xF1, 0x90}, {0x62, 0xF1, 0x90, 0x01}, 10, 0x0E80, "ECM", "obd");
    auto down = up;
    down.link = "pt";
    down.timestamp = 11;
    EXPECT_FALSE(check_routing(t, up, down));

    auto altered = down;
    altered.request.payload[1] = 0xA0;
    auto ev = check_routing(t, up, altered);
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->kind, MfiKind::modified_in_transit);

    auto orphan = check_routing(t, std::nullopt, down);
    ASSERT_TRUE(orphan);
    EXPECT_EQ(orphan->kind, MfiKind::routed_without_original);
}

TEST(CorrelateRoutes, PairingWindowMatchesExhaustiveSearch) {
    auto t = two_link();
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<UdsExchange> trace;
        TimestampMs now = 0;
        std::size_t orphans = 0;
        for (int i = 0; i < 20; ++i) {
            now += 100 + rng() % 3000;
            auto did = static_cast<std::uint8_t>(rng());
            auto up = exchange({0x22, 0xF1, did}, {}, now, 0x0E80, "ECM", "obd");
            const bool drop_original = rng() % 5 == 0;
            if (!drop_original) trace.push_back(up);
            auto down = up;
            down.link = "pt";
            down.timestamp = now + rng() % 2500;
            // Exhaustive oracle: an original exists iff it was kept and the
            // delay is within the pairing window.
            if (drop_original || down.timestamp - now > kRoutingPairWindowMs) ++orphans;
            trace.push_back(down);
            now = down.timestamp;
        }
        std::stable_sort(trace.begin(), trace.end(), [](auto &a, auto &b) { return a.timestamp < b.timestamp; });
        auto events = correlate_routes(t, trace);
        ASSERT_EQ(events.size(), orphans);
        for (const auto &e : events) ASSERT_EQ(e.kind, MfiKind::routed_without_original);
    }
}

TEST(CorrelateRoutes, FaithfulGatewayIsSilent) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto benign = benign_traffic(seed);
        EXPECT_TRUE(correlate_routes(benign.topology, benign.trace).empty()) << seed;
    }
    auto t = two_link();
    std::vector<UdsExchange> unsorted{exchange({0x10, 0x01}, {}, 5, 0x0E80, "ECM", "obd"),
                                      exchange({0x10, 0x01}, {}, 4, 0x0E80, "ECM", "pt")};
    EXPECT_THROW(correlate_routes(t, unsorted), PreconditionError);
}

TEST(CheckSequence, Examples) {
    std::vector<UdsExchange> pairs{exchange({0x27, 0x01}, {}, 1), exchange({0x27, 0x02, 1}, {}, 2),
                                   exchange({0x27, 0x01}, {}, 3), exchange({0x27, 0x02, 1}, {}, 4)};
    EXPECT_TRUE(check_sequence(pairs).empty());

    std::vector<UdsExchange> seeds;
    for (int i = 0; i < 5; ++i) seeds.push_back(exchange({0x27, 0x01}, {}, static_cast<TimestampMs>(i)));
    auto events = check_sequence(seeds, {3});
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(events[0].kind, MfiKind::bad_sequence);

    seeds.resize(2);
    EXPECT_TRUE(check_sequence(seeds, {3}).empty());

    std::vector<UdsExchange> challenges;
    for (int i = 0; i < 3; ++i) challenges.push_back(exchange({0x29, 0x05, 0x00}, {}, static_cast<TimestampMs>(i)));
    EXPECT_EQ(check_sequence(challenges).size(), 1u);

    std::vector<UdsExchange> unsorted{exchange({0x27, 0x01}, {}, 5), exchange({0x27, 0x01}, {}, 4)};
    EXPECT_THROW(check_sequence(unsorted), PreconditionError);
}

TEST(CheckSequence, MatchesBruteForce) {
    std::mt19937_64 rng(17);
    static const std::vector<Bytes> kRequests{{0x27, 0x01}, {0x27, 0x02, 0x00}, {0x27, 0x03}, {0x29, 0x05, 0x00},
                                              {0x29, 0x03, 0x00}, {0x22, 0xF1, 0x90}, {0x29, 0x01}};
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<UdsExchange> w;
        TimestampMs t = 0;
        std::size_t n = rng() % 60;
        for (std::size_t i = 0; i < n; ++i) {
            UdsExchange ex;
            ex.request = parse_request(kRequests[rng() % kRequests.size()]);
            ex.timestamp = t += rng() % 50;
            ex.source = static_cast<SourceAddress>(rng() % 3);
            ex.target_ecu = "ECM";
            w.push_back(ex);
        }
        std::size_t k = 1 + rng() % 5;
        ASSERT_EQ(check_sequence(w, {k}).size(), oracle_bad_sequences(w, k)) << trial;
    }
}

TEST(MfiEnvelope, Quadruple) {
    MfiEvent m;
    m.kind = MfiKind::unexpected_source;
    m.sid = 0x10;
    m.target_ecu = "ECM";
    m.observed_origin = 0x1003;
    m.expected_origins = {0x0E80};
    auto ev = to_security_event(m);
    EXPECT_EQ(ev.strategy, Strategy::MFI);
    EXPECT_EQ(ev.context.names(), (std::vector<std::string>{"sid", "target_ecu", "observed_origin", "expected_origin"}));
    EXPECT_EQ(ev.mfi_kind, MfiKind::unexpected_source);
}

TEST(Sensing, ForeignSourceProducesMfi) {
    auto t = reference_topology();
    std::vector<UdsExchange> trace{exchange({0x10, 0x03}, {0x50, 0x03, 0, 0x32, 1, 0xF4}, 10, sim::kTcu, "ECM", "body"),
                                   exchange({0x10, 0x03}, {0x50, 0x03, 0, 0x32, 1, 0xF4}, 11, sim::kTcu, "ECM", "pt")};
    auto events = sense_trace(LoggingPolicy::defaults(), t, nullptr, trace);
    std::set<Strategy> seen;
    for (const auto &e : events) seen.insert(e.strategy);
    EXPECT_EQ(seen, (std::set<Strategy>{Strategy::FE, Strategy::MFI}));
    for (std::size_t i = 0; i < events.size(); ++i) {
        EXPECT_EQ(events[i].id, i + 1);
        EXPECT_EQ(events[i].vehicle_id, sim::kVehicle);
    }
}
