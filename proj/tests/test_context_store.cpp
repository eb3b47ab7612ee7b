#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "udsmon/context_store.hpp"
#include "udsmon/digest.hpp"
#include "udsmon/error.hpp"
#include "udsmon/simulator.hpp"

using namespace udsmon;

namespace {

ContextStore small_store() {
    ContextStore s;
    VehicleRecord v;
    v.vehicle_id = "V1";
    v.model = "M";
    v.ecus["ECM"] = {"ecm", EcuMode::production};
    v.add_maintenance({100, 200, "W1"});
    v.add_maintenance({500, 650, "W2"});
    s.add_vehicle(v);
    s.add_release("ecm", {1, hash_text("v1")});
    s.add_release("ecm", {2, hash_text("v2")});
    s.add_release("ecm", {3, hash_text("v3")});
    return s;
}

} // namespace

TEST(Digest, FixedLengthAndDeterministic) {
    EXPECT_EQ(hash_payload(Bytes{}), hash_payload(Bytes{}));
    EXPECT_EQ(digest_hex(hash_payload(Bytes{})),
              "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(parse_digest(digest_hex(hash_text("abc"))), hash_text("abc"));
    EXPECT_NE(hash_payload(firmware_image("ecm-gen3", 1)), hash_payload(firmware_image("ecm-gen3", 2)));
}

TEST(Maintenance, HalfOpen) {
    auto s = small_store();
    EXPECT_TRUE(s.in_maintenance("V1", 150));
    EXPECT_TRUE(s.in_maintenance("V1", 100));
    EXPECT_FALSE(s.in_maintenance("V1", 200));
    EXPECT_FALSE(s.in_maintenance("V1", 99));
    EXPECT_THROW(s.in_maintenance("nope", 1), LookupError);
}

TEST(Maintenance, MatchesLinearScan) {
    std::mt19937_64 rng(3);
    VehicleRecord v;
    v.vehicle_id = "V";
    std::vector<MaintenanceWindow> windows;
    TimestampMs t = 0;
    for (int i = 0; i < 30; ++i) {
        t += rng() % 500;
        MaintenanceWindow w{t, t + 1 + rng() % 300, ""};
        t = w.end;
        windows.push_back(w);
    }
    std::shuffle(windows.begin(), windows.end(), rng);
    for (const auto &w : windows) v.add_maintenance(w);
    ContextStore s;
    s.add_vehicle(v);
    for (int i = 0; i < 1000; ++i) {
        TimestampMs q = rng() % (t + 100);
        bool expected = false;
        for (const auto &w : windows) expected = expected || (q >= w.start && q < w.end);
        ASSERT_EQ(s.in_maintenance("V", q), expected) << q;
    }
}

TEST(Maintenance, OverlapRejected) {
    VehicleRecord v;
    v.add_maintenance({100, 200, ""});
    EXPECT_THROW(v.add_maintenance({150, 250, ""}), PreconditionError);
    EXPECT_THROW(v.add_maintenance({50, 101, ""}), PreconditionError);
    EXPECT_THROW(v.add_maintenance({300, 250, ""}), PreconditionError);
    v.add_maintenance({200, 300, ""});
    EXPECT_EQ(v.maintenance.size(), 2u);
}

TEST(Firmware, Classification) {
    auto s = small_store();
    EXPECT_EQ(s.firmware_known("ecm", hash_text("v3")), FirmwareStatus::authorized_current);
    EXPECT_EQ(s.firmware_known("ecm", hash_text("v1")), FirmwareStatus::authorized_older);
    EXPECT_EQ(s.firmware_known("ecm", hash_text("v2")), FirmwareStatus::authorized_older);
    EXPECT_EQ(s.firmware_known("ecm", hash_text("other")), FirmwareStatus::unknown);
    EXPECT_THROW(s.firmware_known("bcm", hash_text("v1")), LookupError);
    EXPECT_THROW(s.add_release("ecm", {2, hash_text("v2b")}), PreconditionError);
    EXPECT_THROW(s.add_release("ecm", {4, hash_text("v3")}), PreconditionError);
}

TEST(Firmware, SingleCurrentDigest) {
    auto s = simulate("AT-PS-1", 1).store;
    for (const auto &[type, releases] : s.firmware()) {
        std::size_t current = 0;
        for (const auto &r : releases) {
            if (s.firmware_known(type, r.digest) == FirmwareStatus::authorized_current) ++current;
        }
        EXPECT_EQ(current, 1u) << type;
    }
}

TEST(Sensitive, MemoryOverlap) {
    SensitiveRegistry r;
    r.add_memory({0x1008, 0x1FFF - 0x1008 + 1, "keys"});
    EXPECT_TRUE(r.overlaps_sensitive_memory(0x1000, 0x10));
    EXPECT_FALSE(r.overlaps_sensitive_memory(0x1000, 0x8));
    EXPECT_FALSE(r.overlaps_sensitive_memory(0x1010, 0));
    EXPECT_FALSE(r.overlaps_sensitive_memory(0x2000, 0x10));
    EXPECT_TRUE(r.overlaps_sensitive_memory(0x1FFF, 1));
}

TEST(Sensitive, OverlapMatchesArithmetic) {
    std::mt19937_64 rng(9);
    SensitiveRegistry r;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
    for (int i = 0; i < 12; ++i) {
        std::uint64_t a = rng() % 10000, n = 1 + rng() % 400;
        raw.push_back({a, n});
        r.add_memory({a, n, ""});
    }
    for (std::size_t i = 1; i < r.memory().size(); ++i) {
        EXPECT_LT(r.memory()[i - 1].end(), r.memory()[i].addr);
    }
    for (int i = 0; i < 2000; ++i) {
        std::uint64_t a = rng() % 11000, n = rng() % 300;
        bool expected = false;
        for (auto [ra, rn] : raw) expected = expected || (n > 0 && a < ra + rn && ra < a + n);
        ASSERT_EQ(r.overlaps_sensitive_memory(a, n), expected);
    }
}

TEST(Sensitive, Paths) {
    SensitiveRegistry r;
    r.add_path_prefix("/secure/", "");
    EXPECT_TRUE(r.is_sensitive_path("/secure/keys.bin"));
    EXPECT_FALSE(r.is_sensitive_path("/log/a"));
    EXPECT_THROW(r.add_path_prefix("", ""), PreconditionError);
}

TEST(Timeline, StateAt) {
    ContextStore s = small_store();
    s.add_sample("V1", {100, 0, EcuMode::production, false, std::nullopt});
    s.add_sample("V1", {200, 80, EcuMode::production, false, std::nullopt});
    EXPECT_FALSE(s.state_at("V1", 99));
    EXPECT_EQ(s.state_at("V1", 150)->speed_kph, 0u);
    EXPECT_EQ(s.state_at("V1", 200)->speed_kph, 80u);
    EXPECT_THROW(s.add_sample("V1", {200, 1, EcuMode::production, false, std::nullopt}), PreconditionError);
    EXPECT_EQ(s.vehicle_of_ecu("ECM"), "V1");
    EXPECT_FALSE(s.vehicle_of_ecu("XYZ"));
}

TEST(StoreFile, Roundtrip) {
    auto store = simulate("AT-LM-1", 5).store;
    std::stringstream ss;
    write_store(ss, store);
    EXPECT_EQ(read_store(ss, "mem"), store);

    auto benign = benign_traffic(2).store;
    std::stringstream again;
    write_store(again, benign);
    EXPECT_EQ(read_store(again, "mem"), benign);
}

TEST(StoreFile, EmptyAndErrors) {
    std::stringstream empty;
    auto s = read_store(empty, "empty");
    EXPECT_TRUE(s.vehicles().empty());
    EXPECT_TRUE(s.sensitive().empty());

    std::stringstream corrupt;
    corrupt << "[vehicles]\nvehicle id=V model=M\nmaintenance vehicle=V start=200 end=100\n";
    try {
        read_store(corrupt, "s.txt");
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 3u);
    }

    std::stringstream section;
    section << "[nonsense]\nx a=1\n";
    EXPECT_THROW(read_store(section, "s.txt"), ParseError);
    EXPECT_THROW(load_store("/nonexistent/store.txt"), ParseError);
}
