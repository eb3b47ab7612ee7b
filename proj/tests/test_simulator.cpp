#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "udsmon/catalog.hpp"
#include "udsmon/coverage.hpp"
#include "udsmon/digest.hpp"
#include "udsmon/error.hpp"
#include "udsmon/sensing.hpp"
#include "udsmon/simulator.hpp"

using namespace udsmon;

namespace {

std::vector<SecurityEvent> sense(const Scenario &s) {
    return sense_trace(LoggingPolicy::defaults(), s.topology, &s.store, s.trace);
}

} // namespace

TEST(Simulator, DeterministicPerSeed) {
    for (const auto &t : catalog()) {
        EXPECT_EQ(simulate(t.id, 42), simulate(t.id, 42)) << t.id;
        auto s = simulate(t.id, 42);
        EXPECT_EQ(s.technique, t.id);
        for (std::size_t i = 1; i < s.trace.size(); ++i) ASSERT_LE(s.trace[i - 1].timestamp, s.trace[i].timestamp);
        for (const auto &iv : s.truth) EXPECT_LT(iv.start, iv.end) << t.id;
    }
    EXPECT_EQ(benign_traffic(3), benign_traffic(3));
    EXPECT_NE(benign_traffic(3).trace, benign_traffic(4).trace);
}

TEST(Simulator, BruteForceScenario) {
    auto s = simulate("AT-PE-4", 1);
    std::size_t failures = 0;
    for (const auto &e : sense(s)) {
        if (e.strategy == Strategy::IR && e.sid == 0x27) {
            ++failures;
            EXPECT_EQ(e.autosar_event_id, 103u);
        }
    }
    EXPECT_GE(failures, 10u);
}

TEST(Simulator, ReconnaissanceHasNoTraffic) {
    auto s = simulate("AT-RD-1", 1);
    EXPECT_TRUE(s.trace.empty());
    ASSERT_EQ(s.ti.size(), 1u);
    EXPECT_TRUE(s.ti[0].tags.contains("technique:AT-RD-1"));
}

TEST(Simulator, ResetOutsideMaintenance) {
    auto s = simulate("AT-AF-14", 1);
    bool reset_outside = false;
    for (const auto &ex : s.trace) {
        if (ex.request.sid == 0x11 && !s.store.in_maintenance(sim::kVehicle, ex.timestamp)) reset_outside = true;
    }
    EXPECT_TRUE(reset_outside);
}

TEST(Simulator, EavesdroppingIsUndetectable) {
    auto s = simulate("AT-DS-14", 1);
    EXPECT_TRUE(s.undetectable);
    auto run = run_scenario(s, LoggingPolicy::defaults(), default_rules());
    EXPECT_TRUE(run.report.alerts.empty());
}

TEST(Simulator, DidExtractionReadsSensitiveDid) {
    auto s = simulate("AT-CL-3", 1);
    bool sensitive = false;
    for (const auto &ex : s.trace) {
        if (ex.request.sid != 0x22) continue;
        for (std::size_t i = 0; i + 1 < ex.request.payload.size(); i += 2) {
            auto did = static_cast<std::uint16_t>(ex.request.payload[i] << 8 | ex.request.payload[i + 1]);
            sensitive = sensitive || s.store.sensitive().is_sensitive_did(did);
        }
    }
    EXPECT_TRUE(sensitive);
}

TEST(Simulator, CustomPackageDigestIsUnregistered) {
    auto s = simulate("AT-PS-1", 1);
    bool unknown = false;
    for (const auto &e : sense(s)) {
        if (e.sid != 0x37 || e.strategy != Strategy::FE) continue;
        const auto *h = std::get_if<Digest>(e.context.find("transfer_hash"));
        ASSERT_NE(h, nullptr);
        auto type = s.store.vehicle(sim::kVehicle).ecus.at(e.ecu_id).ecu_type;
        unknown = unknown || s.store.firmware_known(type, *h) == FirmwareStatus::unknown;
    }
    EXPECT_TRUE(unknown);
}

TEST(Simulator, SeedHarvestSendsNoKeys) {
    auto s = simulate("AT-DS-5", 1);
    std::size_t seeds = 0, keys = 0;
    for (const auto &ex : s.trace) {
        if (ex.request.sid != 0x27 || !ex.request.subfunction) continue;
        (*ex.request.subfunction % 2 ? seeds : keys) += 1;
    }
    EXPECT_GE(seeds, 3u);
    EXPECT_EQ(keys, 0u);
}

TEST(Simulator, Errors) {
    EXPECT_THROW(simulate("AT-XX-9", 1), LookupError);
    EXPECT_THROW(benign_traffic(1, kMinBenignDurationMs - 1), PreconditionError);
    auto b = benign_traffic(1, kMinBenignDurationMs);
    EXPECT_TRUE(b.truth.empty());
    EXPECT_GE(b.trace.back().timestamp - b.trace.front().timestamp, kMinBenignDurationMs - 10000);
}

TEST(Simulator, SaveScenarioWritesFiles) {
    auto dir = std::filesystem::temp_directory_path() / "udsmon_sim_test";
    std::filesystem::remove_all(dir);
    auto s = simulate("AT-CL-3", 7);
    save_scenario(dir.string(), s);
    for (const char *f : {"trace.jsonl", "store.txt", "topology.txt", "ti.jsonl", "truth.txt"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    EXPECT_EQ(load_trace((dir / "trace.jsonl").string()), s.trace);
    EXPECT_EQ(load_store((dir / "store.txt").string()), s.store);
    std::filesystem::remove_all(dir);
}

TEST(Coverage, AllTechniquesPass) {
    auto m = run_coverage(1, LoggingPolicy::defaults(), default_rules());
    EXPECT_EQ(m.rows.size(), 53u);
    for (const auto &r : m.rows) EXPECT_TRUE(r.pass()) << r.technique;
    EXPECT_TRUE(m.benign.pass());
    EXPECT_TRUE(m.all_pass());
    EXPECT_EQ(format_coverage_json(m), format_coverage_json(run_coverage(1, LoggingPolicy::defaults(), default_rules())));
}

TEST(Coverage, VerdictFailsWithoutRules) {
    auto s = simulate("AT-PE-4", 1);
    auto row = evaluate_coverage(find_technique("AT-PE-4"), s, run_scenario(s, LoggingPolicy::defaults(), RuleSet{}));
    EXPECT_TRUE(row.logging_pass);
    EXPECT_FALSE(row.detection_pass);
    EXPECT_FALSE(row.pass());
}
