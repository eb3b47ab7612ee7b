#pragma once

// Coverage matrix: every catalog technique is simulated, sensed and run
// through detection, then observed strategies are compared with the
// expected ones.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "udsmon/catalog.hpp"
#include "udsmon/detection.hpp"
#include "udsmon/sensing.hpp"
#include "udsmon/simulator.hpp"

namespace udsmon {

struct ScenarioRun {
    std::vector<SecurityEvent> events;
    AlertReport report;
};

// The store's sensitive registry stands in for the policy's when the policy
// has none of its own.
ScenarioRun run_scenario(const Scenario &scenario, const LoggingPolicy &policy, const RuleSet &rules);

struct CoverageRow {
    std::string technique;
    std::set<Strategy> expected_logging;
    bool logging_na = false;
    bool logging_various = false;
    std::set<Strategy> observed_logging; // events inside the truth intervals
    std::set<DetectionStrategy> expected_detection;
    bool detection_na = false;
    std::set<DetectionStrategy> observed_detection; // alerts tagged with the technique
    std::set<Stage> stages;
    std::size_t events = 0;
    std::size_t events_in_truth = 0;
    std::size_t alerts = 0;
    bool logging_pass = false;
    bool detection_pass = false;

    bool pass() const { return logging_pass && detection_pass; }
};

CoverageRow evaluate_coverage(const AttackTechnique &technique, const Scenario &scenario, const ScenarioRun &run);

struct BenignRow {
    std::uint64_t seed = 0;
    TimestampMs duration_ms = 0;
    std::size_t exchanges = 0;
    std::size_t events = 0;
    std::size_t ir_events = 0;
    std::vector<std::string> alert_rules;

    bool pass() const { return alert_rules.empty(); }
};

BenignRow evaluate_benign(const Scenario &scenario, const ScenarioRun &run);

struct CoverageMatrix {
    std::uint64_t seed = 0;
    std::vector<CoverageRow> rows; // catalog order
    BenignRow benign;
    CatalogStats stats;

    std::size_t passed() const;
    bool all_pass() const { return passed() == rows.size() && benign.pass(); }
};

CoverageMatrix run_coverage(std::uint64_t seed, const LoggingPolicy &policy, const RuleSet &rules);

std::string format_coverage_text(const CoverageMatrix &m);
std::string format_coverage_json(const CoverageMatrix &m);

} // namespace udsmon
