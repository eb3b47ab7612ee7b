#include "udsmon/coverage.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace udsmon {

namespace {

template <typename T>
std::string set_text(const std::set<T> &items) {
    if (items.empty()) return "-";
    std::string out;
    for (const auto &i : items) {
        if (!out.empty()) out += ",";
        out += to_string(i);
    }
    return out;
}

template <typename T>
nlohmann::ordered_json set_json(const std::set<T> &items) {
    auto out = nlohmann::ordered_json::array();
    for (const auto &i : items) out.push_back(std::string(to_string(i)));
    return out;
}

bool tagged(const Alert &a, const std::string &technique) {
    return std::find(a.techniques.begin(), a.techniques.end(), technique) != a.techniques.end();
}

} // namespace

ScenarioRun run_scenario(const Scenario &scenario, const LoggingPolicy &policy, const RuleSet &rules) {
    LoggingPolicy effective = policy;
    if (effective.sensitive.empty()) effective.sensitive = scenario.store.sensitive();
    ScenarioRun run;
    run.events = sense_trace(effective, scenario.topology, &scenario.store, scenario.trace);
    run.report = run_pipeline(rules, run.events, &scenario.store, scenario.ti);
    return run;
}

CoverageRow evaluate_coverage(const AttackTechnique &t, const Scenario &scenario, const ScenarioRun &run) {
    CoverageRow row;
    row.technique = t.id;
    row.expected_logging.insert(t.logging.begin(), t.logging.end());
    row.logging_na = t.logging_na;
    row.logging_various = t.logging_various;
    row.expected_detection.insert(t.detection.begin(), t.detection.end());
    row.detection_na = t.detection_na;
    row.events = run.events.size();
    row.alerts = run.report.alerts.size();

    for (const auto &ev : run.events) {
        bool inside = std::any_of(scenario.truth.begin(), scenario.truth.end(),
                                  [&](const LabelInterval &l) { return l.contains(ev.timestamp); });
        if (!inside) continue;
        ++row.events_in_truth;
        row.observed_logging.insert(ev.strategy);
    }
    for (const auto &a : run.report.alerts) {
        if (!tagged(a, t.id)) continue;
        row.observed_detection.insert(a.strategy);
        row.stages.insert(a.stage);
    }

    if (row.logging_na) {
        row.logging_pass = row.events_in_truth == 0;
    } else if (row.logging_various) {
        row.logging_pass = row.events_in_truth > 0;
    } else {
        row.logging_pass = std::includes(row.observed_logging.begin(), row.observed_logging.end(),
                                         row.expected_logging.begin(), row.expected_logging.end());
    }
    if (row.detection_na) {
        row.detection_pass = run.report.alerts.empty();
    } else {
        row.detection_pass = std::includes(row.observed_detection.begin(), row.observed_detection.end(),
                                           row.expected_detection.begin(), row.expected_detection.end());
    }
    return row;
}

BenignRow evaluate_benign(const Scenario &scenario, const ScenarioRun &run) {
    BenignRow row;
    row.seed = scenario.seed;
    if (!scenario.trace.empty()) row.duration_ms = scenario.trace.back().timestamp - scenario.trace.front().timestamp;
    row.exchanges = scenario.trace.size();
    row.events = run.events.size();
    row.ir_events = static_cast<std::size_t>(
        std::count_if(run.events.begin(), run.events.end(), [](const auto &e) { return e.strategy == Strategy::IR; }));
    for (const auto &a : run.report.alerts) row.alert_rules.push_back(a.rule_id);
    return row;
}

std::size_t CoverageMatrix::passed() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto &r) { return r.pass(); }));
}

CoverageMatrix run_coverage(std::uint64_t seed, const LoggingPolicy &policy, const RuleSet &rules) {
    CoverageMatrix m;
    m.seed = seed;
    for (const auto &t : catalog()) {
        auto scenario = simulate(t.id, seed);
        m.rows.push_back(evaluate_coverage(t, scenario, run_scenario(scenario, policy, rules)));
    }
    auto benign = benign_traffic(seed);
    m.benign = evaluate_benign(benign, run_scenario(benign, policy, rules));
    m.stats = catalog_stats(catalog());
    return m;
}

std::string format_coverage_text(const CoverageMatrix &m) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %-12s %-12s %-12s %-12s %-12s %s\n", "technique", "log_expect", "log_seen",
                  "det_expect", "det_seen", "stages", "verdict");
    out << buf;
    for (const auto &r : m.rows) {
        std::string log_expect = r.logging_na ? "NA" : r.logging_various ? "Various" : set_text(r.expected_logging);
        std::string det_expect = r.detection_na ? "NA" : set_text(r.expected_detection);
        std::snprintf(buf, sizeof buf, "%-10s %-12s %-12s %-12s %-12s %-12s %s\n", r.technique.c_str(),
                      log_expect.c_str(), set_text(r.observed_logging).c_str(), det_expect.c_str(),
                      set_text(r.observed_detection).c_str(), set_text(r.stages).c_str(), r.pass() ? "pass" : "FAIL");
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "benign seed=%llu exchanges=%zu events=%zu ir=%zu alerts=%zu verdict=%s\n",
                  static_cast<unsigned long long>(m.benign.seed), m.benign.exchanges, m.benign.events,
                  m.benign.ir_events, m.benign.alert_rules.size(), m.benign.pass() ? "pass" : "FAIL");
    out << "\n" << buf;
    std::snprintf(buf, sizeof buf, "passed %zu of %zu\n", m.passed(), m.rows.size());
    out << buf << "\n" << format_stats_text(m.stats);
    return out.str();
}

std::string format_coverage_json(const CoverageMatrix &m) {
    nlohmann::ordered_json j;
    j["seed"] = m.seed;
    auto rows = nlohmann::ordered_json::array();
    for (const auto &r : m.rows) {
        nlohmann::ordered_json o;
        o["technique"] = r.technique;
        o["expected_logging"] = r.logging_na ? nlohmann::ordered_json("NA")
                                : r.logging_various ? nlohmann::ordered_json("Various")
                                                    : set_json(r.expected_logging);
        o["observed_logging"] = set_json(r.observed_logging);
        o["expected_detection"] = r.detection_na ? nlohmann::ordered_json("NA") : set_json(r.expected_detection);
        o["observed_detection"] = set_json(r.observed_detection);
        o["stages"] = set_json(r.stages);
        o["events"] = r.events;
        o["events_in_truth"] = r.events_in_truth;
        o["alerts"] = r.alerts;
        o["verdict"] = r.pass() ? "pass" : "fail";
        rows.push_back(std::move(o));
    }
    j["rows"] = std::move(rows);
    nlohmann::ordered_json b;
    b["seed"] = m.benign.seed;
    b["exchanges"] = m.benign.exchanges;
    b["events"] = m.benign.events;
    b["ir_events"] = m.benign.ir_events;
    b["alert_rules"] = m.benign.alert_rules;
    b["verdict"] = m.benign.pass() ? "pass" : "fail";
    j["benign"] = std::move(b);
    nlohmann::ordered_json s;
    s["ar_supported_sids"] = m.stats.ar_context_sids;
    s["context_sids"] = m.stats.context_sids;
    s["techniques"] = m.stats.techniques;
    s["ar_full"] = m.stats.ar_full;
    s["ar_partial"] = m.stats.ar_partial;
    s["ratio_lower"] = m.stats.ratio_lower();
    s["ratio_upper"] = m.stats.ratio_upper();
    s["ratio_derived"] = m.stats.ratio_derived();
    s["detectable"] = m.stats.detectable;
    j["stats"] = std::move(s);
    j["passed"] = m.passed();
    return j.dump(2) + "\n";
}

} // namespace udsmon
