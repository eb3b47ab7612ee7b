// udsmon: replay traces through sensing and detection, simulate catalog
// techniques, and print the coverage matrix and catalog statistics.
//
// Exit codes: 0 success, 1 usage error, 2 parse or I/O error, 3 coverage failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "udsmon/catalog.hpp"
#include "udsmon/coverage.hpp"
#include "udsmon/detection.hpp"
#include "udsmon/error.hpp"
#include "udsmon/sensing.hpp"
#include "udsmon/simulator.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kParse = 2;
constexpr int kCoverageFailure = 3;

struct Options {
    std::uint64_t seed = 1;
    std::string policy;
    std::string rules;
    std::string store;
    std::string topology;
    std::string ti;
    std::string out;
    std::string format = "text";
    std::string trace;
    std::string technique;
};

udsmon::LoggingPolicy policy_of(const Options &o) {
    return o.policy.empty() ? udsmon::LoggingPolicy::defaults() : udsmon::load_policy(o.policy);
}

udsmon::RuleSet rules_of(const Options &o) {
    return o.rules.empty() ? udsmon::default_rules() : udsmon::load_rules(o.rules);
}

void emit(const Options &o, const std::string &text) {
    if (o.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(o.out);
    if (!f) throw udsmon::Error("cannot write " + o.out);
    f << text;
}

int cmd_replay(const Options &o) {
    auto policy = policy_of(o);
    auto rules = rules_of(o);
    std::optional<udsmon::ContextStore> store;
    if (!o.store.empty()) store = udsmon::load_store(o.store);
    auto topology = o.topology.empty() ? udsmon::reference_topology() : udsmon::load_topology(o.topology);
    std::vector<udsmon::ThreatIntelItem> ti;
    if (!o.ti.empty()) ti = udsmon::load_ti_feed(o.ti);
    auto trace = udsmon::load_trace(o.trace);
    if (store && policy.sensitive.empty()) policy.sensitive = store->sensitive();

    const udsmon::ContextStore *ctx = store ? &*store : nullptr;
    auto events = udsmon::sense_trace(policy, topology, ctx, trace);
    auto report = udsmon::run_pipeline(rules, events, ctx, ti);
    emit(o, o.format == "json" ? udsmon::format_report_json(report) : udsmon::format_report_text(report));
    return 0;
}

int cmd_simulate(const Options &o) {
    if (o.out.empty()) throw CLI::ValidationError("--out", "simulate needs an output directory");
    auto scenario = o.technique == "benign" ? udsmon::benign_traffic(o.seed) : udsmon::simulate(o.technique, o.seed);
    udsmon::save_scenario(o.out, scenario);
    namespace fs = std::filesystem;
    std::ofstream policy(fs::path(o.out) / "policy.txt");
    udsmon::write_policy(policy, policy_of(o));
    std::ofstream rules(fs::path(o.out) / "rules.txt");
    udsmon::write_rules(rules, rules_of(o));
    if (!policy || !rules) throw udsmon::Error("cannot write scenario files to " + o.out);
    return 0;
}

int cmd_coverage(const Options &o) {
    auto m = udsmon::run_coverage(o.seed, policy_of(o), rules_of(o));
    emit(o, o.format == "json" ? udsmon::format_coverage_json(m) : udsmon::format_coverage_text(m));
    return m.all_pass() ? 0 : kCoverageFailure;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"UDS security event logging and detection"};
    app.require_subcommand(1);
    Options o;

    auto add_format = [&](CLI::App *cmd) {
        cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "json"}));
        cmd->add_option("--out", o.out, "Output file");
    };
    auto add_config = [&](CLI::App *cmd) {
        cmd->add_option("--policy", o.policy, "Logging policy file");
        cmd->add_option("--rules", o.rules, "Detection rules file");
    };

    auto *replay = app.add_subcommand("replay", "Run a recorded trace through sensing and detection");
    replay->add_option("trace", o.trace, "Trace file (JSON lines)")->required();
    add_config(replay);
    replay->add_option("--store", o.store, "Context store file");
    replay->add_option("--topology", o.topology, "Topology file; the reference vehicle by default");
    replay->add_option("--ti", o.ti, "Threat intelligence feed");
    add_format(replay);

    auto *sim = app.add_subcommand("simulate", "Write a labeled scenario for one technique or 'benign'");
    sim->add_option("technique", o.technique, "Technique id or 'benign'")->required();
    sim->add_option("--seed", o.seed, "Random seed");
    sim->add_option("--out", o.out, "Output directory")->required();
    add_config(sim);

    auto *cov = app.add_subcommand("coverage", "Simulate every technique and compare with the catalog");
    cov->add_option("--seed", o.seed, "Random seed");
    add_config(cov);
    add_format(cov);

    auto *cat = app.add_subcommand("catalog", "Print the attack technique catalog");
    cat->add_option("--out", o.out, "Output file");

    auto *stats = app.add_subcommand("stats", "Print AUTOSAR coverage statistics");
    stats->add_option("--out", o.out, "Output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    try {
        if (*replay) return cmd_replay(o);
        if (*sim) return cmd_simulate(o);
        if (*cov) return cmd_coverage(o);
        if (*cat) {
            emit(o, udsmon::format_catalog_table(udsmon::catalog()));
            return 0;
        }
        if (*stats) {
            emit(o, udsmon::format_stats_text(udsmon::catalog_stats(udsmon::catalog())));
            return 0;
        }
    } catch (const CLI::ValidationError &e) {
        std::cerr << "udsmon: " << e.what() << "\n";
        return kUsage;
    } catch (const udsmon::LookupError &e) {
        std::cerr << "udsmon: " << e.what() << "\n";
        return kUsage;
    } catch (const udsmon::Error &e) {
        std::cerr << "udsmon: " << e.what() << "\n";
        return kParse;
    }
    return kUsage;
}
