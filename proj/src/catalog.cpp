#include "udsmon/catalog.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "udsmon/error.hpp"
#include "udsmon/recfile.hpp"

namespace udsmon {

std::string_view to_string(AutosarLevel a) {
    switch (a) {
    case AutosarLevel::full: return "full";
    case AutosarLevel::partial: return "partial";
    case AutosarLevel::none: return "none";
    }
    return "?";
}

std::optional<AutosarLevel> parse_autosar_level(std::string_view text) {
    if (text == "full") return AutosarLevel::full;
    if (text == "partial") return AutosarLevel::partial;
    if (text == "none") return AutosarLevel::none;
    return std::nullopt;
}

std::string AttackTechnique::tactic() const {
    auto first = id.find('-');
    auto second = id.find('-', first + 1);
    return id.substr(first + 1, second - first - 1);
}

namespace {

constexpr Sid kRepresentativeSids[] = {0x10, 0x22, 0x27, 0x31, 0x3E};

std::vector<std::string> split_cell(std::string_view cell) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= cell.size()) {
        auto end = cell.find(',', start);
        if (end == std::string_view::npos) end = cell.size();
        auto item = cell.substr(start, end - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (!item.empty()) out.emplace_back(item);
        start = end + 1;
    }
    return out;
}

} // namespace

AttackTechnique make_technique(std::string id, std::string name, std::string sids, std::string logging,
                               AutosarLevel autosar, std::string autosar_cell, std::string detection) {
    AttackTechnique t;
    t.id = std::move(id);
    t.name = std::move(name);
    t.sids_cell = std::move(sids);
    t.logging_cell = std::move(logging);
    t.autosar = autosar;
    t.autosar_cell = std::move(autosar_cell);
    t.detection_cell = std::move(detection);

    if (!t.id.starts_with("AT-")) throw PreconditionError("technique id must start with AT-: " + t.id);
    auto tactic = t.tactic();
    if (std::find(std::begin(kTactics), std::end(kTactics), tactic) == std::end(kTactics)) {
        throw PreconditionError("unknown tactic in " + t.id);
    }

    if (t.sids_cell == "Multiple") {
        t.multiple_sids = true;
        t.sids.assign(std::begin(kRepresentativeSids), std::end(kRepresentativeSids));
    } else if (t.sids_cell != "-") {
        for (const auto &item : split_cell(t.sids_cell)) {
            auto v = parse_hex_number(item);
            if (!v || *v > 0xFF || !item.starts_with("0x")) throw PreconditionError("bad SID cell in " + t.id);
            t.sids.push_back(static_cast<Sid>(*v));
        }
    }

    if (t.logging_cell == "NA") {
        t.logging_na = true;
    } else if (t.logging_cell == "Various") {
        t.logging_various = true;
    } else {
        for (const auto &item : split_cell(t.logging_cell)) {
            auto s = parse_strategy(item);
            if (!s) throw PreconditionError("bad logging cell in " + t.id);
            t.logging.push_back(*s);
        }
    }

    if (t.detection_cell == "NA") {
        t.detection_na = true;
    } else {
        for (const auto &item : split_cell(t.detection_cell)) {
            auto s = parse_detection_strategy(item);
            if (!s) throw PreconditionError("bad detection cell in " + t.id);
            t.detection.push_back(*s);
        }
    }
    return t;
}

namespace {

struct Row {
    const char *id;
    const char *name;
    const char *sids;
    const char *logging;
    AutosarLevel autosar;
    const char *autosar_cell;
    const char *detection;
};

constexpr auto F = AutosarLevel::full;
constexpr auto P = AutosarLevel::partial;
constexpr auto N = AutosarLevel::none;

// clang-format off
constexpr Row kRows[] = {
    {"AT-RD-1", "Firmware Reverse-Engineering", "-", "NA", N, "No", "PTI"},
    {"AT-RD-2", "Leak Secrets", "-", "NA", N, "No", "PTI"},
    {"AT-PS-1", "Download Custom Package", "0x34, 0x36, 0x37", "IR, FE", P, "Only 0x34", "SLP, CLC, PTI"},
    {"AT-PE-1", "Change to Privileged Session", "0x10", "FE, MFI", N, "No", "CLC"},
    {"AT-PE-2", "Valid Credentials", "0x27, 0x29", "FE", F, "✓", "CLC, PTI"},
    {"AT-PE-3", "Replay Attack SA", "0x27", "IR, FE, MFI", F, "✓", "SLP, CLC, PTI"},
    {"AT-PE-4", "Brute-Force SA", "0x27", "IR, FE", F, "✓", "SLP, CLC"},
    {"AT-PE-5", "Weak Auth29 configurations", "0x29", "IR, FE", F, "✓", "CLC"},
    {"AT-DE-1", "Block DTCs Generation", "0x85", "FE", F, "✓", "CLC"},
    {"AT-DE-2", "Remove Attack Traces in DTCs", "0x14", "FE", F, "✓", "CLC"},
    {"AT-DE-3", "Replay Download", "0x34, 0x36, 0x37", "FE", P, "Only 0x34", "CLC"},
    {"AT-DE-4", "Bypass Checks", "Multiple", "Various", N, "No", "CLC, PTI"},
    {"AT-DE-5", "Bypass Read Protections using DDDID", "0x2C, 0x22", "FE", N, "No", "CLC, PTI"},
    {"AT-CA-1", "Extract Secrets", "0x22, 0x23, 0x31", "FE", P, "Only 0x31", "CLC"},
    {"AT-DS-1", "Service Discovery", "Multiple", "IR, FE", P, "(✓)", "SLP, CLC"},
    {"AT-DS-2", "Subfunction Discovery", "Multiple", "IR, FE", P, "(✓)", "SLP, CLC"},
    {"AT-DS-3", "Diagnostic Sessions Discovery", "0x10", "IR, FE", N, "No", "SLP, CLC"},
    {"AT-DS-4", "UDS Fuzzing", "Multiple", "IR, FE", P, "(✓)", "SLP, CLC"},
    {"AT-DS-5", "Check seed entropy in SA", "0x27", "IR, MFI", N, "No", "SLP"},
    {"AT-DS-6", "Reverse-engineer SA algorithm", "0x27", "FE", F, "✓", "CLC, PTI"},
    {"AT-DS-7", "Identify Auth29 configuration", "0x29", "FE", N, "No", "CLC, PTI"},
    {"AT-DS-8", "Enumerate algorithms, Auth29", "0x29", "FE", N, "No", "CLC, PTI"},
    {"AT-DS-9", "Check challenge entropy, Auth29", "0x29", "IR, MFI", N, "No", "SLP"},
    {"AT-DS-10", "Identify Configurations for SDT", "0x84", "FE", N, "No", "CLC, PTI"},
    {"AT-DS-11", "DID Enumeration", "0x22", "IR, FE", N, "No", "CLC, SLP"},
    {"AT-DS-12", "Routine Enumeration", "0x31", "IR, FE", F, "✓", "CLC, SLP"},
    {"AT-DS-13", "File System Discovery", "0x38", "IR, FE", F, "✓", "CLC, SLP"},
    {"AT-DS-14", "Eavesdropping", "Multiple", "NA", N, "No", "NA"},
    {"AT-LM-1", "Man-in-the-Middle", "Multiple", "IR, FE, MFI", P, "(✓)", "SLP, CLC, PTI"},
    {"AT-CL-1", "Event-Based Data Extraction", "0x86", "IR, FE", N, "No", "SLP, CLC"},
    {"AT-CL-2", "Periodic Data Extraction", "0x2A", "IR, FE", N, "No", "SLP, CLC"},
    {"AT-CL-3", "DID Data Extraction", "0x22", "IR, FE", N, "No", "CLC"},
    {"AT-CL-4", "Memory Extraction", "0x23, 0x35", "IR, FE", P, "Only 0x35", "CLC"},
    {"AT-CL-5", "File Extraction", "0x38", "IR, FE", F, "✓", "CLC"},
    {"AT-CL-6", "Read DTCs", "0x19", "IR, FE", N, "No", "SLP, CLC"},
    {"AT-AF-1", "Request Flooding", "Multiple", "IR, FE", P, "(✓)", "SLP, CLC, PTI"},
    {"AT-AF-2", "Request Blocking", "Multiple", "IR, FE, MFI", P, "(✓)", "PTI, SLP"},
    {"AT-AF-3", "Interrupt Operations, DSC", "0x10", "IR, FE, MFI", N, "No", "SLP"},
    {"AT-AF-4", "Impede Usage of SA", "0x27", "IR", F, "✓", "SLP"},
    {"AT-AF-5.1", "Resource Overload via ROE", "0x86", "IR, FE", N, "No", "SLP, CLC"},
    {"AT-AF-5.2", "Resource Overload via RDBPI", "0x2A", "IR, FE, MFI", N, "No", "SLP, CLC"},
    {"AT-AF-6", "Interrupt Periodic Data Readout", "0x2A", "IR, FE", N, "No", "SLP, CLC"},
    {"AT-AF-7", "Change IO Configuration", "0x2F", "IR, FE, MFI", F, "✓", "SLP, CLC"},
    {"AT-AF-8", "Routine Misuse", "0x31", "FE", F, "✓", "CLC"},
    {"AT-AF-9", "Early Transfer Termination", "0x37", "IR, FE, MFI", N, "No", "SLP, CLC"},
    {"AT-AF-10", "Interrupt Routine", "0x31", "IR, FE, MFI", F, "✓", "SLP, CLC"},
    {"AT-AF-11", "Keep Session Open", "0x10, 0x3E", "FE, MFI", N, "No", "CLC"},
    {"AT-AF-12", "I/O Control", "0x2F", "IR, FE", F, "✓", "CLC"},
    {"AT-AF-13", "Disrupt ECU Communication", "0x28", "IR, FE, MFI", F, "✓", "CLC"},
    {"AT-AF-14", "Reset ECU", "0x11", "IR, FE, MFI", F, "✓", "SLP, CLC"},
    {"AT-AF-15", "DID Manipulation", "0x2E", "IR, FE", F, "✓", "SLP, CLC"},
    {"AT-AF-16", "File Manipulation", "0x38", "IR, FE", F, "✓", "SLP, CLC"},
    {"AT-AF-17", "Memory Manipulation", "0x3D, 0x34", "IR, FE", F, "✓", "SLP, CLC"},
};
// clang-format on

} // namespace

std::span<const AttackTechnique> catalog() {
    static const std::vector<AttackTechnique> techniques = [] {
        std::vector<AttackTechnique> out;
        for (const auto &r : kRows) {
            out.push_back(make_technique(r.id, r.name, r.sids, r.logging, r.autosar, r.autosar_cell, r.detection));
        }
        return out;
    }();
    return techniques;
}

const AttackTechnique &find_technique(std::string_view id) {
    for (const auto &t : catalog()) {
        if (t.id == id) return t;
    }
    throw LookupError("unknown technique " + std::string(id));
}

bool is_technique(std::string_view id) {
    auto all = catalog();
    return std::any_of(all.begin(), all.end(), [&](const AttackTechnique &t) { return t.id == id; });
}

std::vector<AttackTechnique> read_catalog(std::istream &in, const std::string &origin) {
    auto file = parse_records(in, origin);
    std::vector<AttackTechnique> out;
    for (const auto &r : file.records) {
        if (r.section != "techniques" || r.kind != "technique") r.fail("unknown record");
        auto level = parse_autosar_level(r.require("autosar"));
        if (!level) r.fail("autosar must be full, partial or none");
        try {
            out.push_back(make_technique(r.require("id"), r.require("name"), r.require("sids"), r.require("logging"),
                                         *level, r.require("autosar_cell"), r.require("detection")));
        } catch (const PreconditionError &e) {
            r.fail(e.what());
        }
    }
    return out;
}

std::vector<AttackTechnique> load_catalog(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return read_catalog(in, path);
}

void write_catalog(std::ostream &out, std::span<const AttackTechnique> techniques) {
    out << "# UDS attack techniques with expected logging, AUTOSAR support and detection.\n"
           "# Cells are kept as listed; \"-\" marks a technique without a SID.\n"
           "# autosar: full, partial or none; autosar_cell holds the listed mark.\n\n";
    RecordWriter w(out);
    w.section("techniques");
    for (const auto &t : techniques) {
        w.record("technique", {{"id", t.id},
                               {"name", t.name},
                               {"sids", t.sids_cell},
                               {"logging", t.logging_cell},
                               {"autosar", std::string(to_string(t.autosar))},
                               {"autosar_cell", t.autosar_cell},
                               {"detection", t.detection_cell}});
    }
}

std::string format_catalog_table(std::span<const AttackTechnique> techniques) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %-36s %-18s %-12s %-8s %s\n", "id", "name", "sids", "logging", "autosar",
                  "detection");
    out << buf;
    for (const auto &t : techniques) {
        std::snprintf(buf, sizeof buf, "%-10s %-36s %-18s %-12s %-8s %s\n", t.id.c_str(), t.name.c_str(),
                      t.sids_cell.c_str(), t.logging_cell.c_str(), std::string(to_string(t.autosar)).c_str(),
                      t.detection_cell.c_str());
        out << buf;
    }
    return out.str();
}

double CatalogStats::ratio_lower() const { return techniques ? 100.0 * ar_full / techniques : 0.0; }
double CatalogStats::ratio_upper() const {
    return techniques ? 100.0 * (ar_full + ar_partial) / techniques : 0.0;
}
double CatalogStats::ratio_derived() const { return (ratio_lower() + ratio_upper()) / 2.0; }

CatalogStats catalog_stats(std::span<const AttackTechnique> techniques) {
    CatalogStats s;
    s.techniques = techniques.size();
    for (const auto &t : techniques) {
        if (t.autosar == AutosarLevel::full) ++s.ar_full;
        if (t.autosar == AutosarLevel::partial) ++s.ar_partial;
        if (!t.detection_na) ++s.detectable;
    }
    for (const auto &d : service_registry()) {
        if (!d.in_context_table) continue;
        ++s.context_sids;
        if (autosar_support(d.sid) == AutosarSupport::ir_fe) ++s.ar_context_sids;
    }
    return s;
}

std::string format_stats_text(const CatalogStats &s) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "ar_supported_sids %zu of %zu\n"
                  "techniques %zu\n"
                  "ar_full %zu\n"
                  "ar_partial %zu\n"
                  "ar_ratio_lower %.1f%%\n"
                  "ar_ratio_upper %.1f%%\n"
                  "ar_ratio_derived %.1f%%\n"
                  "detectable %zu of %zu\n",
                  s.ar_context_sids, s.context_sids, s.techniques, s.ar_full, s.ar_partial, s.ratio_lower(),
                  s.ratio_upper(), s.ratio_derived(), s.detectable, s.techniques);
    return buf;
}

} // namespace udsmon
