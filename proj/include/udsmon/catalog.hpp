#pragma once

// The 53-entry UDS attack technique catalog.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "udsmon/codec.hpp"
#include "udsmon/detection.hpp"
#include "udsmon/sensor.hpp"

namespace udsmon {

enum class AutosarLevel { full, partial, none };
std::string_view to_string(AutosarLevel a);
std::optional<AutosarLevel> parse_autosar_level(std::string_view text);

struct AttackTechnique {
    std::string id;
    std::string name;
    // Cells as listed in the catalog.
    std::string sids_cell;
    std::string logging_cell;
    std::string autosar_cell;
    std::string detection_cell;

    AutosarLevel autosar = AutosarLevel::none;
    // Parsed views of the cells. "Multiple" rows use the representative
    // set {0x10, 0x22, 0x27, 0x31, 0x3E}.
    std::vector<Sid> sids;
    bool multiple_sids = false;
    std::vector<Strategy> logging; // listed order
    bool logging_na = false;
    bool logging_various = false;
    std::vector<DetectionStrategy> detection; // listed order
    bool detection_na = false;

    std::string tactic() const;
    bool operator==(const AttackTechnique &) const = default;
};

// Sorted as listed, grouped by tactic.
std::span<const AttackTechnique> catalog();
// Throws LookupError for ids outside the catalog.
const AttackTechnique &find_technique(std::string_view id);
bool is_technique(std::string_view id);

constexpr std::string_view kTactics[] = {"RD", "PS", "PE", "DE", "CA", "DS", "LM", "CL", "AF"};

// Builds a technique from its cells; throws PreconditionError on bad cells.
AttackTechnique make_technique(std::string id, std::string name, std::string sids, std::string logging,
                               AutosarLevel autosar, std::string autosar_cell, std::string detection);

std::vector<AttackTechnique> read_catalog(std::istream &in, const std::string &origin);
std::vector<AttackTechnique> load_catalog(const std::string &path);
void write_catalog(std::ostream &out, std::span<const AttackTechnique> techniques);
std::string format_catalog_table(std::span<const AttackTechnique> techniques);

struct CatalogStats {
    std::size_t techniques = 0;
    std::size_t ar_full = 0;
    std::size_t ar_partial = 0;
    std::size_t detectable = 0;
    std::size_t context_sids = 0;
    std::size_t ar_context_sids = 0;

    // Share of techniques with AUTOSAR logging: full only, full plus
    // partial, and the midpoint counting partial rows as one half.
    double ratio_lower() const;
    double ratio_upper() const;
    double ratio_derived() const;
};

CatalogStats catalog_stats(std::span<const AttackTechnique> techniques);
std::string format_stats_text(const CatalogStats &stats);

} // namespace udsmon
