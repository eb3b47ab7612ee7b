#pragma once

// Backend-side context for contextualized checks: vehicle records, the
// firmware registry, sensitive identifiers and vehicle state timelines.
//
// Time intervals and memory ranges are half-open everywhere. A store is a
// plain value; detection workers share it as shared_ptr<const ContextStore>
// and any mutation happens on a copy.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "udsmon/codec.hpp"
#include "udsmon/digest.hpp"

namespace udsmon {

enum class EcuMode { development, production };

std::string_view to_string(EcuMode mode);
std::optional<EcuMode> parse_ecu_mode(std::string_view text);

struct EcuInventoryEntry {
    std::string ecu_type;
    EcuMode mode = EcuMode::production;
    bool operator==(const EcuInventoryEntry &) const = default;
};

struct MaintenanceWindow {
    TimestampMs start = 0;
    TimestampMs end = 0;
    std::string workshop;
    bool contains(TimestampMs t) const { return t >= start && t < end; }
    bool operator==(const MaintenanceWindow &) const = default;
};

// A service (optionally one subfunction) the vehicle configuration disables.
struct ForbiddenService {
    std::string ecu;
    Sid sid = 0;
    std::optional<std::uint8_t> subfunction;
    bool operator==(const ForbiddenService &) const = default;
};

// Expected content of a writable DID, summarized by digest.
struct ExpectedDidValue {
    std::string ecu;
    std::uint16_t did = 0;
    Digest digest{};
    bool operator==(const ExpectedDidValue &) const = default;
};

struct VehicleRecord {
    std::string vehicle_id;
    std::string model;
    std::map<std::string, EcuInventoryEntry> ecus;
    std::vector<MaintenanceWindow> maintenance; // sorted, non-overlapping
    std::vector<ForbiddenService> forbidden;
    std::vector<ExpectedDidValue> expected_dids;

    void add_maintenance(MaintenanceWindow w);
    bool operator==(const VehicleRecord &) const = default;
};

struct FirmwareRelease {
    std::uint32_t version = 0;
    Digest digest{};
    bool operator==(const FirmwareRelease &) const = default;
};

enum class FirmwareStatus { authorized_current, authorized_older, unknown };
std::string_view to_string(FirmwareStatus s);

struct MemoryRange {
    std::uint64_t addr = 0;
    std::uint64_t size = 0;
    std::string label;
    std::uint64_t end() const { return addr + size; }
    bool operator==(const MemoryRange &) const = default;
};

class SensitiveRegistry {
public:
    void add_did(std::uint16_t did, std::string label);
    // Overlapping ranges are merged so the stored set stays canonical.
    void add_memory(MemoryRange range);
    void add_rid(std::uint16_t rid, std::string label);
    void add_path_prefix(std::string prefix, std::string label);

    bool is_sensitive_did(std::uint16_t did) const { return dids_.contains(did); }
    bool overlaps_sensitive_memory(std::uint64_t addr, std::uint64_t size) const;
    bool is_sensitive_rid(std::uint16_t rid) const { return rids_.contains(rid); }
    bool is_sensitive_path(std::string_view path) const;

    const std::map<std::uint16_t, std::string> &dids() const { return dids_; }
    const std::vector<MemoryRange> &memory() const { return memory_; }
    const std::map<std::uint16_t, std::string> &rids() const { return rids_; }
    const std::map<std::string, std::string> &paths() const { return paths_; }
    bool empty() const { return dids_.empty() && memory_.empty() && rids_.empty() && paths_.empty(); }

    bool operator==(const SensitiveRegistry &) const = default;

private:
    std::map<std::uint16_t, std::string> dids_;
    std::vector<MemoryRange> memory_;
    std::map<std::uint16_t, std::string> rids_;
    std::map<std::string, std::string> paths_;
};

struct StateSample {
    TimestampMs timestamp = 0;
    std::uint32_t speed_kph = 0;
    EcuMode mode = EcuMode::production;
    bool workshop_session_active = false;
    std::optional<std::string> campaign;
    bool operator==(const StateSample &) const = default;
};

class ContextStore {
public:
    void add_vehicle(VehicleRecord v);
    void add_release(const std::string &ecu_type, FirmwareRelease r);
    void add_sample(const std::string &vehicle_id, StateSample s);
    SensitiveRegistry &sensitive() { return sensitive_; }
    const SensitiveRegistry &sensitive() const { return sensitive_; }

    const VehicleRecord &vehicle(const std::string &vehicle_id) const;
    bool has_vehicle(const std::string &vehicle_id) const { return vehicles_.contains(vehicle_id); }
    const std::map<std::string, VehicleRecord> &vehicles() const { return vehicles_; }
    const std::map<std::string, std::vector<FirmwareRelease>> &firmware() const { return firmware_; }
    const std::map<std::string, std::vector<StateSample>> &timelines() const { return timelines_; }

    bool in_maintenance(const std::string &vehicle_id, TimestampMs t) const;
    FirmwareStatus firmware_known(const std::string &ecu_type, const Digest &digest) const;
    bool is_sensitive_did(std::uint16_t did) const { return sensitive_.is_sensitive_did(did); }
    bool overlaps_sensitive_memory(std::uint64_t addr, std::uint64_t size) const {
        return sensitive_.overlaps_sensitive_memory(addr, size);
    }
    // Last sample at or before t; nullopt when the timeline starts later or is absent.
    std::optional<StateSample> state_at(const std::string &vehicle_id, TimestampMs t) const;
    // Vehicle owning an ECU id; the first match in vehicle-id order.
    std::optional<std::string> vehicle_of_ecu(const std::string &ecu_id) const;

    bool operator==(const ContextStore &) const = default;

private:
    std::map<std::string, VehicleRecord> vehicles_;
    std::map<std::string, std::vector<FirmwareRelease>> firmware_; // ascending version
    SensitiveRegistry sensitive_;
    std::map<std::string, std::vector<StateSample>> timelines_;
};

ContextStore read_store(std::istream &in, const std::string &origin);
ContextStore load_store(const std::string &path);
void write_store(std::ostream &out, const ContextStore &store);
void save_store(const std::string &path, const ContextStore &store);

} // namespace udsmon
