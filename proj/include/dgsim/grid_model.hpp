#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dgsim/common.hpp"

namespace dgsim {

enum class BusKind { SlackCandidate, Load, Junction };
enum class BranchKind { Line, Transformer };
enum class SwitchState { Open, Closed };
enum class AssetKind { Pv, Battery, FlexibleLoad, FixedLoad, EvCharger, GridFormingInverter };

const char* to_string(BusKind k);
const char* to_string(BranchKind k);
const char* to_string(AssetKind k);

struct Bus {
    int id = 0;
    double nominal_voltage_kv = kBaseVoltageKv;
    double v_min = 0.95;  // per-unit
    double v_max = 1.05;
    BusKind kind = BusKind::Load;
};

struct Branch {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double resistance = 0.0;      // per-unit
    double reactance = 0.0;       // per-unit
    double thermal_limit = 1.0;   // per-unit apparent power rating
    BranchKind kind = BranchKind::Line;
    bool in_service = true;       // cleared by a fault, restored by repair
    // transformer only
    int tap_position = 0;
    double tap_step = 0.0;        // pu voltage per tap
    int tap_min = 0;
    int tap_max = 0;

    // Ideal off-nominal turns ratio from the tap setting.
    double tap_ratio() const {
        return kind == BranchKind::Transformer ? 1.0 + tap_position * tap_step : 1.0;
    }
};

struct Switch {
    int id = 0;
    int at_branch = 0;
    SwitchState state = SwitchState::Closed;
    bool remotely_controllable = false;
};

// Asset owner: the DMS directly, or one of the HEMS agents.
struct AssetOwner {
    bool dms_direct = true;
    int hems_id = 0;  // meaningful when !dms_direct

    static AssetOwner dms() { return {true, 0}; }
    static AssetOwner hems(int id) { return {false, id}; }
    bool operator==(const AssetOwner&) const = default;
};

struct Asset {
    int id = 0;
    int bus = 0;
    AssetOwner owner = AssetOwner::dms();
    AssetKind kind = AssetKind::FixedLoad;
    double p_rating_kw = 0.0;
    double q_rating_kvar = 0.0;
    double energy_capacity_kwh = 0.0;  // storage kinds only
    double efficiency = 1.0;
    double droop_gain_kw_per_hz = 0.0;  // grid-forming only

    bool is_storage() const {
        return kind == AssetKind::Battery || kind == AssetKind::EvCharger ||
               kind == AssetKind::GridFormingInverter;
    }
    bool is_controllable() const {
        return kind == AssetKind::Battery || kind == AssetKind::FlexibleLoad ||
               kind == AssetKind::EvCharger || kind == AssetKind::GridFormingInverter;
    }
    bool is_load_kind() const {
        return kind == AssetKind::FixedLoad || kind == AssetKind::FlexibleLoad ||
               kind == AssetKind::EvCharger;
    }
};

// Connected component of the closed-branch graph.
struct IslandDescriptor {
    std::vector<int> buses;  // ascending
    bool substation_connected = false;

    bool contains(int bus) const;
};

struct SwitchOp {
    int switch_id = 0;
    SwitchState target = SwitchState::Closed;
    bool operator==(const SwitchOp&) const = default;
};

// Emitted when the asset registry changes so agents can re-configure.
struct GridModelChanged {
    enum class Kind { AssetConnected, AssetDisconnected } kind;
    Asset asset;
};

class GridModel {
public:
    GridModel() = default;

    // --- schema access -----------------------------------------------------
    const std::map<int, Bus>& buses() const { return buses_; }
    const std::map<int, Branch>& branches() const { return branches_; }
    const std::map<int, Switch>& switches() const { return switches_; }
    const std::map<int, Asset>& assets() const { return assets_; }
    int substation_bus() const { return substation_bus_; }

    const Bus& bus(int id) const;
    const Branch& branch(int id) const;
    const Switch& sw(int id) const;
    const Asset& asset(int id) const;
    bool has_bus(int id) const { return buses_.count(id) != 0; }
    bool has_branch(int id) const { return branches_.count(id) != 0; }
    bool has_switch(int id) const { return switches_.count(id) != 0; }
    bool has_asset(int id) const { return assets_.count(id) != 0; }

    void add_bus(const Bus& b);
    void add_branch(const Branch& b);
    void add_switch(const Switch& s);
    void set_substation_bus(int bus_id);

    // --- state mutation ----------------------------------------------------
    void set_branch_in_service(int branch_id, bool in_service);
    void set_tap_position(int branch_id, int tap);

    // Atomic: the plan is validated as a whole; nothing changes unless every
    // op is applicable. Returns the resulting islands.
    std::vector<IslandDescriptor> apply_switch_plan(const std::vector<SwitchOp>& plan);

    GridModelChanged connect_asset(const Asset& a);
    GridModelChanged disconnect_asset(int asset_id);

    // --- topology ----------------------------------------------------------
    // A branch conducts iff it is in service and no switch on it is open.
    bool branch_conducting(int branch_id) const;
    std::vector<int> switches_at_branch(int branch_id) const;

    // Partition of all buses by connectivity over conducting branches,
    // sorted by smallest contained bus id.
    std::vector<IslandDescriptor> find_islands() const;

    // True iff the island's conducting-branch count equals bus count - 1.
    // Throws if the descriptor does not match the current topology.
    bool is_radial(const IslandDescriptor& island) const;

    // Conducting branches with both endpoints inside the island.
    std::vector<int> conducting_branches_in(const IslandDescriptor& island) const;

    std::vector<int> assets_at_bus(int bus_id) const;
    std::vector<int> branches_at_bus(int bus_id) const;

    // Open switches whose branch connects the island to the outside, plus
    // switches bounding a given branch (nearest switches on adjacent paths).
    std::vector<int> bounding_switches(int branch_id) const;

private:
    void check_descriptor(const IslandDescriptor& island) const;

    std::map<int, Bus> buses_;
    std::map<int, Branch> branches_;
    std::map<int, Switch> switches_;
    std::map<int, Asset> assets_;
    int substation_bus_ = -1;
};

// Grid file loading. Malformed documents are rejected with a
// path-qualified message ("branches[3].reactance: ...").
class GridFileError : public SimError {
public:
    explicit GridFileError(const std::string& what) : SimError(what) {}
};

GridModel load_grid_file(const std::string& path);
GridModel parse_grid_json(const std::string& text, const std::string& origin);

}  // namespace dgsim
