#include "dgsim/grid_model.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dgsim {

using nlohmann::json;

const char* to_string(BusKind k) {
    switch (k) {
        case BusKind::SlackCandidate: return "slack-candidate";
        case BusKind::Load: return "load";
        case BusKind::Junction: return "junction";
    }
    return "?";
}

const char* to_string(BranchKind k) {
    return k == BranchKind::Transformer ? "transformer" : "line";
}

const char* to_string(AssetKind k) {
    switch (k) {
        case AssetKind::Pv: return "pv";
        case AssetKind::Battery: return "battery";
        case AssetKind::FlexibleLoad: return "flexible-load";
        case AssetKind::FixedLoad: return "fixed-load";
        case AssetKind::EvCharger: return "ev-charger";
        case AssetKind::GridFormingInverter: return "grid-forming-inverter";
    }
    return "?";
}

bool IslandDescriptor::contains(int bus) const {
    return std::binary_search(buses.begin(), buses.end(), bus);
}

const Bus& GridModel::bus(int id) const {
    auto it = buses_.find(id);
    if (it == buses_.end()) throw SimError("unknown bus " + std::to_string(id));
    return it->second;
}

const Branch& GridModel::branch(int id) const {
    auto it = branches_.find(id);
    if (it == branches_.end()) throw SimError("unknown branch " + std::to_string(id));
    return it->second;
}

const Switch& GridModel::sw(int id) const {
    auto it = switches_.find(id);
    if (it == switches_.end()) throw SimError("unknown switch " + std::to_string(id));
    return it->second;
}

const Asset& GridModel::asset(int id) const {
    auto it = assets_.find(id);
    if (it == assets_.end()) throw SimError("unknown asset " + std::to_string(id));
    return it->second;
}

void GridModel::add_bus(const Bus& b) {
    if (buses_.count(b.id)) throw SimError("duplicate bus id " + std::to_string(b.id));
    if (!(b.v_min < 1.0 && 1.0 < b.v_max))
        throw SimError("bus " + std::to_string(b.id) + ": voltage band must straddle 1.0 pu");
    buses_[b.id] = b;
}

void GridModel::add_branch(const Branch& b) {
    if (branches_.count(b.id)) throw SimError("duplicate branch id " + std::to_string(b.id));
    if (!buses_.count(b.from_bus) || !buses_.count(b.to_bus))
        throw SimError("branch " + std::to_string(b.id) + ": endpoint bus missing");
    if (b.resistance < 0.0) throw SimError("branch " + std::to_string(b.id) + ": resistance < 0");
    if (b.thermal_limit <= 0.0)
        throw SimError("branch " + std::to_string(b.id) + ": thermal_limit must be > 0");
    if (b.kind == BranchKind::Transformer &&
        (b.tap_position < b.tap_min || b.tap_position > b.tap_max))
        throw SimError("branch " + std::to_string(b.id) + ": tap_position outside tap_range");
    branches_[b.id] = b;
}

void GridModel::add_switch(const Switch& s) {
    if (switches_.count(s.id)) throw SimError("duplicate switch id " + std::to_string(s.id));
    if (!branches_.count(s.at_branch))
        throw SimError("switch " + std::to_string(s.id) + ": references missing branch");
    switches_[s.id] = s;
}

void GridModel::set_substation_bus(int bus_id) {
    if (!buses_.count(bus_id)) throw SimError("substation bus missing");
    substation_bus_ = bus_id;
}

void GridModel::set_branch_in_service(int branch_id, bool in_service) {
    auto it = branches_.find(branch_id);
    if (it == branches_.end()) throw SimError("unknown branch " + std::to_string(branch_id));
    it->second.in_service = in_service;
}

void GridModel::set_tap_position(int branch_id, int tap) {
    auto it = branches_.find(branch_id);
    if (it == branches_.end()) throw SimError("unknown branch " + std::to_string(branch_id));
    Branch& b = it->second;
    if (b.kind != BranchKind::Transformer)
        throw SimError("branch " + std::to_string(branch_id) + " has no tap changer");
    if (tap < b.tap_min || tap > b.tap_max)
        throw SimError("tap " + std::to_string(tap) + " outside range of branch " +
                       std::to_string(branch_id));
    b.tap_position = tap;
}

std::vector<IslandDescriptor> GridModel::apply_switch_plan(const std::vector<SwitchOp>& plan) {
    for (const SwitchOp& op : plan) {
        auto it = switches_.find(op.switch_id);
        if (it == switches_.end())
            throw SimError("switch plan references unknown switch " + std::to_string(op.switch_id));
        if (!it->second.remotely_controllable)
            throw SimError("switch " + std::to_string(op.switch_id) + " is not remotely controllable");
    }
    for (const SwitchOp& op : plan) switches_[op.switch_id].state = op.target;
    return find_islands();
}

GridModelChanged GridModel::connect_asset(const Asset& a) {
    if (assets_.count(a.id)) throw SimError("duplicate asset id " + std::to_string(a.id));
    if (!buses_.count(a.bus)) throw SimError("asset " + std::to_string(a.id) + ": unknown bus " +
                                             std::to_string(a.bus));
    if (a.p_rating_kw < 0.0) throw SimError("asset " + std::to_string(a.id) + ": p_rating < 0");
    if (a.efficiency <= 0.0 || a.efficiency > 1.0)
        throw SimError("asset " + std::to_string(a.id) + ": efficiency outside (0, 1]");
    if (a.is_storage() && a.energy_capacity_kwh <= 0.0)
        throw SimError("asset " + std::to_string(a.id) + ": storage needs energy_capacity > 0");
    assets_[a.id] = a;
    return {GridModelChanged::Kind::AssetConnected, a};
}

GridModelChanged GridModel::disconnect_asset(int asset_id) {
    auto it = assets_.find(asset_id);
    if (it == assets_.end()) throw SimError("unknown asset " + std::to_string(asset_id));
    GridModelChanged ev{GridModelChanged::Kind::AssetDisconnected, it->second};
    assets_.erase(it);
    return ev;
}

bool GridModel::branch_conducting(int branch_id) const {
    const Branch& b = branch(branch_id);
    if (!b.in_service) return false;
    for (const auto& [sid, s] : switches_)
        if (s.at_branch == branch_id && s.state == SwitchState::Open) return false;
    return true;
}

std::vector<int> GridModel::switches_at_branch(int branch_id) const {
    std::vector<int> out;
    for (const auto& [sid, s] : switches_)
        if (s.at_branch == branch_id) out.push_back(sid);
    return out;
}

std::vector<IslandDescriptor> GridModel::find_islands() const {
    std::map<int, std::vector<int>> adj;  // bus -> neighbours over conducting branches
    for (const auto& [bid, b] : buses_) adj[bid];
    for (const auto& [brid, br] : branches_) {
        if (!branch_conducting(brid)) continue;
        adj[br.from_bus].push_back(br.to_bus);
        adj[br.to_bus].push_back(br.from_bus);
    }

    std::set<int> seen;
    std::vector<IslandDescriptor> islands;
    for (const auto& [bid, nbrs] : adj) {
        if (seen.count(bid)) continue;
        IslandDescriptor island;
        std::deque<int> frontier{bid};
        seen.insert(bid);
        while (!frontier.empty()) {
            int cur = frontier.front();
            frontier.pop_front();
            island.buses.push_back(cur);
            for (int nb : adj.at(cur)) {
                if (seen.insert(nb).second) frontier.push_back(nb);
            }
        }
        std::sort(island.buses.begin(), island.buses.end());
        island.substation_connected =
            substation_bus_ >= 0 && island.contains(substation_bus_);
        islands.push_back(std::move(island));
    }
    std::sort(islands.begin(), islands.end(),
              [](const IslandDescriptor& a, const IslandDescriptor& b) {
                  return a.buses.front() < b.buses.front();
              });
    return islands;
}

void GridModel::check_descriptor(const IslandDescriptor& island) const {
    if (island.buses.empty()) throw SimError("empty island descriptor");
    for (const IslandDescriptor& cur : find_islands()) {
        if (cur.contains(island.buses.front())) {
            if (cur.buses == island.buses) return;
            break;
        }
    }
    throw SimError("stale island descriptor (topology changed since find_islands)");
}

std::vector<int> GridModel::conducting_branches_in(const IslandDescriptor& island) const {
    std::vector<int> out;
    for (const auto& [brid, br] : branches_) {
        if (!branch_conducting(brid)) continue;
        if (island.contains(br.from_bus) && island.contains(br.to_bus)) out.push_back(brid);
    }
    return out;
}

bool GridModel::is_radial(const IslandDescriptor& island) const {
    check_descriptor(island);
    std::size_t closed = conducting_branches_in(island).size();
    return closed == island.buses.size() - 1;
}

std::vector<int> GridModel::assets_at_bus(int bus_id) const {
    std::vector<int> out;
    for (const auto& [aid, a] : assets_)
        if (a.bus == bus_id) out.push_back(aid);
    return out;
}

std::vector<int> GridModel::branches_at_bus(int bus_id) const {
    std::vector<int> out;
    for (const auto& [brid, br] : branches_)
        if (br.from_bus == bus_id || br.to_bus == bus_id) out.push_back(brid);
    return out;
}

std::vector<int> GridModel::bounding_switches(int branch_id) const {
    // Protection zone: grow from the branch endpoints across switchless
    // branches; the zone boundary is formed by switched branches.
    const Branch& b0 = branch(branch_id);
    std::set<int> zone{b0.from_bus, b0.to_bus};
    std::set<int> result;
    for (int sid : switches_at_branch(branch_id)) result.insert(sid);

    std::deque<int> frontier{b0.from_bus, b0.to_bus};
    while (!frontier.empty()) {
        int cur = frontier.front();
        frontier.pop_front();
        for (int brid : branches_at_bus(cur)) {
            if (brid == branch_id) continue;
            const Branch& br = branch(brid);
            auto sws = switches_at_branch(brid);
            if (!sws.empty()) {
                result.insert(sws.begin(), sws.end());
                continue;  // switched branch bounds the zone
            }
            int other = br.from_bus == cur ? br.to_bus : br.from_bus;
            if (zone.insert(other).second) frontier.push_back(other);
        }
    }
    return {result.begin(), result.end()};
}

// ---------------------------------------------------------------------------
// grid file parsing

namespace {

class PathCursor {
public:
    explicit PathCursor(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        throw GridFileError(origin_ + ": " + path + ": " + msg);
    }

    const json& require(const json& obj, const std::string& path, const std::string& key) const {
        if (!obj.is_object() || !obj.contains(key)) fail(path + "." + key, "missing");
        return obj.at(key);
    }

    double number(const json& obj, const std::string& path, const std::string& key) const {
        const json& v = require(obj, path, key);
        if (!v.is_number()) fail(path + "." + key, "expected a number");
        return v.get<double>();
    }

    double number_or(const json& obj, const std::string& path, const std::string& key,
                     double fallback) const {
        if (!obj.is_object() || !obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_number()) fail(path + "." + key, "expected a number");
        return v.get<double>();
    }

    int integer(const json& obj, const std::string& path, const std::string& key) const {
        const json& v = require(obj, path, key);
        if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
        return v.get<int>();
    }

    std::string text(const json& obj, const std::string& path, const std::string& key) const {
        const json& v = require(obj, path, key);
        if (!v.is_string()) fail(path + "." + key, "expected a string");
        return v.get<std::string>();
    }

private:
    std::string origin_;
};

BusKind parse_bus_kind(const std::string& s, const PathCursor& cur, const std::string& path) {
    if (s == "slack-candidate") return BusKind::SlackCandidate;
    if (s == "load") return BusKind::Load;
    if (s == "junction") return BusKind::Junction;
    cur.fail(path, "unknown bus kind '" + s + "'");
}

AssetKind parse_asset_kind(const std::string& s, const PathCursor& cur, const std::string& path) {
    if (s == "pv") return AssetKind::Pv;
    if (s == "battery") return AssetKind::Battery;
    if (s == "flexible-load") return AssetKind::FlexibleLoad;
    if (s == "fixed-load") return AssetKind::FixedLoad;
    if (s == "ev-charger") return AssetKind::EvCharger;
    if (s == "grid-forming-inverter") return AssetKind::GridFormingInverter;
    cur.fail(path, "unknown asset kind '" + s + "'");
}

AssetOwner parse_owner(const json& v, const PathCursor& cur, const std::string& path) {
    if (!v.is_string()) cur.fail(path, "expected a string owner");
    std::string s = v.get<std::string>();
    if (s == "dms-direct") return AssetOwner::dms();
    if (s.rfind("hems(", 0) == 0 && s.back() == ')') {
        try {
            return AssetOwner::hems(std::stoi(s.substr(5, s.size() - 6)));
        } catch (const std::exception&) {
            cur.fail(path, "malformed owner '" + s + "'");
        }
    }
    cur.fail(path, "owner must be 'dms-direct' or 'hems(i)'");
}

}  // namespace

GridModel parse_grid_json(const std::string& text, const std::string& origin) {
    PathCursor cur(origin);
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) cur.fail("$", "not valid JSON");
    if (!doc.is_object()) cur.fail("$", "top level must be an object");

    GridModel g;

    double band_lo = 0.95, band_hi = 1.05;
    if (doc.contains("voltage_band")) {
        const json& vb = doc.at("voltage_band");
        if (!vb.is_array() || vb.size() != 2 || !vb[0].is_number() || !vb[1].is_number())
            cur.fail("voltage_band", "expected [v_min, v_max]");
        band_lo = vb[0].get<double>();
        band_hi = vb[1].get<double>();
    }

    const json& buses = cur.require(doc, "$", "buses");
    if (!buses.is_array()) cur.fail("buses", "expected an array");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        std::string path = "buses[" + std::to_string(i) + "]";
        const json& jb = buses[i];
        Bus b;
        b.id = cur.integer(jb, path, "id");
        b.nominal_voltage_kv = cur.number_or(jb, path, "nominal_voltage", kBaseVoltageKv);
        b.v_min = cur.number_or(jb, path, "v_min", band_lo);
        b.v_max = cur.number_or(jb, path, "v_max", band_hi);
        b.kind = parse_bus_kind(cur.text(jb, path, "kind"), cur, path + ".kind");
        try {
            g.add_bus(b);
        } catch (const SimError& e) {
            cur.fail(path, e.what());
        }
    }

    const json& branches = cur.require(doc, "$", "branches");
    if (!branches.is_array()) cur.fail("branches", "expected an array");
    for (std::size_t i = 0; i < branches.size(); ++i) {
        std::string path = "branches[" + std::to_string(i) + "]";
        const json& jb = branches[i];
        Branch b;
        b.id = cur.integer(jb, path, "id");
        b.from_bus = cur.integer(jb, path, "from_bus");
        b.to_bus = cur.integer(jb, path, "to_bus");
        b.resistance = cur.number(jb, path, "resistance");
        b.reactance = cur.number(jb, path, "reactance");
        b.thermal_limit = cur.number(jb, path, "thermal_limit");
        std::string kind = cur.text(jb, path, "kind");
        if (kind == "transformer") {
            b.kind = BranchKind::Transformer;
            b.tap_position = cur.integer(jb, path, "tap_position");
            b.tap_step = cur.number(jb, path, "tap_step");
            const json& range = cur.require(jb, path, "tap_range");
            if (!range.is_array() || range.size() != 2) cur.fail(path + ".tap_range", "expected [min, max]");
            b.tap_min = range[0].get<int>();
            b.tap_max = range[1].get<int>();
        } else if (kind == "line") {
            b.kind = BranchKind::Line;
        } else {
            cur.fail(path + ".kind", "unknown branch kind '" + kind + "'");
        }
        try {
            g.add_branch(b);
        } catch (const SimError& e) {
            cur.fail(path, e.what());
        }
    }

    const json& switches = cur.require(doc, "$", "switches");
    if (!switches.is_array()) cur.fail("switches", "expected an array");
    for (std::size_t i = 0; i < switches.size(); ++i) {
        std::string path = "switches[" + std::to_string(i) + "]";
        const json& js = switches[i];
        Switch s;
        s.id = cur.integer(js, path, "id");
        s.at_branch = cur.integer(js, path, "at_branch");
        std::string st = cur.text(js, path, "state");
        if (st == "open") s.state = SwitchState::Open;
        else if (st == "closed") s.state = SwitchState::Closed;
        else cur.fail(path + ".state", "expected 'open' or 'closed'");
        const json& rc = cur.require(js, path, "remotely_controllable");
        if (!rc.is_boolean()) cur.fail(path + ".remotely_controllable", "expected a boolean");
        s.remotely_controllable = rc.get<bool>();
        try {
            g.add_switch(s);
        } catch (const SimError& e) {
            cur.fail(path, e.what());
        }
    }

    const json& assets = cur.require(doc, "$", "assets");
    if (!assets.is_array()) cur.fail("assets", "expected an array");
    for (std::size_t i = 0; i < assets.size(); ++i) {
        std::string path = "assets[" + std::to_string(i) + "]";
        const json& ja = assets[i];
        Asset a;
        a.id = cur.integer(ja, path, "id");
        a.bus = cur.integer(ja, path, "bus");
        a.owner = parse_owner(cur.require(ja, path, "owner"), cur, path + ".owner");
        a.kind = parse_asset_kind(cur.text(ja, path, "kind"), cur, path + ".kind");
        a.p_rating_kw = cur.number(ja, path, "p_rating");
        a.q_rating_kvar = cur.number_or(ja, path, "q_rating", 0.0);
        a.energy_capacity_kwh = cur.number_or(ja, path, "energy_capacity", 0.0);
        a.efficiency = cur.number_or(ja, path, "efficiency", 1.0);
        a.droop_gain_kw_per_hz = cur.number_or(ja, path, "droop_gain", 0.0);
        try {
            g.connect_asset(a);
        } catch (const SimError& e) {
            cur.fail(path, e.what());
        }
    }

    int sub = cur.integer(doc, "$", "substation_bus");
    try {
        g.set_substation_bus(sub);
    } catch (const SimError& e) {
        cur.fail("substation_bus", e.what());
    }
    return g;
}

GridModel load_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GridFileError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_grid_json(ss.str(), path);
}

double interp_clamped(const std::vector<std::pair<double, double>>& points, double x) {
    if (points.empty()) return 0.0;
    if (x <= points.front().first) return points.front().second;
    if (x >= points.back().first) return points.back().second;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (x <= points[i].first) {
            const auto& [x0, y0] = points[i - 1];
            const auto& [x1, y1] = points[i];
            double t = (x - x0) / (x1 - x0);
            return y0 + t * (y1 - y0);
        }
    }
    return points.back().second;
}

}  // namespace dgsim
