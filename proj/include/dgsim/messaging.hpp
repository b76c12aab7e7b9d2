#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgsim/common.hpp"
#include "dgsim/grid_model.hpp"

namespace dgsim {

using Json = nlohmann::json;

// Horizon-indexed value list: values[h] is X(k+h|k).
struct Trajectory {
    int start_tick = 0;
    int horizon = 0;
    std::vector<double> values;  // length horizon + 1

    static Trajectory constant(int k, int h, double v) {
        return {k, h, std::vector<double>(std::size_t(h) + 1, v)};
    }
    double at(int h) const { return values.at(std::size_t(h)); }
    bool well_formed() const { return values.size() == std::size_t(horizon) + 1; }
};

// Output set of one HEMS: flexibility envelopes over the horizon plus the
// point measurements at its grid connection point.
struct HemsOutput {
    int hems_id = 0;
    int tick = 0;
    Trajectory p_min, p_max;  // kW, net injection (generation positive)
    Trajectory q_min, q_max;  // kvar
    Trajectory w_min, w_max;  // kWh, reachable stored energy band
    double p_kw = 0.0;
    double q_kvar = 0.0;
    double w_kwh = 0.0;
    double i_pu = 0.0;
    double v_pu = 1.0;
    double f_hz = kNominalFrequencyHz;
    bool infeasible = false;  // last granted range could not be realized

    // empty string when all invariants hold, else a description
    std::string invariant_error() const;
};

// Input set of one HEMS: scalar parameter ranges for the current tick.
struct HemsInput {
    int hems_id = 0;
    int tick = 0;
    double p_min_kw = 0.0, p_max_kw = 0.0;
    double q_min_kvar = 0.0, q_max_kvar = 0.0;
    double w_min_kwh = 0.0, w_max_kwh = 0.0;

    std::string invariant_error() const;
};

struct GeneratorSetpoint {
    double p_kw = 0.0;
    double q_kvar = 0.0;
};

struct DmsSetpoints {
    int tick = 0;
    std::optional<GeneratorSetpoint> transformer;  // P_t*, Q_t* at the substation
    std::optional<int> tap;                        // transformer tap position
    std::map<int, GeneratorSetpoint> generators;   // by asset id
    std::vector<SwitchOp> switch_plan;
};

struct ElementReading {
    int element_id = 0;
    double p_kw = 0.0;
    double q_kvar = 0.0;
    double i_pu = 0.0;
    double v_pu = 0.0;
};

struct GridMeasurements {
    int tick = 0;
    ElementReading transformer;               // substation transformer readings
    double frequency_hz = kNominalFrequencyHz;
    std::map<int, ElementReading> generators; // DMS-level generators by asset id
    std::map<int, SwitchState> switch_states;
};

enum class IctLevel { High, Impaired, Unacceptable };

const char* to_string(IctLevel level);

struct LinkPattern {
    std::string sender = "*";
    std::string receiver = "*";
    bool matches(const std::string& s, const std::string& r) const {
        return (sender == "*" || sender == s) && (receiver == "*" || receiver == r);
    }
};

struct IctServiceLevel {
    IctLevel level = IctLevel::High;
    double loss_probability = 0.0;
    int latency_ticks = 0;
    std::vector<LinkPattern> applies_to;  // empty = all links

    static IctServiceLevel high() { return {IctLevel::High, 0.0, 0, {}}; }
    static IctServiceLevel impaired(double loss, int latency) {
        return {IctLevel::Impaired, loss, latency, {}};
    }
    static IctServiceLevel unacceptable() { return {IctLevel::Unacceptable, 1.0, 0, {}}; }

    std::string invariant_error() const;
};

struct IctScheduleEntry {
    int from_tick = 0;
    IctServiceLevel level;
};

// message type tags on the wire
namespace msg {
inline constexpr const char* kHemsOutput = "hems_output";
inline constexpr const char* kHemsInput = "hems_input";
inline constexpr const char* kDmsSetpoints = "dms_setpoints";
inline constexpr const char* kSwitchCommand = "switch_command";
inline constexpr const char* kGridMeasurements = "grid_measurements";
inline constexpr const char* kProtectionEvent = "protection_event";
inline constexpr const char* kMembership = "membership";
inline constexpr const char* kGridModelChanged = "grid_model_changed";
inline constexpr const char* kIslandDirective = "island_directive";
inline constexpr const char* kResyncClose = "resync_close";
}  // namespace msg

struct BusMessage {
    int send_tick = 0;
    std::uint64_t seq = 0;  // monotone per sender
    std::string sender;
    std::string recipient;  // agent id or "*" broadcast
    std::string type;
    Json payload;
};

struct AgentDescriptor {
    std::string id;
    std::string kind;  // "dms", "hems", "grid", "switch", ...
};

// Log hook: event is one of publish/deliver/drop/expire.
using BusLogFn = std::function<void(const std::string& event, const BusMessage&, int tick)>;

// Simulation message bus with the service-level impairment model. Loss and
// latency are drawn from one dedicated seeded stream per (sender, receiver)
// link, so adding a link never perturbs another link's pattern. Links are
// FIFO: a message never overtakes an earlier one from the same sender.
class SimulationBus {
public:
    explicit SimulationBus(std::uint64_t seed, int ttl_ticks = kDefaultTtl);

    void register_agent(int tick, const AgentDescriptor& agent);
    void deregister_agent(int tick, const std::string& agent_id);
    bool is_registered(const std::string& agent_id) const;
    const std::map<std::string, AgentDescriptor>& agents() const { return agents_; }

    void publish(int tick, const std::string& sender, const std::string& recipient,
                 const std::string& type, Json payload);

    // Hands out every message due at `tick`, ordered by (due tick, sender, seq).
    std::vector<BusMessage> deliver(int tick);

    void set_schedule(std::vector<IctScheduleEntry> schedule);
    IctServiceLevel level_for(const std::string& sender, const std::string& receiver,
                              int tick) const;

    void set_log_fn(BusLogFn fn) { log_fn_ = std::move(fn); }
    int ttl() const { return ttl_; }
    std::size_t pending_count() const;

    static constexpr int kDefaultTtl = 5;

private:
    struct Pending {
        BusMessage msg;
        bool fated = false;
        int due = 0;
    };
    using LinkKey = std::pair<std::string, std::string>;

    void log(const std::string& event, const BusMessage& m, int tick) const {
        if (log_fn_) log_fn_(event, m, tick);
    }
    SplitMix64& link_stream(const LinkKey& key);

    std::uint64_t seed_;
    int ttl_;
    std::map<std::string, AgentDescriptor> agents_;
    std::map<std::string, std::uint64_t> next_seq_;
    std::map<LinkKey, std::deque<Pending>> links_;
    std::map<LinkKey, SplitMix64> streams_;
    std::vector<IctScheduleEntry> schedule_;
    BusLogFn log_fn_;
};

// --- wire (de)serialization -------------------------------------------------

void to_json(Json& j, const Trajectory& t);
void from_json(const Json& j, Trajectory& t);
void to_json(Json& j, const HemsOutput& o);
void from_json(const Json& j, HemsOutput& o);
void to_json(Json& j, const HemsInput& in);
void from_json(const Json& j, HemsInput& in);
void to_json(Json& j, const DmsSetpoints& s);
void from_json(const Json& j, DmsSetpoints& s);
void to_json(Json& j, const GridMeasurements& m);
void from_json(const Json& j, GridMeasurements& m);
void to_json(Json& j, const SwitchOp& op);
void from_json(const Json& j, SwitchOp& op);

}  // namespace dgsim
