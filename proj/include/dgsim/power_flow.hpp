#pragma once

#include <map>
#include <optional>
#include <vector>

#include "dgsim/grid_model.hpp"

namespace dgsim {

// Net injections per bus, kW / kvar, generation positive. Buses without an
// entry inject zero.
struct InjectionSet {
    std::map<int, double> p_kw;
    std::map<int, double> q_kvar;

    void add(int bus, double p, double q) {
        p_kw[bus] += p;
        q_kvar[bus] += q;
    }
    double p(int bus) const {
        auto it = p_kw.find(bus);
        return it == p_kw.end() ? 0.0 : it->second;
    }
    double q(int bus) const {
        auto it = q_kvar.find(bus);
        return it == q_kvar.end() ? 0.0 : it->second;
    }
};

struct BranchFlow {
    double p_from_kw = 0.0;
    double q_from_kvar = 0.0;
    double p_to_kw = 0.0;
    double q_to_kvar = 0.0;
    double current_pu = 0.0;  // max of the two ends
    double loading = 0.0;     // apparent power / thermal limit
};

struct PowerFlowSolution {
    bool converged = false;
    int iterations = 0;
    std::map<int, double> v_pu;       // per-bus voltage magnitude
    std::map<int, double> angle_rad;  // per-bus voltage angle
    std::map<int, BranchFlow> flows;  // per conducting branch in the island
    double losses_kw = 0.0;
    double slack_p_kw = 0.0;  // net injection the slack had to provide
    double slack_q_kvar = 0.0;
    double max_mismatch_pu = 0.0;
};

enum class ViolationKind { Undervoltage, Overvoltage, Thermal };

struct LimitViolation {
    ViolationKind kind;
    int element_id = 0;   // bus for voltage kinds, branch for thermal
    double magnitude = 0.0;  // pu excess beyond the bound
    int duration_so_far = 0; // ticks, filled by the caller tracking history
};

struct SlackSpec {
    int bus = 0;
    double v_pu = 1.0;
};

constexpr double kPfTolerancePu = 1e-8;
constexpr int kPfMaxIterations = 30;

// Newton-Raphson AC power flow for one island. The slack bus holds the
// designated voltage at angle zero; every other bus is PQ.
// Throws IslandDeadError when the slack bus is not part of the island.
PowerFlowSolution solve_island(const GridModel& grid, const IslandDescriptor& island,
                               const InjectionSet& injections, const SlackSpec& slack);

// One entry per violated bound; buses (ascending id) before branches.
std::vector<LimitViolation> check_limits(const GridModel& grid, const IslandDescriptor& island,
                                         const PowerFlowSolution& solution);

// Quasi-static droop law for an islanded section:
//   f = 50 - deficit / sum(droop gains), clamped to [45, 55] Hz.
// deficit_kw > 0 means the grid-forming units must inject extra power.
// Substation-connected islands always report exactly 50 Hz.
double island_frequency(const GridModel& grid, const IslandDescriptor& island, double deficit_kw);

}  // namespace dgsim
