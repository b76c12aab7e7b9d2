#include "dgsim/power_flow.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace dgsim {

namespace {

using Complex = std::complex<double>;

struct IslandMatrix {
    std::vector<int> buses;          // ascending, index = matrix row
    std::map<int, int> index_of;
    Eigen::MatrixXcd ybus;
    std::vector<int> branch_ids;     // conducting branches inside the island
};

IslandMatrix build_ybus(const GridModel& grid, const IslandDescriptor& island) {
    IslandMatrix m;
    m.buses = island.buses;
    for (std::size_t i = 0; i < m.buses.size(); ++i) m.index_of[m.buses[i]] = int(i);
    const int n = int(m.buses.size());
    m.ybus = Eigen::MatrixXcd::Zero(n, n);
    m.branch_ids = grid.conducting_branches_in(island);
    for (int brid : m.branch_ids) {
        const Branch& br = grid.branch(brid);
        Complex y = 1.0 / Complex(br.resistance, br.reactance);
        double t = br.tap_ratio();
        int f = m.index_of.at(br.from_bus);
        int to = m.index_of.at(br.to_bus);
        m.ybus(f, f) += y / (t * t);
        m.ybus(f, to) += -y / t;
        m.ybus(to, f) += -y / t;
        m.ybus(to, to) += y;
    }
    return m;
}

}  // namespace

PowerFlowSolution solve_island(const GridModel& grid, const IslandDescriptor& island,
                               const InjectionSet& injections, const SlackSpec& slack) {
    if (!island.contains(slack.bus))
        throw IslandDeadError("slack bus " + std::to_string(slack.bus) + " not in island");

    IslandMatrix m = build_ybus(grid, island);
    const int n = int(m.buses.size());
    const int s = m.index_of.at(slack.bus);

    Eigen::VectorXd vmag = Eigen::VectorXd::Ones(n);  // flat start
    Eigen::VectorXd ang = Eigen::VectorXd::Zero(n);
    vmag(s) = slack.v_pu;

    Eigen::VectorXd p_spec(n), q_spec(n);
    for (int i = 0; i < n; ++i) {
        p_spec(i) = kw_to_pu(injections.p(m.buses[i]));
        q_spec(i) = kw_to_pu(injections.q(m.buses[i]));
    }

    const Eigen::MatrixXd G = m.ybus.real();
    const Eigen::MatrixXd B = m.ybus.imag();

    // unknown ordering: angles of non-slack buses, then magnitudes
    std::vector<int> pq;
    for (int i = 0; i < n; ++i)
        if (i != s) pq.push_back(i);
    const int nu = int(pq.size());

    PowerFlowSolution sol;
    Eigen::VectorXd p_calc(n), q_calc(n);

    auto compute_pq = [&]() {
        for (int i = 0; i < n; ++i) {
            double pi = 0.0, qi = 0.0;
            for (int j = 0; j < n; ++j) {
                double th = ang(i) - ang(j);
                double c = std::cos(th), si = std::sin(th);
                pi += vmag(i) * vmag(j) * (G(i, j) * c + B(i, j) * si);
                qi += vmag(i) * vmag(j) * (G(i, j) * si - B(i, j) * c);
            }
            p_calc(i) = pi;
            q_calc(i) = qi;
        }
    };

    for (int iter = 1; iter <= kPfMaxIterations; ++iter) {
        compute_pq();
        Eigen::VectorXd mism(2 * nu);
        for (int k = 0; k < nu; ++k) {
            mism(k) = p_spec(pq[k]) - p_calc(pq[k]);
            mism(nu + k) = q_spec(pq[k]) - q_calc(pq[k]);
        }
        sol.iterations = iter;
        sol.max_mismatch_pu = nu == 0 ? 0.0 : mism.lpNorm<Eigen::Infinity>();
        if (sol.max_mismatch_pu <= kPfTolerancePu) {
            sol.converged = true;
            break;
        }
        if (iter == kPfMaxIterations) break;

        Eigen::MatrixXd jac(2 * nu, 2 * nu);
        for (int a = 0; a < nu; ++a) {
            int i = pq[a];
            for (int b = 0; b < nu; ++b) {
                int j = pq[b];
                if (i == j) {
                    jac(a, b) = -q_calc(i) - B(i, i) * vmag(i) * vmag(i);
                    jac(a, nu + b) = p_calc(i) / vmag(i) + G(i, i) * vmag(i);
                    jac(nu + a, b) = p_calc(i) - G(i, i) * vmag(i) * vmag(i);
                    jac(nu + a, nu + b) = q_calc(i) / vmag(i) - B(i, i) * vmag(i);
                } else {
                    double th = ang(i) - ang(j);
                    double c = std::cos(th), si = std::sin(th);
                    double vv = vmag(i) * vmag(j);
                    jac(a, b) = vv * (G(i, j) * si - B(i, j) * c);
                    jac(a, nu + b) = vmag(i) * (G(i, j) * c + B(i, j) * si);
                    jac(nu + a, b) = -vv * (G(i, j) * c + B(i, j) * si);
                    jac(nu + a, nu + b) = vmag(i) * (G(i, j) * si - B(i, j) * c);
                }
            }
        }
        Eigen::VectorXd dx = jac.partialPivLu().solve(mism);
        if (!dx.allFinite()) break;  // singular; leave unconverged
        for (int k = 0; k < nu; ++k) {
            ang(pq[k]) += dx(k);
            vmag(pq[k]) += dx(nu + k);
        }
    }

    for (int i = 0; i < n; ++i) {
        sol.v_pu[m.buses[i]] = vmag(i);
        sol.angle_rad[m.buses[i]] = ang(i);
    }

    if (sol.converged) {
        double loss_pu = 0.0;
        for (int brid : m.branch_ids) {
            const Branch& br = grid.branch(brid);
            Complex y = 1.0 / Complex(br.resistance, br.reactance);
            double t = br.tap_ratio();
            int f = m.index_of.at(br.from_bus);
            int to = m.index_of.at(br.to_bus);
            Complex vf = std::polar(vmag(f), ang(f));
            Complex vt = std::polar(vmag(to), ang(to));
            Complex i_from = vf * (y / (t * t)) - vt * (y / t);
            Complex i_to = vt * y - vf * (y / t);
            Complex s_from = vf * std::conj(i_from);
            Complex s_to = vt * std::conj(i_to);
            BranchFlow flow;
            flow.p_from_kw = pu_to_kw(s_from.real());
            flow.q_from_kvar = pu_to_kw(s_from.imag());
            flow.p_to_kw = pu_to_kw(s_to.real());
            flow.q_to_kvar = pu_to_kw(s_to.imag());
            flow.current_pu = std::max(std::abs(i_from), std::abs(i_to));
            flow.loading = std::max(std::abs(s_from), std::abs(s_to)) / br.thermal_limit;
            sol.flows[brid] = flow;
            loss_pu += s_from.real() + s_to.real();
        }
        sol.losses_kw = pu_to_kw(loss_pu);
        compute_pq();
        sol.slack_p_kw = pu_to_kw(p_calc(s));
        sol.slack_q_kvar = pu_to_kw(q_calc(s));
    }
    return sol;
}

std::vector<LimitViolation> check_limits(const GridModel& grid, const IslandDescriptor& island,
                                         const PowerFlowSolution& solution) {
    if (!solution.converged) throw SimError("check_limits: solution did not converge");
    std::vector<LimitViolation> out;
    for (int bid : island.buses) {
        const Bus& b = grid.bus(bid);
        double v = solution.v_pu.at(bid);
        if (v < b.v_min) out.push_back({ViolationKind::Undervoltage, bid, b.v_min - v, 0});
        else if (v > b.v_max) out.push_back({ViolationKind::Overvoltage, bid, v - b.v_max, 0});
    }
    for (const auto& [brid, flow] : solution.flows) {
        if (flow.loading > 1.0) out.push_back({ViolationKind::Thermal, brid, flow.loading - 1.0, 0});
    }
    return out;
}

double island_frequency(const GridModel& grid, const IslandDescriptor& island, double deficit_kw) {
    if (island.substation_connected) return kNominalFrequencyHz;
    double gain_sum = 0.0;
    for (const auto& [aid, a] : grid.assets()) {
        if (a.kind == AssetKind::GridFormingInverter && island.contains(a.bus))
            gain_sum += a.droop_gain_kw_per_hz;
    }
    if (gain_sum <= 0.0)
        throw IslandDeadError("island has no grid-forming unit");
    double f = kNominalFrequencyHz - deficit_kw / gain_sum;
    return std::clamp(f, 45.0, 55.0);
}

}  // namespace dgsim
