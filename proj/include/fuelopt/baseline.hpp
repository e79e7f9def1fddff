#pragma once

// Reference dispatchers for small instances.
//
// brute_force_dispatch enumerates generator outputs on a uniform MW grid. The
// last generator absorbs the balance. Networks whose lines all have g = 0 are
// treated as a copper plate. Lossy networks with at most two lines are solved
// exactly with a Newton-Raphson power flow at every grid point, with the
// generator-bus voltages enumerated on their own grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fuelopt/errors.hpp"
#include "fuelopt/netmodel.hpp"

namespace fuelopt::baseline {

struct OracleOptions {
    double step_mw = 1e-3;
    double v_step = 0.005;  // voltage grid at generator buses, lossy networks only
    std::uint64_t max_points = 100'000'000;
};

struct OracleResult {
    bool feasible = false;
    std::vector<std::vector<double>> p_mw;        // [t][gen]
    std::vector<std::vector<double>> storage_mw;  // [t][storage]
    double fuel_liters = std::numeric_limits<double>::infinity();
    std::uint64_t evaluated = 0;
};

/// Throws DomainError unless the case is small enough for exhaustive search.
inline void check_tiny(const NetworkCase& cs) {
    if (cs.buses.size() > 3) throw DomainError("oracle supports at most 3 buses");
    if (cs.generators.size() > 3) throw DomainError("oracle supports at most 3 generators");
    if (cs.generators.empty()) throw DomainError("oracle needs at least one generator");
    if (cs.horizon() > 2) throw DomainError("oracle supports at most 2 timesteps");
    if (cs.storage.size() > 1) throw DomainError("oracle supports at most one storage unit");
}

inline bool is_lossless(const NetworkCase& cs) {
    return std::all_of(cs.lines.begin(), cs.lines.end(), [](const LineSpec& l) { return l.g == 0.0; });
}

namespace detail {

inline std::vector<double> levels(double lo, double hi, double step) {
    std::vector<double> out;
    if (hi < lo) return out;
    const auto n = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::int64_t k = 0; k <= n; ++k) out.push_back(lo + static_cast<double>(k) * step);
    return out;
}

struct Network {
    Eigen::MatrixXd G, B;
    std::size_t slack = 0;
    std::vector<bool> has_gen;
};

inline Network network(const NetworkCase& cs) {
    const auto n = cs.buses.size();
    Network net{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n), 0, std::vector<bool>(n)};
    for (const auto& l : cs.lines) {
        const auto i = cs.require_bus(l.from_bus), k = cs.require_bus(l.to_bus);
        net.G(i, i) += l.g;
        net.G(k, k) += l.g;
        net.B(i, i) -= l.b;
        net.B(k, k) -= l.b;
        net.G(i, k) -= l.g;
        net.G(k, i) -= l.g;
        net.B(i, k) += l.b;
        net.B(k, i) += l.b;
    }
    for (const auto& g : cs.generators) net.has_gen[cs.require_bus(g.bus)] = true;
    net.slack = cs.require_bus(cs.generators.back().bus);
    return net;
}

struct FlowState {
    Eigen::VectorXd v, theta, p, q;  // per-unit injections
};

inline void injections(const Network& net, FlowState& s) {
    const auto n = s.v.size();
    s.p = Eigen::VectorXd::Zero(n);
    s.q = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k) {
            const double d = s.theta[i] - s.theta[k];
            const double vv = s.v[i] * s.v[k];
            s.p[i] += vv * (net.G(i, k) * std::cos(d) + net.B(i, k) * std::sin(d));
            s.q[i] += vv * (net.G(i, k) * std::sin(d) - net.B(i, k) * std::cos(d));
        }
}

/// Solves for angles at non-slack buses and magnitudes at buses without a
/// generator, given the specified injections. Returns false on divergence.
inline bool newton(const Network& net, const Eigen::VectorXd& p_spec, const Eigen::VectorXd& q_spec, FlowState& s) {
    const auto n = s.v.size();
    std::vector<Eigen::Index> ang, mag;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<std::size_t>(i) != net.slack) ang.push_back(i);
        if (!net.has_gen[i]) mag.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(ang.size() + mag.size());
    if (m == 0) {
        injections(net, s);
        return true;
    }
    auto mismatch = [&](FlowState& st) {
        injections(net, st);
        Eigen::VectorXd f(m);
        Eigen::Index r = 0;
        for (auto i : ang) f[r++] = st.p[i] - p_spec[i];
        for (auto i : mag) f[r++] = st.q[i] - q_spec[i];
        return f;
    };
    auto apply = [&](FlowState& st, const Eigen::VectorXd& dx) {
        Eigen::Index r = 0;
        for (auto i : ang) st.theta[i] += dx[r++];
        for (auto i : mag) st.v[i] += dx[r++];
    };
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd f = mismatch(s);
        if (f.lpNorm<Eigen::Infinity>() < 1e-12) return true;
        Eigen::MatrixXd J(m, m);
        for (Eigen::Index c = 0; c < m; ++c) {
            const double h = 1e-7;
            Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
            e[c] = h;
            FlowState plus = s, minus = s;
            apply(plus, e);
            apply(minus, -e);
            J.col(c) = (mismatch(plus) - mismatch(minus)) / (2.0 * h);
        }
        const Eigen::VectorXd dx = J.fullPivLu().solve(-f);
        if (!dx.allFinite()) return false;
        apply(s, dx);
        if ((s.v.array() <= 0.0).any()) return false;
    }
    return mismatch(s).lpNorm<Eigen::Infinity>() < 1e-9;
}

/// One feasible operating point of a single step.
struct StepPoint {
    std::vector<double> p;
    double fuel = 0.0;
};

struct StepSearch {
    const NetworkCase& cs;
    OracleOptions opt;
    std::uint64_t* evaluated;

    double step_fuel(const std::vector<double>& p) const {
        double f = 0.0;
        for (std::size_t g = 0; g < p.size(); ++g)
            f += fuel_rate(cs.generators[g], p[g], cs.system.alpha_mwh_per_liter) * cs.dt();
        return f;
    }

    /// All feasible points at step t with the given storage output.
    std::vector<StepPoint> enumerate(std::size_t t, const std::vector<double>& storage) const {
        std::vector<StepPoint> out;
        const auto ng = cs.generators.size();
        std::vector<std::vector<double>> grids;
        for (std::size_t g = 0; g + 1 < ng; ++g)
            grids.push_back(levels(cs.generators[g].p_min_mw, cs.generators[g].p_max_mw, opt.step_mw));
        const bool lossless = is_lossless(cs);
        std::optional<Network> net;
        std::vector<std::size_t> vbus;
        std::vector<std::vector<double>> vgrids;
        if (!lossless) {
            net = network(cs);
            for (std::size_t i = 0; i < cs.buses.size(); ++i)
                if (net->has_gen[i]) {
                    vbus.push_back(i);
                    vgrids.push_back(levels(cs.buses[i].v_min, cs.buses[i].v_max, opt.v_step));
                }
        }
        std::vector<std::size_t> idx(grids.size(), 0);
        std::vector<double> p(ng);
        for (;;) {
            bool empty = false;
            for (std::size_t g = 0; g + 1 < ng; ++g) {
                if (grids[g].empty()) empty = true;
                else p[g] = grids[g][idx[g]];
            }
            if (empty) break;
            if (lossless)
                copper_plate(t, storage, p, out);
            else
                lossy(t, storage, *net, vbus, vgrids, p, out);
            std::size_t d = 0;
            while (d < idx.size() && ++idx[d] == grids[d].size()) idx[d++] = 0;
            if (d == idx.size()) break;
        }
        return out;
    }

    void copper_plate(std::size_t t, const std::vector<double>& storage, std::vector<double> p,
                      std::vector<StepPoint>& out) const {
        ++*evaluated;
        double rest = cs.total_load_mw(static_cast<int>(t));
        for (double s : storage) rest -= s;
        for (std::size_t g = 0; g + 1 < p.size(); ++g) rest -= p[g];
        const auto& last = cs.generators.back();
        if (rest < last.p_min_mw - 1e-9 || rest > last.p_max_mw + 1e-9) return;
        p.back() = std::clamp(rest, last.p_min_mw, last.p_max_mw);
        out.push_back({p, step_fuel(p)});
    }

    void lossy(std::size_t t, const std::vector<double>& storage, const Network& net,
               const std::vector<std::size_t>& vbus, const std::vector<std::vector<double>>& vgrids,
               std::vector<double> p, std::vector<StepPoint>& out) const {
        const auto n = cs.buses.size();
        const double base = cs.system.mva_base;
        const auto& loads = cs.loads[t];
        // Specified injections with the slack generator left out.
        Eigen::VectorXd p_spec = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        Eigen::VectorXd q_spec = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            p_spec[i] = -loads[i].p_mw / base;
            q_spec[i] = -loads[i].q_mvar / base;
        }
        for (std::size_t g = 0; g + 1 < p.size(); ++g) p_spec[cs.require_bus(cs.generators[g].bus)] += p[g] / base;
        for (std::size_t k = 0; k < cs.storage.size(); ++k) p_spec[cs.require_bus(cs.storage[k].bus)] += storage[k] / base;

        std::vector<std::size_t> vi(vgrids.size(), 0);
        for (;;) {
            bool empty = false;
            FlowState s{Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)),
                        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)), {}, {}};
            for (std::size_t j = 0; j < vbus.size(); ++j) {
                if (vgrids[j].empty()) empty = true;
                else s.v[static_cast<Eigen::Index>(vbus[j])] = vgrids[j][vi[j]];
            }
            if (empty) break;
            ++*evaluated;
            if (newton(net, p_spec, q_spec, s)) accept(t, storage, p, s, net, out);
            std::size_t d = 0;
            while (d < vi.size() && ++vi[d] == vgrids[d].size()) vi[d++] = 0;
            if (d == vi.size()) break;
        }
    }

    void accept(std::size_t t, const std::vector<double>& storage, std::vector<double> p, const FlowState& s,
                const Network& net, std::vector<StepPoint>& out) const {
        const double base = cs.system.mva_base;
        const double tol = 1e-7;
        const auto n = cs.buses.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double v = s.v[static_cast<Eigen::Index>(i)];
            if (v < cs.buses[i].v_min - tol || v > cs.buses[i].v_max + tol) return;
        }
        // Slack generator output from the slack-bus balance.
        const auto& last = cs.generators.back();
        const auto sb = net.slack;
        double slack_p = s.p[static_cast<Eigen::Index>(sb)] * base + cs.loads[t][sb].p_mw;
        for (std::size_t g = 0; g + 1 < p.size(); ++g)
            if (cs.require_bus(cs.generators[g].bus) == sb) slack_p -= p[g];
        for (std::size_t k = 0; k < cs.storage.size(); ++k)
            if (cs.require_bus(cs.storage[k].bus) == sb) slack_p -= storage[k];
        if (slack_p < last.p_min_mw - tol || slack_p > last.p_max_mw + tol) return;
        p.back() = std::clamp(slack_p, last.p_min_mw, last.p_max_mw);
        // Reactive output per generator bus must fit the combined limits.
        for (std::size_t i = 0; i < n; ++i) {
            if (!net.has_gen[i]) continue;
            const double q = s.q[static_cast<Eigen::Index>(i)] * base + cs.loads[t][i].q_mvar;
            double lo = 0.0, hi = 0.0;
            for (const auto& g : cs.generators)
                if (cs.require_bus(g.bus) == i) lo += g.q_min_mvar, hi += g.q_max_mvar;
            if (q < lo - tol || q > hi + tol) return;
        }
        for (const auto& l : cs.lines) {
            const auto i = cs.require_bus(l.from_bus), k = cs.require_bus(l.to_bus);
            const double vi = s.v[static_cast<Eigen::Index>(i)], vk = s.v[static_cast<Eigen::Index>(k)];
            const double d = s.theta[static_cast<Eigen::Index>(i)] - s.theta[static_cast<Eigen::Index>(k)];
            if (d < cs.buses[i].theta_min - cs.buses[k].theta_max - tol ||
                d > cs.buses[i].theta_max - cs.buses[k].theta_min + tol)
                return;
            const double gik = -l.g, bik = l.b;
            const double wr = vi * vk * std::cos(d), wi = vi * vk * std::sin(d);
            const double pf = vi * vi * gik - (gik * wr + bik * wi);
            const double pt = vk * vk * gik - (gik * wr - bik * wi);
            const double qf = -vi * vi * bik + (bik * wr - gik * wi);
            const double qt = -vk * vk * bik + (bik * wr + gik * wi);
            if (std::max(std::abs(pf), std::abs(pt)) * base > l.p_max_mw + tol) return;
            if (std::max(std::abs(qf), std::abs(qt)) * base > l.q_max_mvar + tol) return;
        }
        out.push_back({p, step_fuel(p)});
    }
};

inline bool ramp_ok(const NetworkCase& cs, const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t g = 0; g < a.size(); ++g) {
        const double d = b[g] - a[g];
        if (d > cs.generators[g].ramp_up_mw + 1e-9 || d < -cs.generators[g].ramp_down_mw - 1e-9) return false;
    }
    return true;
}

/// Grid points the search would touch, before any pruning.
inline double grid_size(const NetworkCase& cs, const OracleOptions& opt) {
    double n = 1.0;
    for (std::size_t g = 0; g + 1 < cs.generators.size(); ++g)
        n *= static_cast<double>(levels(cs.generators[g].p_min_mw, cs.generators[g].p_max_mw, opt.step_mw).size());
    if (!is_lossless(cs))
        for (const auto& b : cs.buses) n *= static_cast<double>(levels(b.v_min, b.v_max, opt.v_step).size());
    if (!cs.storage.empty()) {
        const auto& s = cs.storage.front();
        n *= static_cast<double>(levels(-s.p_charge_max_mw, s.p_discharge_max_mw, opt.step_mw).size());
    }
    return n * cs.horizon();
}

}  // namespace detail

/// Exhaustive grid search for the fuel-optimal schedule. Ties keep the
/// lexicographically first schedule in enumeration order.
inline OracleResult brute_force_dispatch(const NetworkCase& cs, const OracleOptions& opt = {}) {
    check_tiny(cs);
    if (!(opt.step_mw > 0.0) || !(opt.v_step > 0.0)) throw DomainError("grid step must be positive");
    if (!is_lossless(cs) && cs.lines.size() > 2)
        throw DomainError("lossy oracle supports at most 2 lines");
    if (detail::grid_size(cs, opt) > static_cast<double>(opt.max_points))
        throw DomainError("oracle grid exceeds the point budget");

    OracleResult best;
    const detail::StepSearch search{cs, opt, &best.evaluated};
    const auto T = static_cast<std::size_t>(cs.horizon());

    // Storage schedules: idle, or s at t=0 and -s at t=1 (net zero).
    std::vector<std::vector<std::vector<double>>> storage_plans;
    if (cs.storage.empty()) {
        storage_plans.push_back(std::vector<std::vector<double>>(T));
    } else {
        const auto& st = cs.storage.front();
        for (double s : detail::levels(-st.p_charge_max_mw, st.p_discharge_max_mw, opt.step_mw)) {
            if (std::abs(s) < 0.5 * opt.step_mw) s = 0.0;
            if (T == 1 && s != 0.0) continue;
            if (T == 2 && -s < -st.p_charge_max_mw - 1e-12) continue;
            if (T == 2 && -s > st.p_discharge_max_mw + 1e-12) continue;
            const double e1 = st.e0_mwh - st.efficiency * s * cs.dt();
            if (e1 < st.soc_min * st.capacity_mwh - 1e-9 || e1 > st.soc_max * st.capacity_mwh + 1e-9) continue;
            std::vector<std::vector<double>> plan{{s}};
            if (T == 2) plan.push_back({-s});
            storage_plans.push_back(std::move(plan));
        }
    }

    for (const auto& plan : storage_plans) {
        std::vector<std::vector<detail::StepPoint>> steps;
        for (std::size_t t = 0; t < T; ++t) steps.push_back(search.enumerate(t, plan[t]));
        if (T == 1) {
            for (const auto& a : steps[0])
                if (a.fuel < best.fuel_liters) {
                    best.fuel_liters = a.fuel;
                    best.p_mw = {a.p};
                    best.storage_mw = plan;
                    best.feasible = true;
                }
            continue;
        }
        // Two steps: sort the second step by fuel so each first-step point
        // stops at its first ramp-compatible partner.
        std::vector<std::size_t> order(steps[1].size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return steps[1][x].fuel < steps[1][y].fuel; });
        for (const auto& a : steps[0]) {
            if (order.empty() || a.fuel + steps[1][order.front()].fuel >= best.fuel_liters) continue;
            for (std::size_t j : order) {
                const auto& b = steps[1][j];
                if (a.fuel + b.fuel >= best.fuel_liters) break;
                if (!detail::ramp_ok(cs, a.p, b.p)) continue;
                best.fuel_liters = a.fuel + b.fuel;
                best.p_mw = {a.p, b.p};
                best.storage_mw = plan;
                best.feasible = true;
                break;
            }
        }
    }
    if (!best.feasible) best.fuel_liters = std::numeric_limits<double>::infinity();
    return best;
}

struct SharingResult {
    std::vector<std::vector<double>> p_mw;  // [t][gen]
    std::vector<double> per_unit;           // common loading per step
    double fuel_liters = 0.0;
};

/// Loads every unit at the same fraction of its base so the total meets the
/// load. Lossless, storage idle. Throws DomainError naming the first step
/// where the common loading breaks a unit limit.
inline SharingResult equal_sharing_dispatch(const NetworkCase& cs) {
    SharingResult out;
    double base = 0.0;
    for (const auto& g : cs.generators) base += g.p_base_mw;
    if (!(base > 0.0)) throw DomainError("equal sharing needs positive generator bases");
    for (int t = 0; t < cs.horizon(); ++t) {
        const double load = cs.total_load_mw(t);
        const double p = load / base;
        std::vector<double> row;
        for (const auto& g : cs.generators) {
            const double mw = p * g.p_base_mw;
            if (mw < g.p_min_mw - 1e-9 || mw > g.p_max_mw + 1e-9)
                throw DomainError("equal sharing infeasible at t=" + std::to_string(t) + " for generator '" + g.id +
                                  "'");
            row.push_back(std::clamp(mw, g.p_min_mw, g.p_max_mw));
            out.fuel_liters += fuel_rate(g, row.back(), cs.system.alpha_mwh_per_liter) * cs.dt();
        }
        out.p_mw.push_back(std::move(row));
        out.per_unit.push_back(p);
    }
    return out;
}

}  // namespace fuelopt::baseline
