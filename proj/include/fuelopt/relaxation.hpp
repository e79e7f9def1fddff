#pragma once

// Convex relaxation of the multi-period AC dispatch problem.
//
// Voltages are lifted to u_i = V_i^2/sqrt(2), W_R = V_i V_k cos(theta_ik),
// W_I = V_i V_k sin(theta_ik). Power balance and line flows become linear in
// the lifted variables, the rank condition is relaxed to the rotated cone
// W_R^2 + W_I^2 <= 2 u_i u_k, and theta_ik = atan(W_I/W_R) is replaced by its
// first-order expansion around a linearization point.
//
// Dispatch quantities (P, Q, storage power and energy) are in MW, MVAr and
// MWh. Network expressions are per-unit and scaled by the MVA base where they
// meet the dispatch.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "fuelopt/errors.hpp"
#include "fuelopt/fractional.hpp"
#include "fuelopt/netmodel.hpp"
#include "fuelopt/socp.hpp"

namespace fuelopt {

using socp::LinearTerm;
using Expression = std::vector<LinearTerm>;

inline double evaluate(const Expression& e, const std::vector<double>& x) {
    double v = 0.0;
    for (const auto& t : e) v += t.coef * x[t.var];
    return v;
}

// ---------------------------------------------------------------------------
// Lifted variables
// ---------------------------------------------------------------------------

struct LiftedPair {
    double u_from = 0.0;
    double u_to = 0.0;
    double wr = 0.0;
    double wi = 0.0;
};

inline LiftedPair lift_voltage(double v_from, double v_to, double theta) {
    return {v_from * v_from / std::numbers::sqrt2, v_to * v_to / std::numbers::sqrt2,
            v_from * v_to * std::cos(theta), v_from * v_to * std::sin(theta)};
}

struct WPoint {
    double wr = 1.0;
    double wi = 0.0;
};

/// Expansion point per timestep and line.
struct LinearizationPoint {
    std::vector<std::vector<WPoint>> at;  // [t][line]

    static LinearizationPoint flat(int horizon, std::size_t lines) {
        return {std::vector<std::vector<WPoint>>(static_cast<std::size_t>(horizon), std::vector<WPoint>(lines))};
    }
};

/// theta + coef_wr * W_R + coef_wi * W_I = rhs.
struct AngleRow {
    double coef_wr = 0.0;
    double coef_wi = 0.0;
    double rhs = 0.0;
};

inline constexpr double kMinExpansionNormSq = 1e-8;

inline AngleRow angle_linearization(const WPoint& q) {
    const double n = q.wr * q.wr + q.wi * q.wi;
    if (!(n >= kMinExpansionNormSq)) throw DegeneratePoint("angle linearization point too close to the origin");
    return {q.wi / n, -q.wr / n, std::atan2(q.wi, q.wr)};
}

/// Moves a solved point away from the origin so it can serve as the next
/// expansion point.
inline WPoint floor_point(WPoint p, double floor) {
    const double n = std::hypot(p.wr, p.wi);
    if (n >= floor) return p;
    if (n == 0.0) return {floor, 0.0};
    return {p.wr * floor / n, p.wi * floor / n};
}

// ---------------------------------------------------------------------------
// Admittance
// ---------------------------------------------------------------------------

/// Bus admittance diagonal. Off-diagonal entries of a line are G_ik = -g,
/// B_ik = b.
struct BusAdmittance {
    std::vector<double> g;
    std::vector<double> b;
};

inline BusAdmittance bus_admittance(const NetworkCase& cs) {
    BusAdmittance y{std::vector<double>(cs.buses.size()), std::vector<double>(cs.buses.size())};
    for (const auto& l : cs.lines) {
        for (int bus : {l.from_bus, l.to_bus}) {
            const auto i = cs.require_bus(bus);
            y.g[i] += l.g;
            y.b[i] -= l.b;
        }
    }
    return y;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Which units may produce and whether all producing units share one
/// per-unit loading.
struct DispatchRestrictions {
    std::vector<bool> dispatchable;  // per generator; empty means all
    bool equal_loading = false;

    bool allows(std::size_t gen) const { return dispatchable.empty() || dispatchable[gen]; }
};

/// Indices of every model variable, -1 where absent.
struct VariableMap {
    std::vector<std::vector<int>> u;      // [t][bus]
    std::vector<std::vector<int>> wr;     // [t][line]
    std::vector<std::vector<int>> wi;     // [t][line]
    std::vector<std::vector<int>> theta;  // [t][line]
    std::vector<std::vector<int>> p;      // [t][gen] MW
    std::vector<std::vector<int>> q;      // [t][gen] MVAr
    std::vector<std::vector<int>> pb;     // [t][storage] MW, discharge positive
    std::vector<std::vector<int>> e;      // [t][storage] MWh at end of step t
    // Epigraph variables per [t][gen]; w and v carry the auxiliary weights.
    std::vector<std::vector<int>> w;
    std::vector<std::vector<int>> s;
    std::vector<std::vector<int>> that;
    std::vector<std::vector<int>> v;
    std::vector<std::vector<int>> r;
};

/// A ratio term's position: generator and timestep.
struct TermIndex {
    std::size_t gen = 0;
    std::size_t t = 0;
};

struct RelaxedOPFModel : socp::ModelForm {
    VariableMap vars;
    std::vector<TermIndex> terms;  // order of the auxiliary pairs
    // Row ranges per family, for diagnostics.
    std::size_t balance_rows = 0;
    std::size_t flow_rows = 0;
    std::size_t angle_rows = 0;
    std::size_t storage_rows = 0;
    std::size_t ramp_rows = 0;
    std::size_t sharing_rows = 0;
};

/// Ratio terms in model order: every dispatchable generator at every step.
inline std::vector<TermIndex> ratio_terms(const NetworkCase& cs, const DispatchRestrictions& restrict = {}) {
    std::vector<TermIndex> out;
    for (std::size_t t = 0; t < static_cast<std::size_t>(cs.horizon()); ++t)
        for (std::size_t g = 0; g < cs.generators.size(); ++g)
            if (restrict.allows(g)) out.push_back({g, t});
    return out;
}

namespace detail {

inline std::vector<std::vector<int>> grid(int horizon, std::size_t n) {
    return std::vector<std::vector<int>>(static_cast<std::size_t>(horizon), std::vector<int>(n, -1));
}

inline double sq(double x) { return x * x; }

}  // namespace detail

/// Registers all variables with their box bounds: voltages, line angles,
/// generator limits (zero for excluded units), storage rates and SOC.
inline VariableMap operational_bounds(const NetworkCase& cs, socp::ConicProblem& p,
                                      const DispatchRestrictions& restrict = {}) {
    const int T = cs.horizon();
    const auto nb = cs.buses.size(), nl = cs.lines.size(), ng = cs.generators.size(), ns = cs.storage.size();
    VariableMap m;
    m.u = detail::grid(T, nb);
    m.wr = m.wi = m.theta = detail::grid(T, nl);
    m.p = m.q = detail::grid(T, ng);
    m.pb = m.e = detail::grid(T, ns);
    m.w = m.s = m.that = m.v = m.r = detail::grid(T, ng);
    for (std::size_t t = 0; t < static_cast<std::size_t>(T); ++t) {
        for (std::size_t i = 0; i < nb; ++i) {
            const auto& b = cs.buses[i];
            m.u[t][i] = p.add_var(detail::sq(b.v_min) / std::numbers::sqrt2, detail::sq(b.v_max) / std::numbers::sqrt2);
        }
        for (std::size_t l = 0; l < nl; ++l) {
            const auto& from = cs.buses[cs.require_bus(cs.lines[l].from_bus)];
            const auto& to = cs.buses[cs.require_bus(cs.lines[l].to_bus)];
            m.wr[t][l] = p.add_var();
            m.wi[t][l] = p.add_var();
            m.theta[t][l] = p.add_var(from.theta_min - to.theta_max, from.theta_max - to.theta_min);
        }
        for (std::size_t g = 0; g < ng; ++g) {
            const auto& gen = cs.generators[g];
            if (restrict.allows(g)) {
                m.p[t][g] = p.add_var(gen.p_min_mw, gen.p_max_mw);
                m.q[t][g] = p.add_var(gen.q_min_mvar, gen.q_max_mvar);
            } else {
                m.p[t][g] = p.add_var(0.0, 0.0);
                m.q[t][g] = p.add_var(0.0, 0.0);
            }
        }
        for (std::size_t k = 0; k < ns; ++k) {
            const auto& st = cs.storage[k];
            m.pb[t][k] = p.add_var(-st.p_charge_max_mw, st.p_discharge_max_mw);
            m.e[t][k] = p.add_var(st.soc_min * st.capacity_mwh, st.soc_max * st.capacity_mwh);
        }
    }
    return m;
}

/// -DR <= P^{t+1} - P^t <= UR for each generator with a finite limit.
inline std::size_t ramp_constraints(const NetworkCase& cs, const VariableMap& m, socp::ConicProblem& p) {
    std::size_t rows = 0;
    for (std::size_t t = 0; t + 1 < static_cast<std::size_t>(cs.horizon()); ++t)
        for (std::size_t g = 0; g < cs.generators.size(); ++g) {
            const auto& gen = cs.generators[g];
            if (std::isinf(gen.ramp_down_mw) && std::isinf(gen.ramp_up_mw)) continue;
            p.add_row({{m.p[t + 1][g], 1.0}, {m.p[t][g], -1.0}}, -gen.ramp_down_mw, gen.ramp_up_mw);
            ++rows;
        }
    return rows;
}

struct BusExpressions {
    std::vector<Expression> p;  // per-unit real injection per bus
    std::vector<Expression> q;  // per-unit reactive injection per bus
};

/// P_i = sqrt2 u_i G_ii + sum_k (G_ik W_R,ik + B_ik W_I,ik)
/// Q_i = -sqrt2 u_i B_ii + sum_k (G_ik W_I,ik - B_ik W_R,ik)
/// with W_I,ki = -W_I,ik for the to-bus end.
inline BusExpressions injection_expressions(const NetworkCase& cs, const VariableMap& m, std::size_t t) {
    const auto y = bus_admittance(cs);
    BusExpressions out{std::vector<Expression>(cs.buses.size()), std::vector<Expression>(cs.buses.size())};
    for (std::size_t i = 0; i < cs.buses.size(); ++i) {
        if (y.g[i] != 0.0) out.p[i].push_back({m.u[t][i], std::numbers::sqrt2 * y.g[i]});
        if (y.b[i] != 0.0) out.q[i].push_back({m.u[t][i], -std::numbers::sqrt2 * y.b[i]});
    }
    for (std::size_t l = 0; l < cs.lines.size(); ++l) {
        const auto& line = cs.lines[l];
        const double gik = -line.g, bik = line.b;
        const int wr = m.wr[t][l], wi = m.wi[t][l];
        const auto i = cs.require_bus(line.from_bus), k = cs.require_bus(line.to_bus);
        out.p[i].insert(out.p[i].end(), {{wr, gik}, {wi, bik}});
        out.q[i].insert(out.q[i].end(), {{wi, gik}, {wr, -bik}});
        out.p[k].insert(out.p[k].end(), {{wr, gik}, {wi, -bik}});
        out.q[k].insert(out.q[k].end(), {{wi, -gik}, {wr, -bik}});
    }
    return out;
}

struct LineExpressions {
    Expression p_from, q_from;  // flow measured at the from-bus
    Expression p_to, q_to;      // flow measured at the to-bus
};

/// P_ik = sqrt2 u_i G_ik - (G_ik W_R + B_ik W_I)
/// Q_ik = -sqrt2 u_i B_ik + (B_ik W_R - G_ik W_I)
inline std::vector<LineExpressions> line_flow_expressions(const NetworkCase& cs, const VariableMap& m, std::size_t t) {
    std::vector<LineExpressions> out;
    out.reserve(cs.lines.size());
    for (std::size_t l = 0; l < cs.lines.size(); ++l) {
        const auto& line = cs.lines[l];
        const double gik = -line.g, bik = line.b;
        const int wr = m.wr[t][l], wi = m.wi[t][l];
        const int ui = m.u[t][cs.require_bus(line.from_bus)], uk = m.u[t][cs.require_bus(line.to_bus)];
        const double s2 = std::numbers::sqrt2;
        out.push_back({{{ui, s2 * gik}, {wr, -gik}, {wi, -bik}},
                       {{ui, -s2 * bik}, {wr, bik}, {wi, -gik}},
                       {{uk, s2 * gik}, {wr, -gik}, {wi, bik}},
                       {{uk, -s2 * bik}, {wr, bik}, {wi, gik}}});
    }
    return out;
}

inline Expression scaled(Expression e, double k) {
    for (auto& t : e) t.coef *= k;
    return e;
}

/// Real and reactive balance at every bus and step:
///   base * P_inj = sum P_g + sum P_b - P_l,  base * Q_inj = sum Q_g - Q_l.
inline std::size_t balance_constraints(const NetworkCase& cs, const VariableMap& m, socp::ConicProblem& p) {
    const double base = cs.system.mva_base;
    std::size_t rows = 0;
    for (std::size_t t = 0; t < static_cast<std::size_t>(cs.horizon()); ++t) {
        const auto inj = injection_expressions(cs, m, t);
        for (std::size_t i = 0; i < cs.buses.size(); ++i) {
            Expression pr = scaled(inj.p[i], -base), qr = scaled(inj.q[i], -base);
            const int id = cs.buses[i].id;
            for (std::size_t g = 0; g < cs.generators.size(); ++g)
                if (cs.generators[g].bus == id) {
                    pr.push_back({m.p[t][g], 1.0});
                    qr.push_back({m.q[t][g], 1.0});
                }
            for (std::size_t k = 0; k < cs.storage.size(); ++k)
                if (cs.storage[k].bus == id) pr.push_back({m.pb[t][k], 1.0});
            const auto& load = cs.loads[t][i];
            p.add_row(std::move(pr), load.p_mw, load.p_mw);
            p.add_row(std::move(qr), load.q_mvar, load.q_mvar);
            rows += 2;
        }
    }
    return rows;
}

/// Both ends of every line boxed by its MW / MVAr rating.
inline std::size_t line_limit_constraints(const NetworkCase& cs, const VariableMap& m, socp::ConicProblem& p) {
    const double base = cs.system.mva_base;
    std::size_t rows = 0;
    for (std::size_t t = 0; t < static_cast<std::size_t>(cs.horizon()); ++t) {
        const auto flows = line_flow_expressions(cs, m, t);
        for (std::size_t l = 0; l < cs.lines.size(); ++l) {
            const auto& line = cs.lines[l];
            auto box = [&](const Expression& e, double rating) {
                if (std::isinf(rating)) return;
                p.add_row(scaled(e, base), -rating, rating);
                ++rows;
            };
            box(flows[l].p_from, line.p_max_mw);
            box(flows[l].p_to, line.p_max_mw);
            box(flows[l].q_from, line.q_max_mvar);
            box(flows[l].q_to, line.q_max_mvar);
        }
    }
    return rows;
}

/// W_R^2 + W_I^2 <= 2 u_i u_k on every line and step.
inline void cone_constraints(const NetworkCase& cs, const VariableMap& m, socp::ModelForm& model) {
    for (std::size_t t = 0; t < static_cast<std::size_t>(cs.horizon()); ++t)
        for (std::size_t l = 0; l < cs.lines.size(); ++l) {
            const auto& line = cs.lines[l];
            model.rotated.push_back({m.u[t][cs.require_bus(line.from_bus)], m.u[t][cs.require_bus(line.to_bus)],
                                     {m.wr[t][l], m.wi[t][l]}});
        }
}

inline std::size_t angle_constraints(const NetworkCase& cs, const VariableMap& m, const LinearizationPoint& point,
                                     socp::ConicProblem& p) {
    std::size_t rows = 0;
    for (std::size_t t = 0; t < static_cast<std::size_t>(cs.horizon()); ++t)
        for (std::size_t l = 0; l < cs.lines.size(); ++l) {
            const auto row = angle_linearization(point.at.at(t).at(l));
            p.add_row({{m.theta[t][l], 1.0}, {m.wr[t][l], row.coef_wr}, {m.wi[t][l], row.coef_wi}}, row.rhs, row.rhs);
            ++rows;
        }
    return rows;
}

/// E_t = E_{t-1} - eta_b P_t dt with E_{-1} = E0, and sum_t P_t = 0. SOC
/// limits are carried by the bounds on E.
inline std::size_t storage_constraints(const NetworkCase& cs, const VariableMap& m, socp::ConicProblem& p) {
    std::size_t rows = 0;
    const double dt = cs.dt();
    for (std::size_t k = 0; k < cs.storage.size(); ++k) {
        const auto& st = cs.storage[k];
        Expression total;
        for (std::size_t t = 0; t < static_cast<std::size_t>(cs.horizon()); ++t) {
            Expression row{{m.e[t][k], 1.0}, {m.pb[t][k], st.efficiency * dt}};
            double rhs = 0.0;
            if (t == 0)
                rhs = st.e0_mwh;
            else
                row.push_back({m.e[t - 1][k], -1.0});
            p.add_row(std::move(row), rhs, rhs);
            total.push_back({m.pb[t][k], 1.0});
            ++rows;
        }
        p.add_row(std::move(total), 0.0, 0.0);
        ++rows;
    }
    return rows;
}

/// P_i / Pb_i = P_0 / Pb_0 for every dispatchable unit after the first.
inline std::size_t sharing_constraints(const NetworkCase& cs, const VariableMap& m,
                                       const DispatchRestrictions& restrict, socp::ConicProblem& p) {
    if (!restrict.equal_loading) return 0;
    std::size_t rows = 0;
    for (std::size_t t = 0; t < static_cast<std::size_t>(cs.horizon()); ++t) {
        int first = -1;
        for (std::size_t g = 0; g < cs.generators.size(); ++g) {
            if (!restrict.allows(g)) continue;
            if (first < 0) {
                first = static_cast<int>(g);
                continue;
            }
            p.add_row({{m.p[t][g], 1.0 / cs.generators[g].p_base_mw},
                       {m.p[t][first], -1.0 / cs.generators[first].p_base_mw}},
                      0.0, 0.0);
            ++rows;
        }
    }
    return rows;
}

/// Epigraph of (1/2) dt (zeta P^2 + beta (1/eta(p))^2) per ratio term:
///   w >= zeta P^2,  s <= eta(P/Pb),  that * s >= 1,  v >= beta that^2.
/// For a < 0 the cap is (-a)/Pb^2 P^2 <= r with r = b P/Pb + c - s; for
/// a = 0 it is linear.
inline void epigraph_objective(const NetworkCase& cs, const std::vector<TermIndex>& terms,
                               const frac::AuxiliaryState& aux, VariableMap& m, socp::ModelForm& model) {
    if (aux.size() != terms.size()) throw DomainError("auxiliary state size does not match term count");
    auto& p = model.linear;
    const double dt = cs.dt();
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const auto [g, t] = terms[k];
        const auto& gen = cs.generators[g];
        if (gen.a > 0.0) throw UnsupportedCurvature("generator '" + gen.id + "' has a convex efficiency curve");
        const auto& pair = aux.pairs[k];
        if (!(pair.zeta > 0.0 && pair.beta > 0.0))
            throw DomainError("auxiliary pair must be positive");
        const int P = m.p[t][g];
        const int w = p.add_var(0.0, socp::kInf, 0.5 * dt);
        const int s = p.add_var(0.0, socp::kInf);
        const int th = p.add_var(0.0, socp::kInf);
        const int v = p.add_var(0.0, socp::kInf, 0.5 * dt);
        m.w[t][g] = w;
        m.s[t][g] = s;
        m.that[t][g] = th;
        m.v[t][g] = v;
        model.squared.push_back({w, 1.0 / pair.zeta, {P}});
        const double slope = gen.b / gen.p_base_mw;
        if (gen.a < 0.0) {
            const int r = p.add_var(0.0, socp::kInf);
            m.r[t][g] = r;
            p.add_row({{r, 1.0}, {P, -slope}, {s, 1.0}}, gen.c, gen.c);
            model.squared.push_back({r, detail::sq(gen.p_base_mw) / -gen.a, {P}});
        } else {
            p.add_row({{s, 1.0}, {P, -slope}}, -socp::kInf, gen.c);
        }
        model.hyperbolic.push_back({th, s});
        model.squared.push_back({v, 1.0 / pair.beta, {th}});
    }
}

/// Full relaxation for one outer iteration.
inline RelaxedOPFModel build_relaxation(const NetworkCase& cs, const frac::AuxiliaryState& aux,
                                        const LinearizationPoint& point, const DispatchRestrictions& restrict = {}) {
    if (!restrict.dispatchable.empty() && restrict.dispatchable.size() != cs.generators.size())
        throw DomainError("dispatch restriction size does not match generator count");
    RelaxedOPFModel model;
    auto& p = model.linear;
    model.vars = operational_bounds(cs, p, restrict);
    model.terms = ratio_terms(cs, restrict);
    model.balance_rows = balance_constraints(cs, model.vars, p);
    model.flow_rows = line_limit_constraints(cs, model.vars, p);
    model.angle_rows = angle_constraints(cs, model.vars, point, p);
    cone_constraints(cs, model.vars, model);
    model.storage_rows = storage_constraints(cs, model.vars, p);
    model.ramp_rows = ramp_constraints(cs, model.vars, p);
    model.sharing_rows = sharing_constraints(cs, model.vars, restrict, p);
    epigraph_objective(cs, model.terms, aux, model.vars, model);
    return model;
}

/// 2 u_i u_k - (W_R^2 + W_I^2) per [t][line]; nonnegative on a feasible point.
inline std::vector<std::vector<double>> cone_slack(const NetworkCase& cs, const VariableMap& m,
                                                   const std::vector<double>& x) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(cs.horizon()),
                                         std::vector<double>(cs.lines.size()));
    for (std::size_t t = 0; t < out.size(); ++t)
        for (std::size_t l = 0; l < cs.lines.size(); ++l) {
            const auto& line = cs.lines[l];
            const double ui = x[m.u[t][cs.require_bus(line.from_bus)]], uk = x[m.u[t][cs.require_bus(line.to_bus)]];
            const double wr = x[m.wr[t][l]], wi = x[m.wi[t][l]];
            out[t][l] = 2.0 * ui * uk - (wr * wr + wi * wi);
        }
    return out;
}

}  // namespace fuelopt
