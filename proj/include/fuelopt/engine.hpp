#pragma once

// Outer fractional-programming loop.
//
//   aux = 1, flat linearization
//   repeat
//     build and solve the relaxation for the current aux and point
//     recover (A, C) per term from the true efficiency curve
//     closed-form auxiliary update, cutting diagnostic
//     move the linearization point to the solved (W_R, W_I)
//   until the true ratio objective settles
//
// The reported schedule is the best iterate by the true objective.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fuelopt/errors.hpp"
#include "fuelopt/fractional.hpp"
#include "fuelopt/netmodel.hpp"
#include "fuelopt/relaxation.hpp"
#include "fuelopt/socp.hpp"
#include "fuelopt/socp_solver.hpp"

namespace fuelopt {

enum class Variant { full, A, B, C };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::full: return "proposed";
        case Variant::A: return "A";
        case Variant::B: return "B";
        case Variant::C: return "C";
    }
    return "unknown";
}

inline std::optional<Variant> parse_variant(const std::string& s) {
    if (s == "full" || s == "proposed") return Variant::full;
    if (s == "A" || s == "a") return Variant::A;
    if (s == "B" || s == "b") return Variant::B;
    if (s == "C" || s == "c") return Variant::C;
    return std::nullopt;
}

struct SolverConfig {
    double outer_tol = 1e-6;
    int max_outer = 500;
    int settle_passes = 2;
    double inner_tol = 1e-8;
    int inner_max_iter = 200;
    double clamp = frac::kDefaultClamp;
    double lin_floor = 1e-4;
    Variant variant = Variant::full;
    /// When false the flat expansion point is kept for every iteration.
    bool relinearize = true;
    /// Consecutive increases of the true objective tolerated before giving up.
    int divergence_window = 10;
};

enum class DispatchStatus { converged, iteration_limit, infeasible, numerical_failure };

inline const char* to_string(DispatchStatus s) {
    switch (s) {
        case DispatchStatus::converged: return "converged";
        case DispatchStatus::iteration_limit: return "iteration-limit";
        case DispatchStatus::infeasible: return "infeasible";
        case DispatchStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

struct IterationRecord {
    int iter = 0;
    double objective = 0.0;  // sum of P/eta * dt
    double surrogate = 0.0;  // surrogate at this dispatch with the aux it was solved for
    double equiv_gap = 0.0;  // surrogate after the update minus objective
    double cone_gap = 0.0;   // max relaxation slack over lines
    double cut_max = 0.0;    // max cutting violation after the update
    int conic_iterations = 0;
    socp::Status conic_status = socp::Status::optimal;
};

struct DispatchSolution {
    DispatchStatus status = DispatchStatus::numerical_failure;
    std::string message;
    Variant variant = Variant::full;
    std::vector<std::string> generator_ids;
    std::vector<std::string> storage_ids;
    std::vector<std::vector<double>> p_mw;        // [t][gen]
    std::vector<std::vector<double>> q_mvar;      // [t][gen]
    std::vector<std::vector<double>> storage_mw;  // [t][storage], discharge positive
    std::vector<std::vector<double>> energy_mwh;  // [t][storage], end of step
    std::vector<std::vector<double>> soc;         // [t][storage]
    std::vector<std::vector<double>> voltage;     // [t][bus]
    std::vector<std::vector<double>> theta;       // [t][line], NaN where undefined
    double max_angle_discrepancy = 0.0;
    std::vector<IterationRecord> trace;
    int best_iteration = 0;
    double objective = 0.0;  // true ratio objective at the best iterate
    double equivalence_gap = 0.0;
    double max_cone_gap = 0.0;
    double fuel_liters = 0.0;
    double dt_hours = 1.0;
    socp::ResidualReport residuals;  // conic residuals at the best (or failing) iterate

    int outer_iterations() const { return static_cast<int>(trace.size()); }
    int horizon() const { return static_cast<int>(p_mw.size()); }
};

/// (1/alpha) sum_t sum_i P / eta(P/Pb) * dt, from the schedule alone.
inline double compute_fuel(const DispatchSolution& sol, const NetworkCase& cs) {
    const double alpha = cs.system.alpha_mwh_per_liter;
    double total = 0.0;
    for (const auto& row : sol.p_mw)
        for (std::size_t g = 0; g < row.size(); ++g)
            total += fuel_rate(cs.generators.at(g), row[g], alpha) * cs.dt();
    return total;
}

/// Liters burned up to and including each step.
inline std::vector<double> cumulative_fuel(const DispatchSolution& sol, const NetworkCase& cs) {
    std::vector<double> out;
    double total = 0.0;
    for (const auto& row : sol.p_mw) {
        for (std::size_t g = 0; g < row.size(); ++g)
            total += fuel_rate(cs.generators.at(g), row[g], cs.system.alpha_mwh_per_liter) * cs.dt();
        out.push_back(total);
    }
    return out;
}

struct RecoveredState {
    std::vector<std::vector<double>> voltage;  // [t][bus]
    std::vector<std::vector<double>> theta;    // [t][line]
    std::vector<std::vector<bool>> angle_defined;
    /// Largest |atan2(W_I, W_R) - theta| over lines with a defined angle.
    double max_discrepancy = 0.0;
};

inline RecoveredState recover_state(const std::vector<double>& x, const VariableMap& m, const NetworkCase& cs) {
    RecoveredState out;
    const auto T = static_cast<std::size_t>(cs.horizon());
    out.voltage.assign(T, std::vector<double>(cs.buses.size()));
    out.theta.assign(T, std::vector<double>(cs.lines.size()));
    out.angle_defined.assign(T, std::vector<bool>(cs.lines.size()));
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < cs.buses.size(); ++i) {
            const double u = x[m.u[t][i]];
            if (!(u > 0.0)) throw DomainError("lifted voltage must be positive");
            out.voltage[t][i] = std::sqrt(std::numbers::sqrt2 * u);
        }
        for (std::size_t l = 0; l < cs.lines.size(); ++l) {
            const double wr = x[m.wr[t][l]], wi = x[m.wi[t][l]];
            if (wr == 0.0 && wi == 0.0) {
                out.theta[t][l] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            out.theta[t][l] = std::atan2(wi, wr);
            out.angle_defined[t][l] = true;
            out.max_discrepancy = std::max(out.max_discrepancy, std::abs(out.theta[t][l] - x[m.theta[t][l]]));
        }
    }
    return out;
}

/// Which units each variant may dispatch.
inline DispatchRestrictions variant_restrictions(const NetworkCase& cs, Variant v) {
    DispatchRestrictions r;
    if (v == Variant::full) return r;
    if (v == Variant::C) {
        r.equal_loading = true;
        return r;
    }
    r.dispatchable.assign(cs.generators.size(), false);
    bool mtg = false, atg = false;
    for (std::size_t g = 0; g < cs.generators.size(); ++g) {
        const auto& cls = cs.generators[g].unit_class;
        if (v == Variant::A && cls == "MTG") {
            r.dispatchable[g] = true;
            mtg = true;
        } else if (v == Variant::B && cls == "MTG" && !mtg) {
            r.dispatchable[g] = mtg = true;
        } else if (v == Variant::B && cls == "ATG" && !atg) {
            r.dispatchable[g] = atg = true;
        }
    }
    if (!mtg || (v == Variant::B && !atg))
        throw DomainError(std::string("variant ") + to_string(v) + " needs MTG" + (v == Variant::B ? " and ATG" : "") +
                          " class units");
    return r;
}

namespace detail {

inline std::vector<frac::RatioTerm> recover_terms(const NetworkCase& cs, const std::vector<TermIndex>& idx,
                                                  const std::vector<std::vector<double>>& p_mw) {
    std::vector<frac::RatioTerm> out;
    out.reserve(idx.size());
    for (const auto& [g, t] : idx) {
        const auto& gen = cs.generators[g];
        const double a = p_mw[t][g];
        const double eta = efficiency(gen, a / gen.p_base_mw);
        if (!(eta > 0.0)) throw DomainError("nonpositive efficiency for generator '" + gen.id + "'");
        out.push_back({g, t, a, 1.0 / eta});
    }
    return out;
}

inline double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

/// Schedule read from a conic point, projected onto the variable boxes.
inline void extract_schedule(const NetworkCase& cs, const VariableMap& m, const socp::ConicProblem& p,
                             const std::vector<double>& x, DispatchSolution& out) {
    const auto T = static_cast<std::size_t>(cs.horizon());
    auto read = [&](int j) { return clip(x[j], p.lower[j], p.upper[j]); };
    out.p_mw.assign(T, std::vector<double>(cs.generators.size()));
    out.q_mvar = out.p_mw;
    out.storage_mw.assign(T, std::vector<double>(cs.storage.size()));
    out.energy_mwh = out.soc = out.storage_mw;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t g = 0; g < cs.generators.size(); ++g) {
            out.p_mw[t][g] = read(m.p[t][g]);
            out.q_mvar[t][g] = read(m.q[t][g]);
        }
        for (std::size_t k = 0; k < cs.storage.size(); ++k) {
            out.storage_mw[t][k] = read(m.pb[t][k]);
            out.energy_mwh[t][k] = read(m.e[t][k]);
            out.soc[t][k] = out.energy_mwh[t][k] / cs.storage[k].capacity_mwh;
        }
    }
}

inline double max_of(const std::vector<std::vector<double>>& v) {
    double m = 0.0;
    for (const auto& row : v)
        for (double x : row) m = std::max(m, x);
    return m;
}

}  // namespace detail

inline DispatchSolution solve_dispatch(const NetworkCase& cs, const SolverConfig& cfg = {}) {
    if (!(cfg.outer_tol > 0.0 && cfg.inner_tol > 0.0 && cfg.clamp > 0.0 && cfg.lin_floor > 0.0) ||
        cfg.max_outer < 1 || cfg.settle_passes < 1)
        throw DomainError("solver configuration out of range");

    DispatchSolution out;
    out.variant = cfg.variant;
    out.dt_hours = cs.dt();
    for (const auto& g : cs.generators) out.generator_ids.push_back(g.id);
    for (const auto& s : cs.storage) out.storage_ids.push_back(s.id);

    const auto restrict = variant_restrictions(cs, cfg.variant);
    const auto term_index = ratio_terms(cs, restrict);
    auto aux = frac::AuxiliaryState::ones(term_index.size());
    auto point = LinearizationPoint::flat(cs.horizon(), cs.lines.size());

    socp::SolveOptions inner;
    inner.tol = cfg.inner_tol;
    inner.max_iter = cfg.inner_max_iter;

    struct Best {
        double objective = std::numeric_limits<double>::infinity();
        std::vector<double> x;
        RelaxedOPFModel model;
        socp::ResidualReport residuals;
        double equiv_gap = 0.0;
        double cone_gap = 0.0;
        int iter = 0;
    } best;

    double previous = std::numeric_limits<double>::quiet_NaN();
    int passes = 0, increases = 0;
    DispatchStatus status = DispatchStatus::iteration_limit;

    for (int iter = 1; iter <= cfg.max_outer; ++iter) {
        auto model = build_relaxation(cs, aux, point, restrict);
        const auto assembly = socp::assemble(model);
        const auto sol = socp::solve(assembly.problem, inner);

        IterationRecord rec;
        rec.iter = iter;
        rec.conic_iterations = sol.iterations;
        rec.conic_status = sol.status;

        if (sol.status == socp::Status::infeasible || sol.status == socp::Status::unbounded) {
            out.status = sol.status == socp::Status::infeasible ? DispatchStatus::infeasible
                                                                 : DispatchStatus::numerical_failure;
            out.message = std::string("conic subproblem ") + socp::to_string(sol.status) + " at outer iteration " +
                          std::to_string(iter);
            out.residuals = sol.residuals;
            out.trace.push_back(rec);
            return out;
        }
        if (sol.status != socp::Status::optimal && sol.residuals.max() > 1e-6) {
            out.status = DispatchStatus::numerical_failure;
            out.message = std::string("conic subproblem ") + socp::to_string(sol.status) + " at outer iteration " +
                          std::to_string(iter);
            out.residuals = sol.residuals;
            out.trace.push_back(rec);
            if (best.x.empty()) return out;
            status = DispatchStatus::numerical_failure;
            break;
        }

        DispatchSolution sched;
        detail::extract_schedule(cs, model.vars, assembly.problem, sol.x, sched);
        const auto terms = detail::recover_terms(cs, term_index, sched.p_mw);
        rec.objective = frac::ratio_sum(terms, cs.dt());
        rec.surrogate = frac::surrogate(terms, aux, cs.dt());
        aux = frac::auxiliary_update(terms, cfg.clamp);
        rec.equiv_gap = frac::equivalence_gap(terms, aux, cs.dt());
        rec.cut_max = frac::max_cutting_violation(aux);
        const auto slack = cone_slack(cs, model.vars, sol.x);
        rec.cone_gap = std::max(0.0, detail::max_of(slack));
        out.trace.push_back(rec);

        if (rec.objective < best.objective) {
            best.objective = rec.objective;
            best.x = sol.x;
            best.model = model;
            best.residuals = sol.residuals;
            best.equiv_gap = rec.equiv_gap;
            best.cone_gap = rec.cone_gap;
            best.iter = iter;
        }

        if (cfg.relinearize)
            for (std::size_t t = 0; t < point.at.size(); ++t)
                for (std::size_t l = 0; l < cs.lines.size(); ++l)
                    point.at[t][l] =
                        floor_point({sol.x[model.vars.wr[t][l]], sol.x[model.vars.wi[t][l]]}, cfg.lin_floor);

        if (!std::isnan(previous)) {
            const double change = std::abs(rec.objective - previous) / std::max(1.0, std::abs(previous));
            passes = change <= cfg.outer_tol ? passes + 1 : 0;
            increases = rec.objective > previous ? increases + 1 : 0;
        }
        previous = rec.objective;
        if (passes >= cfg.settle_passes) {
            status = DispatchStatus::converged;
            break;
        }
        if (increases >= cfg.divergence_window) {
            status = DispatchStatus::numerical_failure;
            out.message = "objective increased on " + std::to_string(increases) + " consecutive iterations";
            break;
        }
    }

    out.status = status;
    if (best.x.empty()) return out;

    detail::extract_schedule(cs, best.model.vars, socp::assemble(best.model).problem, best.x, out);
    const auto state = recover_state(best.x, best.model.vars, cs);
    out.voltage = state.voltage;
    out.theta = state.theta;
    out.max_angle_discrepancy = state.max_discrepancy;
    out.best_iteration = best.iter;
    out.objective = best.objective;
    out.equivalence_gap = best.equiv_gap;
    out.max_cone_gap = best.cone_gap;
    out.residuals = best.residuals;
    out.fuel_liters = compute_fuel(out, cs);
    return out;
}

struct VariantResult {
    Variant variant = Variant::full;
    DispatchSolution solution;
    std::vector<double> cumulative;  // liters after each step
    std::string error;               // set when the variant cannot be formed
};

/// Solves each variant on its own thread. Results come back in input order.
inline std::vector<VariantResult> compare_models(const NetworkCase& cs, const std::vector<Variant>& variants,
                                                 SolverConfig cfg = {}) {
    std::vector<std::future<VariantResult>> jobs;
    for (Variant v : variants) {
        cfg.variant = v;
        jobs.push_back(std::async(std::launch::async, [cs, cfg, v] {
            VariantResult r;
            r.variant = v;
            try {
                r.solution = solve_dispatch(cs, cfg);
                if (!r.solution.p_mw.empty()) r.cumulative = cumulative_fuel(r.solution, cs);
            } catch (const std::exception& e) {
                r.error = e.what();
                r.solution.status = DispatchStatus::infeasible;
            }
            return r;
        }));
    }
    std::vector<VariantResult> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

}  // namespace fuelopt
