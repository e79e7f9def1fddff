#pragma once

// Conic problem representation in rotated-quadratic-cone form.
//
//   minimize    c'x + offset
//   subject to  lo_r <= a_r'x <= hi_r        (equality when lo_r == hi_r)
//               lower_j <= x_j <= upper_j
//               (x0, x1, x2..) in Qr :  2 x0 x1 >= sum_{j>=2} xj^2, x0, x1 >= 0
//               (x0, x1..)     in Q  :  x0 >= ||(x1..)||
//
// ModelForm is the modeling-level counterpart: it additionally carries
// squared epigraphs (k*e >= sum t^2) and hyperbolic pairs (a*b >= 1), which
// assemble() turns into rotated cones by appending one fixed constant
// variable per constraint.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "fuelopt/errors.hpp"

namespace fuelopt::socp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinearTerm {
    int var = 0;
    double coef = 0.0;
};

struct LinearConstraint {
    std::vector<LinearTerm> terms;
    double lo = -kInf;
    double hi = kInf;

    bool is_equality() const { return lo == hi; }
};

enum class ConeKind { rotated, quadratic };

struct Cone {
    ConeKind kind = ConeKind::rotated;
    std::vector<int> vars;
};

struct ConicProblem {
    int num_vars = 0;
    std::vector<double> cost;
    double cost_offset = 0.0;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<LinearConstraint> rows;
    std::vector<Cone> cones;

    int add_var(double lo = -kInf, double hi = kInf, double c = 0.0) {
        cost.push_back(c);
        lower.push_back(lo);
        upper.push_back(hi);
        return num_vars++;
    }

    void add_row(std::vector<LinearTerm> terms, double lo, double hi) {
        rows.push_back({std::move(terms), lo, hi});
    }

    void add_cone(ConeKind kind, std::vector<int> vars) { cones.push_back({kind, std::move(vars)}); }

    double objective(const std::vector<double>& x) const {
        double v = cost_offset;
        for (int j = 0; j < num_vars; ++j) v += cost[j] * x[j];
        return v;
    }

    /// Checks that every reference is registered and that no cone head is
    /// bounded strictly negative. Throws AssemblyError.
    void check() const {
        const auto n = static_cast<std::size_t>(num_vars);
        if (cost.size() != n || lower.size() != n || upper.size() != n)
            throw AssemblyError("variable arrays are inconsistent with num_vars");
        auto known = [&](int v) { return v >= 0 && v < num_vars; };
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (const auto& t : rows[r].terms)
                if (!known(t.var))
                    throw AssemblyError("row " + std::to_string(r) + " references unregistered variable " +
                                        std::to_string(t.var));
        for (std::size_t k = 0; k < cones.size(); ++k) {
            const auto& cone = cones[k];
            const std::size_t min_size = cone.kind == ConeKind::rotated ? 2 : 1;
            if (cone.vars.size() < min_size) throw AssemblyError("cone " + std::to_string(k) + " is too short");
            for (int v : cone.vars)
                if (!known(v))
                    throw AssemblyError("cone " + std::to_string(k) + " references unregistered variable " +
                                        std::to_string(v));
            const std::size_t heads = cone.kind == ConeKind::rotated ? 2 : 1;
            for (std::size_t h = 0; h < heads; ++h)
                if (upper[cone.vars[h]] < 0.0)
                    throw AssemblyError("cone " + std::to_string(k) + " head is bounded negative");
        }
    }
};

enum class Status { optimal, infeasible, unbounded, iteration_limit, numerical_failure };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
        case Status::iteration_limit: return "iteration-limit";
        case Status::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

struct ResidualReport {
    double equality = 0.0;    // max |a'x - rhs| over equality rows
    double inequality = 0.0;  // max violation over two-sided rows
    double bounds = 0.0;      // max violation of variable bounds
    double cone = 0.0;        // max cone violation

    double max() const { return std::max({equality, inequality, bounds, cone}); }
};

struct ConicSolution {
    Status status = Status::numerical_failure;
    std::vector<double> x;
    double objective = 0.0;
    double max_equality_residual = 0.0;
    double max_cone_residual = 0.0;
    ResidualReport residuals;
    int iterations = 0;
    // Solver-side convergence measures on the equilibrated problem.
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    double duality_gap = 0.0;
};

inline double rotated_cone_violation(double x0, double x1, double tail_sq) {
    return std::max({0.0, tail_sq - 2.0 * x0 * x1, -x0, -x1});
}

inline ResidualReport residuals(const ConicProblem& p, const std::vector<double>& x) {
    ResidualReport r;
    for (const auto& row : p.rows) {
        double v = 0.0;
        for (const auto& t : row.terms) v += t.coef * x[t.var];
        if (row.is_equality())
            r.equality = std::max(r.equality, std::abs(v - row.lo));
        else
            r.inequality = std::max({r.inequality, row.lo - v, v - row.hi});
    }
    for (int j = 0; j < p.num_vars; ++j) r.bounds = std::max({r.bounds, p.lower[j] - x[j], x[j] - p.upper[j]});
    for (const auto& cone : p.cones) {
        if (cone.kind == ConeKind::rotated) {
            double tail = 0.0;
            for (std::size_t k = 2; k < cone.vars.size(); ++k) tail += x[cone.vars[k]] * x[cone.vars[k]];
            r.cone = std::max(r.cone, rotated_cone_violation(x[cone.vars[0]], x[cone.vars[1]], tail));
        } else {
            double tail = 0.0;
            for (std::size_t k = 1; k < cone.vars.size(); ++k) tail += x[cone.vars[k]] * x[cone.vars[k]];
            r.cone = std::max(r.cone, std::sqrt(tail) - x[cone.vars[0]]);
        }
    }
    r.inequality = std::max(r.inequality, 0.0);
    r.bounds = std::max(r.bounds, 0.0);
    return r;
}

/// Plain-text dump for cross-checking against external conic tools.
///
///   conic-problem v1
///   vars <n>
///   offset <value>
///   c <j> <value>               nonzero objective entries
///   bound <j> <lo> <hi>         finite bounds only (inf written as "inf")
///   row <r> <lo> <hi>
///   a <r> <j> <value>           row/col/value triplets
///   cone rotated|quadratic <j0> <j1> ...
inline void dump(const ConicProblem& p, std::ostream& out) {
    out << std::setprecision(17);
    out << "conic-problem v1\n";
    out << "vars " << p.num_vars << "\n";
    out << "offset " << p.cost_offset << "\n";
    for (int j = 0; j < p.num_vars; ++j)
        if (p.cost[j] != 0.0) out << "c " << j << " " << p.cost[j] << "\n";
    for (int j = 0; j < p.num_vars; ++j)
        if (std::isfinite(p.lower[j]) || std::isfinite(p.upper[j]))
            out << "bound " << j << " " << p.lower[j] << " " << p.upper[j] << "\n";
    for (std::size_t r = 0; r < p.rows.size(); ++r) {
        out << "row " << r << " " << p.rows[r].lo << " " << p.rows[r].hi << "\n";
        for (const auto& t : p.rows[r].terms) out << "a " << r << " " << t.var << " " << t.coef << "\n";
    }
    for (const auto& cone : p.cones) {
        out << "cone " << (cone.kind == ConeKind::rotated ? "rotated" : "quadratic");
        for (int v : cone.vars) out << " " << v;
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Modeling-level form
// ---------------------------------------------------------------------------

/// 2 * head0 * head1 >= sum tail^2 with both heads variables.
struct RotatedMembership {
    int head0 = 0;
    int head1 = 0;
    std::vector<int> tail;
};

/// scale * epi >= sum tail^2 (scale > 0).
struct SquaredEpigraph {
    int epi = 0;
    double scale = 1.0;
    std::vector<int> tail;
};

/// first * second >= 1.
struct HyperbolicPair {
    int first = 0;
    int second = 0;
};

struct ModelForm {
    ConicProblem linear;  // variables, objective, linear rows; cones passed through
    std::vector<RotatedMembership> rotated;
    std::vector<SquaredEpigraph> squared;
    std::vector<HyperbolicPair> hyperbolic;

    int num_vars() const { return linear.num_vars; }
};

struct Assembly {
    ConicProblem problem;
    int model_vars = 0;
    /// Values of the appended constant variables, in order.
    std::vector<double> constants;

    /// Extends a model-level point with the constant variables.
    std::vector<double> extend(std::vector<double> model_point) const {
        model_point.insert(model_point.end(), constants.begin(), constants.end());
        return model_point;
    }
};

inline Assembly assemble(const ModelForm& model) {
    Assembly out;
    out.problem = model.linear;
    out.model_vars = model.num_vars();
    auto& p = out.problem;
    const int n = model.num_vars();
    auto check = [n](int v, const char* what) {
        if (v < 0 || v >= n)
            throw AssemblyError(std::string(what) + " references unregistered variable " + std::to_string(v));
    };
    auto constant = [&](double value) {
        out.constants.push_back(value);
        return p.add_var(value, value, 0.0);
    };

    for (const auto& r : model.rotated) {
        check(r.head0, "rotated cone");
        check(r.head1, "rotated cone");
        std::vector<int> vars{r.head0, r.head1};
        for (int v : r.tail) check(v, "rotated cone"), vars.push_back(v);
        p.add_cone(ConeKind::rotated, std::move(vars));
    }
    for (const auto& e : model.squared) {
        check(e.epi, "squared epigraph");
        if (!(e.scale > 0.0)) throw AssemblyError("squared epigraph scale must be positive");
        std::vector<int> vars{e.epi, constant(0.5 * e.scale)};
        for (int v : e.tail) check(v, "squared epigraph"), vars.push_back(v);
        p.add_cone(ConeKind::rotated, std::move(vars));
    }
    for (const auto& h : model.hyperbolic) {
        check(h.first, "hyperbolic pair");
        check(h.second, "hyperbolic pair");
        p.add_cone(ConeKind::rotated, {h.first, h.second, constant(std::sqrt(2.0))});
    }
    p.check();
    return out;
}

}  // namespace fuelopt::socp
