#pragma once

// Primal-dual interior-point method for ConicProblem.
//
// The problem is brought to the standard form
//
//   minimize c'x  s.t.  A x = b,  G x + s = h,  s in K
//
// with K a product of a nonnegative orthant and second-order cones (rotated
// cones are mapped through (x0+x1)/sqrt2, (x0-x1)/sqrt2). It is solved with a
// homogeneous self-dual embedding, Nesterov-Todd scaling and a Mehrotra
// predictor-corrector, so infeasibility and unboundedness come out as
// certificates rather than stalls. Each Newton step factors the regularized
// quasidefinite KKT matrix
//
//   [ +dI   A'   G'      ]
//   [  A   -dI   0       ]
//   [  G    0   -W'W - dI]
//
// by sparse LDL' (fixed AMD ordering, pivots kept at their expected sign)
// followed by iterative refinement on the unregularized system. The dense
// second-order blocks of W'W are expanded into a diagonal plus two rank-one
// terms carried by extra rows, which keeps the matrix well scaled when the
// iterates approach the cone boundary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <vector>

#include <Eigen/Sparse>

#include "fuelopt/ldl.hpp"
#include "fuelopt/socp.hpp"

namespace fuelopt::socp {

struct SolveOptions {
    double tol = 1e-8;  // relative KKT tolerance (feasibility and gap)
    int max_iter = 200;
    int equilibration_passes = 15;
    double regularization = 1e-9;
    /// A run that stalls is still reported optimal when its best iterate
    /// meets this looser tolerance.
    double reduced_tol = 1e-6;
    /// Iterations without halving the best merit before such a run stops.
    int stall_window = 15;
    double step_fraction = 0.99;
    bool verbose = false;  // per-iteration log on stderr
};

namespace detail {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

/// Orthant of dimension `orthant` followed by second-order cones.
struct ConeLayout {
    int orthant = 0;
    std::vector<int> soc_dims;
    std::vector<int> soc_start;  // row offset of each cone
    int rows = 0;
    int degree() const { return orthant + static_cast<int>(soc_dims.size()); }
};

struct StandardForm {
    int n = 0;
    SpMat A, G;
    Vec b, h, c;
    ConeLayout cones;
    double cost_offset = 0.0;
};

// ---- cone algebra ---------------------------------------------------------

/// v0^2 - |v1|^2, evaluated as (v0 - |v1|)(v0 + |v1|) to keep precision
/// near the cone boundary.
inline double soc_residual(const double* v, int d) {
    double tail = 0.0;
    for (int k = 1; k < d; ++k) tail += v[k] * v[k];
    const double nrm = std::sqrt(tail);
    return (v[0] - nrm) * (v[0] + nrm);
}

/// Largest alpha with v + alpha*dv in the cone (capped at `cap`).
inline double max_step(const ConeLayout& K, const Vec& v, const Vec& dv, double cap) {
    double alpha = cap;
    for (int i = 0; i < K.orthant; ++i)
        if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
    for (std::size_t k = 0; k < K.soc_dims.size(); ++k) {
        const int o = K.soc_start[k], d = K.soc_dims[k];
        double a = dv[o] * dv[o], b = v[o] * dv[o], c = v[o] * v[o];
        for (int j = 1; j < d; ++j) {
            a -= dv[o + j] * dv[o + j];
            b -= v[o + j] * dv[o + j];
            c -= v[o + j] * v[o + j];
        }
        b *= 2.0;
        if (c <= 0.0) return 0.0;
        double root = std::numeric_limits<double>::infinity();
        const double scale = std::max({std::abs(a), std::abs(b), c});
        if (std::abs(a) <= 1e-15 * scale) {
            if (b < 0.0) root = -c / b;
        } else {
            const double disc = b * b - 4.0 * a * c;
            if (disc >= 0.0) {
                const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
                const double r1 = q / a, r2 = c / q;
                for (double r : {r1, r2})
                    if (r > 0.0) root = std::min(root, r);
            }
        }
        alpha = std::min(alpha, root);
    }
    return alpha;
}

/// Jordan product u o v.
inline Vec jordan(const ConeLayout& K, const Vec& u, const Vec& v) {
    Vec out(K.rows);
    for (int i = 0; i < K.orthant; ++i) out[i] = u[i] * v[i];
    for (std::size_t k = 0; k < K.soc_dims.size(); ++k) {
        const int o = K.soc_start[k], d = K.soc_dims[k];
        out[o] = u.segment(o, d).dot(v.segment(o, d));
        for (int j = 1; j < d; ++j) out[o + j] = u[o] * v[o + j] + v[o] * u[o + j];
    }
    return out;
}

/// Solves lambda o u = v for u.
inline Vec jordan_divide(const ConeLayout& K, const Vec& lambda, const Vec& v) {
    Vec u(K.rows);
    for (int i = 0; i < K.orthant; ++i) u[i] = v[i] / lambda[i];
    for (std::size_t k = 0; k < K.soc_dims.size(); ++k) {
        const int o = K.soc_start[k], d = K.soc_dims[k];
        const double rho = soc_residual(&lambda[o], d);
        double l1v1 = 0.0;
        for (int j = 1; j < d; ++j) l1v1 += lambda[o + j] * v[o + j];
        const double u0 = (lambda[o] * v[o] - l1v1) / rho;
        u[o] = u0;
        for (int j = 1; j < d; ++j) u[o + j] = (v[o + j] - u0 * lambda[o + j]) / lambda[o];
    }
    return u;
}

inline Vec identity_element(const ConeLayout& K) {
    Vec e = Vec::Zero(K.rows);
    for (int i = 0; i < K.orthant; ++i) e[i] = 1.0;
    for (int o : K.soc_start) e[o] = 1.0;
    return e;
}

/// Moves v strictly inside the cone if needed: v + (1 + max(0, -min eig)) e.
inline void shift_interior(const ConeLayout& K, Vec& v) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < K.orthant; ++i) worst = std::max(worst, -v[i]);
    for (std::size_t k = 0; k < K.soc_dims.size(); ++k) {
        const int o = K.soc_start[k], d = K.soc_dims[k];
        worst = std::max(worst, v.segment(o + 1, d - 1).norm() - v[o]);
    }
    if (worst >= -1e-8 || !std::isfinite(worst)) {
        const double shift = 1.0 + std::max(0.0, std::isfinite(worst) ? worst : 0.0);
        for (int i = 0; i < K.orthant; ++i) v[i] += shift;
        for (int o : K.soc_start) v[o] += shift;
    }
}

/// Nesterov-Todd scaling W with W z = W^{-1} s = lambda.
struct Scaling {
    Vec orth_w;  // diagonal of W on the orthant
    std::vector<double> eta;
    std::vector<Vec> wbar;
    Vec lambda;

    bool compute(const ConeLayout& K, const Vec& s, const Vec& z) {
        orth_w.resize(K.orthant);
        lambda.resize(K.rows);
        for (int i = 0; i < K.orthant; ++i) {
            if (!(s[i] > 0.0 && z[i] > 0.0)) return false;
            orth_w[i] = std::sqrt(s[i] / z[i]);
            lambda[i] = std::sqrt(s[i] * z[i]);
        }
        eta.resize(K.soc_dims.size());
        wbar.resize(K.soc_dims.size());
        for (std::size_t k = 0; k < K.soc_dims.size(); ++k) {
            const int o = K.soc_start[k], d = K.soc_dims[k];
            const double sres = soc_residual(&s[o], d), zres = soc_residual(&z[o], d);
            if (!(sres > 0.0 && zres > 0.0 && s[o] > 0.0 && z[o] > 0.0)) return false;
            const double sn = std::sqrt(sres), zn = std::sqrt(zres);
            const Vec sb = s.segment(o, d) / sn, zb = z.segment(o, d) / zn;
            const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
            Vec w(d);
            w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
            w.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
            eta[k] = std::sqrt(sn / zn);
            wbar[k] = std::move(w);
        }
        const Vec l = apply(K, z, false);
        lambda.segment(K.orthant, K.rows - K.orthant) = l.segment(K.orthant, K.rows - K.orthant);
        return true;
    }

    /// W v, or W^{-1} v when inverse is set.
    Vec apply(const ConeLayout& K, const Vec& v, bool inverse) const {
        Vec out(K.rows);
        for (int i = 0; i < K.orthant; ++i) out[i] = inverse ? v[i] / orth_w[i] : v[i] * orth_w[i];
        for (std::size_t k = 0; k < K.soc_dims.size(); ++k) {
            const int o = K.soc_start[k], d = K.soc_dims[k];
            const Vec& w = wbar[k];
            const double w0 = w[0];
            double w1v1 = 0.0;
            for (int j = 1; j < d; ++j) w1v1 += w[j] * v[o + j];
            const double sign = inverse ? -1.0 : 1.0;
            const double e = inverse ? 1.0 / eta[k] : eta[k];
            out[o] = e * (w0 * v[o] + sign * w1v1);
            const double coef = w1v1 / (1.0 + w0) + sign * v[o];
            for (int j = 1; j < d; ++j) out[o + j] = e * (v[o + j] + coef * w[j]);
        }
        return out;
    }
};

// ---- standard form --------------------------------------------------------

struct BuildResult {
    StandardForm form;
    bool trivially_infeasible = false;
    /// Column of each problem variable in the standard form, -1 if fixed.
    std::vector<int> column;
    /// Value of each fixed variable (unused for free ones).
    std::vector<double> fixed;
};

/// Fixed variables are substituted out. A rotated cone whose head is fixed at
/// c > 0 is rebalanced through (x0, x1) -> (c x0, x1 / c) (or the mirror
/// image) so the fixed head maps to 1 and the second-order image of the cone
/// stays away from the degenerate direction s0 = s1.
inline BuildResult build_standard_form(const ConicProblem& p) {
    BuildResult out;
    auto& f = out.form;
    out.column.assign(static_cast<std::size_t>(p.num_vars), -1);
    out.fixed.assign(static_cast<std::size_t>(p.num_vars), 0.0);
    std::vector<double> cost;
    for (int j = 0; j < p.num_vars; ++j) {
        if (p.lower[j] > p.upper[j]) out.trivially_infeasible = true;
        if (p.lower[j] == p.upper[j]) {
            out.fixed[j] = p.lower[j];
        } else {
            out.column[j] = static_cast<int>(cost.size());
            cost.push_back(p.cost[j]);
        }
    }
    f.n = static_cast<int>(cost.size());
    f.c = Eigen::Map<const Vec>(cost.data(), f.n);
    f.cost_offset = p.cost_offset;
    for (int j = 0; j < p.num_vars; ++j)
        if (out.column[j] < 0) f.cost_offset += p.cost[j] * out.fixed[j];

    std::vector<Triplet> a_trip, g_trip;
    std::vector<double> b, h;
    int a_rows = 0, g_rows = 0;

    // Splits a row into free terms and the constant contributed by fixed ones.
    struct Reduced {
        std::vector<std::pair<int, double>> terms;
        double constant = 0.0;
        double scale = 0.0;
    };
    auto reduce = [&](const LinearConstraint& row) {
        Reduced r;
        for (const auto& t : row.terms) {
            if (out.column[t.var] >= 0) {
                r.terms.emplace_back(out.column[t.var], t.coef);
            } else {
                r.constant += t.coef * out.fixed[t.var];
            }
            r.scale = std::max(r.scale, std::abs(t.coef * (out.column[t.var] >= 0 ? 1.0 : out.fixed[t.var])));
        }
        return r;
    };
    std::vector<Reduced> reduced;
    reduced.reserve(p.rows.size());
    for (const auto& row : p.rows) {
        reduced.push_back(reduce(row));
        const auto& r = reduced.back();
        if (row.lo > row.hi) out.trivially_infeasible = true;
        if (r.terms.empty()) {
            const double slack = 1e-12 * (1.0 + r.scale);
            if (r.constant < row.lo - slack || r.constant > row.hi + slack) out.trivially_infeasible = true;
            continue;
        }
        if (row.is_equality()) {
            for (const auto& [col, coef] : r.terms) a_trip.emplace_back(a_rows, col, coef);
            b.push_back(row.lo - r.constant);
            ++a_rows;
        }
    }

    // Orthant rows.
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        const auto& row = p.rows[i];
        const auto& r = reduced[i];
        if (r.terms.empty() || row.is_equality()) continue;
        if (std::isfinite(row.lo)) {
            for (const auto& [col, coef] : r.terms) g_trip.emplace_back(g_rows, col, -coef);
            h.push_back(r.constant - row.lo);
            ++g_rows;
        }
        if (std::isfinite(row.hi)) {
            for (const auto& [col, coef] : r.terms) g_trip.emplace_back(g_rows, col, coef);
            h.push_back(row.hi - r.constant);
            ++g_rows;
        }
    }
    for (int j = 0; j < p.num_vars; ++j) {
        const int col = out.column[j];
        if (col < 0) continue;
        if (std::isfinite(p.lower[j])) {
            g_trip.emplace_back(g_rows++, col, -1.0);
            h.push_back(-p.lower[j]);
        }
        if (std::isfinite(p.upper[j])) {
            g_trip.emplace_back(g_rows++, col, 1.0);
            h.push_back(p.upper[j]);
        }
    }
    f.cones.orthant = g_rows;

    // Cone entry k of slack s is sum coef*x (free) + constant; s = h - G x.
    auto put = [&](int row, int var, double coef) {
        if (coef == 0.0) return;
        const int col = out.column[var];
        if (col >= 0)
            g_trip.emplace_back(row, col, -coef);
        else
            h[row] += coef * out.fixed[var];
    };
    const double r2 = 1.0 / std::sqrt(2.0);
    for (const auto& cone : p.cones) {
        const int start = g_rows;
        const int d = static_cast<int>(cone.vars.size());
        h.insert(h.end(), static_cast<std::size_t>(d), 0.0);
        if (cone.kind == ConeKind::rotated) {
            const int x0 = cone.vars[0], x1 = cone.vars[1];
            double k0 = 1.0, k1 = 1.0;
            if (out.column[x1] < 0 && out.fixed[x1] > 0.0 && out.column[x0] >= 0) {
                k0 = out.fixed[x1];
                k1 = 1.0 / out.fixed[x1];
            } else if (out.column[x0] < 0 && out.fixed[x0] > 0.0 && out.column[x1] >= 0) {
                k0 = 1.0 / out.fixed[x0];
                k1 = out.fixed[x0];
            }
            put(start, x0, r2 * k0);
            put(start, x1, r2 * k1);
            put(start + 1, x0, r2 * k0);
            put(start + 1, x1, -r2 * k1);
            for (int k = 2; k < d; ++k) put(start + k, cone.vars[k], 1.0);
        } else {
            for (int k = 0; k < d; ++k) put(start + k, cone.vars[k], 1.0);
        }
        g_rows += d;
        f.cones.soc_start.push_back(start);
        f.cones.soc_dims.push_back(d);
    }
    f.cones.rows = g_rows;

    f.A.resize(a_rows, f.n);
    f.A.setFromTriplets(a_trip.begin(), a_trip.end());
    f.G.resize(g_rows, f.n);
    f.G.setFromTriplets(g_trip.begin(), g_trip.end());
    f.b = Eigen::Map<Vec>(b.data(), a_rows);
    f.h = Eigen::Map<Vec>(h.data(), g_rows);
    return out;
}

/// Ruiz equilibration. Rows of one second-order cone share a single factor
/// so the scaled slack stays in the same cone.
struct Equilibration {
    Vec col;    // x = col .* x_scaled
    Vec a_row;  // scaled A = diag(a_row) A diag(col)
    Vec g_row;
    double cost = 1.0;  // scaled c = col .* c / cost

    void compute(StandardForm& f, int passes) {
        col = Vec::Ones(f.n);
        a_row = Vec::Ones(f.A.rows());
        g_row = Vec::Ones(f.G.rows());
        auto inv_sqrt = [](double v) { return v > 1e-30 ? 1.0 / std::sqrt(v) : 1.0; };
        for (int pass = 0; pass < passes; ++pass) {
            Vec cmax = Vec::Zero(f.n), amax = Vec::Zero(f.A.rows()), gmax = Vec::Zero(f.G.rows());
            for (int j = 0; j < f.n; ++j) {
                for (SpMat::InnerIterator it(f.A, j); it; ++it) {
                    const double v = std::abs(it.value());
                    cmax[j] = std::max(cmax[j], v);
                    amax[it.row()] = std::max(amax[it.row()], v);
                }
                for (SpMat::InnerIterator it(f.G, j); it; ++it) {
                    const double v = std::abs(it.value());
                    cmax[j] = std::max(cmax[j], v);
                    gmax[it.row()] = std::max(gmax[it.row()], v);
                }
            }
            for (std::size_t k = 0; k < f.cones.soc_dims.size(); ++k) {
                const int o = f.cones.soc_start[k], d = f.cones.soc_dims[k];
                const double m = gmax.segment(o, d).maxCoeff();
                gmax.segment(o, d).setConstant(m);
            }
            Vec dc(f.n), da(f.A.rows()), dg(f.G.rows());
            for (int j = 0; j < f.n; ++j) dc[j] = inv_sqrt(cmax[j]);
            for (int i = 0; i < f.A.rows(); ++i) da[i] = inv_sqrt(amax[i]);
            for (int i = 0; i < f.G.rows(); ++i) dg[i] = inv_sqrt(gmax[i]);
            f.A = da.asDiagonal() * f.A * dc.asDiagonal();
            f.G = dg.asDiagonal() * f.G * dc.asDiagonal();
            col.array() *= dc.array();
            a_row.array() *= da.array();
            g_row.array() *= dg.array();
        }
        f.c = col.cwiseProduct(f.c);
        f.b = a_row.cwiseProduct(f.b);
        f.h = g_row.cwiseProduct(f.h);
        const double cn = f.c.lpNorm<Eigen::Infinity>();
        cost = cn > 0.0 ? cn : 1.0;
        f.c /= cost;
    }
};

// ---- KKT system -----------------------------------------------------------

class KktSystem {
public:
    KktSystem(const StandardForm& f, double reg) : f_(f), reg_(reg) {
        n_ = f.n;
        p_ = static_cast<int>(f.A.rows());
        m_ = f.cones.rows;
        const int ncones = static_cast<int>(f.cones.soc_dims.size());
        const int dim = n_ + p_ + m_ + 2 * ncones;
        std::vector<Triplet> trip;
        trip.reserve(static_cast<std::size_t>(f.A.nonZeros() + f.G.nonZeros() + dim + 2 * m_));
        for (int j = 0; j < n_; ++j) {
            trip.emplace_back(j, j, reg_);
            for (SpMat::InnerIterator it(f.A, j); it; ++it) trip.emplace_back(n_ + it.row(), j, it.value());
            for (SpMat::InnerIterator it(f.G, j); it; ++it) trip.emplace_back(n_ + p_ + it.row(), j, it.value());
        }
        for (int i = 0; i < p_ + m_; ++i) trip.emplace_back(n_ + i, n_ + i, -1.0);
        // Each cone gets two extra columns v and u, so that its block is
        // -eta^2 (D + u u' - v v') after elimination.
        const int zo = n_ + p_, xo = n_ + p_ + m_;
        for (int k = 0; k < ncones; ++k) {
            const int o = zo + f.cones.soc_start[k], d = f.cones.soc_dims[k];
            const int cv = xo + 2 * k, cu = cv + 1;
            for (int r = 1; r < d; ++r) trip.emplace_back(cv, o + r, 0.0);
            for (int r = 0; r < d; ++r) trip.emplace_back(cu, o + r, 0.0);
            trip.emplace_back(cv, cv, -1.0);
            trip.emplace_back(cu, cu, 1.0);
        }
        K_.resize(dim, dim);
        K_.setFromTriplets(trip.begin(), trip.end());
        K_.makeCompressed();

        diag_ptr_.resize(static_cast<std::size_t>(n_ + p_ + m_));
        for (int j = 0; j < n_ + p_ + m_; ++j) diag_ptr_[j] = &K_.coeffRef(j, j);
        for (int k = 0; k < ncones; ++k) {
            const int o = zo + f.cones.soc_start[k], d = f.cones.soc_dims[k];
            const int cv = xo + 2 * k, cu = cv + 1;
            std::vector<double*> v, u;
            for (int r = 1; r < d; ++r) v.push_back(&K_.coeffRef(cv, o + r));
            for (int r = 0; r < d; ++r) u.push_back(&K_.coeffRef(cu, o + r));
            v_ptr_.push_back(std::move(v));
            u_ptr_.push_back(std::move(u));
        }
        reg_diag_ = Vec::Zero(dim);
        reg_diag_.head(n_).setConstant(reg_);
        reg_diag_.segment(n_, p_ + m_).setConstant(-reg_);
        std::vector<int> sign(static_cast<std::size_t>(dim), -1);
        std::fill(sign.begin(), sign.begin() + n_, 1);
        for (int k = 0; k < ncones; ++k) sign[xo + 2 * k + 1] = 1;
        ldl_.analyze(K_, sign);
    }

    /// Loads the scaling into the z block and factors. Identity scaling when
    /// `w` is null.
    bool factor(const Scaling* w) {
        const auto& K = f_.cones;
        for (int j = 0; j < n_; ++j) *diag_ptr_[j] = reg_;
        for (int i = 0; i < p_; ++i) *diag_ptr_[n_ + i] = -reg_;
        const int zo = n_ + p_;
        for (int i = 0; i < K.orthant; ++i) {
            const double wi = w ? w->orth_w[i] : 1.0;
            *diag_ptr_[zo + i] = -wi * wi - reg_;
        }
        for (std::size_t k = 0; k < K.soc_dims.size(); ++k) {
            const int o = zo + K.soc_start[k], d = K.soc_dims[k];
            if (!w) {
                for (int r = 0; r < d; ++r) *diag_ptr_[o + r] = -1.0 - reg_;
                for (double* e : v_ptr_[k]) *e = 0.0;
                for (double* e : u_ptr_[k]) *e = 0.0;
                continue;
            }
            // W'W = eta^2 (2 wb wb' - J) = eta^2 (D + u u' - v v') with
            // D = diag(d1, 1, ..., 1), u = (u0, u1 q), v = (0, v1 q).
            const Vec& wb = w->wbar[k];
            const double eta = w->eta[k], e2 = eta * eta;
            const double a = wb[0];
            const double qq = wb.tail(d - 1).squaredNorm();
            const double d1 = 0.5 / (a * a + qq);
            const double u0 = std::sqrt(a * a + qq - d1);
            const double u1 = 2.0 * a / u0;
            const double v1 = std::sqrt(2.0 * (1.0 + d1)) / u0;
            *diag_ptr_[o] = -e2 * d1 - reg_;
            for (int r = 1; r < d; ++r) *diag_ptr_[o + r] = -e2 - reg_;
            *u_ptr_[k][0] = eta * u0;
            for (int r = 1; r < d; ++r) {
                *u_ptr_[k][r] = eta * u1 * wb[r];
                *v_ptr_[k][r - 1] = eta * v1 * wb[r];
            }
        }
        return ldl_.factor(K_);
    }

    Vec solve(const Vec& rhs) const {
        const int dim = static_cast<int>(K_.rows());
        Vec full = Vec::Zero(dim);
        full.head(rhs.size()) = rhs;
        Vec x = ldl_.solve(full);
        const double target = 1e-13 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
        double last = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 10; ++it) {
            const Vec r = full - (K_.selfadjointView<Eigen::Lower>() * x - reg_diag_.cwiseProduct(x));
            const double rn = r.lpNorm<Eigen::Infinity>();
            if (rn <= target || rn > 0.5 * last) break;
            last = rn;
            x += ldl_.solve(r);
        }
        return x.head(rhs.size());
    }

    int n() const { return n_; }
    int p() const { return p_; }
    int m() const { return m_; }

private:
    const StandardForm& f_;
    double reg_;
    int n_ = 0, p_ = 0, m_ = 0;
    SpMat K_;
    Vec reg_diag_;
    std::vector<double*> diag_ptr_;
    std::vector<std::vector<double*>> v_ptr_, u_ptr_;
    QuasiDefiniteLdl ldl_;
};

}  // namespace detail

inline ConicSolution solve(const ConicProblem& problem, const SolveOptions& opt = {}) {
    using detail::Vec;
    problem.check();
    if (!(opt.tol > 0.0)) throw DomainError("solver tolerance must be positive");

    ConicSolution out;
    auto built = detail::build_standard_form(problem);
    if (built.trivially_infeasible) {
        out.status = Status::infeasible;
        out.x.assign(static_cast<std::size_t>(problem.num_vars), 0.0);
        out.residuals = residuals(problem, out.x);
        return out;
    }
    auto& f = built.form;
    detail::Equilibration eq;
    eq.compute(f, opt.equilibration_passes);
    const auto& K = f.cones;
    const int n = f.n, p = static_cast<int>(f.A.rows()), m = K.rows;

    auto finish = [&](Status status, const Vec& xs, double tau, int iters) {
        out.status = status;
        out.iterations = iters;
        out.x.resize(static_cast<std::size_t>(problem.num_vars));
        const double t = tau > 0.0 ? tau : 1.0;
        for (int j = 0; j < problem.num_vars; ++j) {
            const int col = built.column[j];
            out.x[j] = col >= 0 ? eq.col[col] * xs[col] / t : built.fixed[j];
        }
        out.objective = problem.objective(out.x);
        out.residuals = residuals(problem, out.x);
        out.max_equality_residual = out.residuals.equality;
        out.max_cone_residual = out.residuals.cone;
        return out;
    };

    // Every variable fixed: only feasibility remains.
    if (n == 0) {
        auto res = finish(Status::optimal, Vec::Zero(0), 1.0, 0);
        if (res.residuals.max() > opt.tol)
            res.status = Status::infeasible;
        return res;
    }

    // Degenerate: no constraints at all.
    if (m == 0 && p == 0) {
        if (f.c.lpNorm<Eigen::Infinity>() > 0.0 && n > 0) return finish(Status::unbounded, Vec::Zero(n), 1.0, 0);
        return finish(Status::optimal, Vec::Zero(n), 1.0, 0);
    }

    detail::KktSystem kkt(f, opt.regularization);
    auto split = [&](const Vec& v, Vec& x, Vec& y, Vec& z) {
        x = v.head(n);
        y = v.segment(n, p);
        z = v.tail(m);
    };
    auto stack = [&](const Vec& x, const Vec& y, const Vec& z) {
        Vec v(n + p + m);
        v << x, y, z;
        return v;
    };

    // Initial point from two least-squares solves with identity scaling.
    if (!kkt.factor(nullptr)) return finish(Status::numerical_failure, Vec::Zero(n), 1.0, 0);
    Vec x, y, z, s, tmp_x, tmp_y;
    split(kkt.solve(stack(Vec::Zero(n), f.b, f.h)), x, tmp_y, z);
    s = -z;
    detail::shift_interior(K, s);
    split(kkt.solve(stack(-f.c, Vec::Zero(p), Vec::Zero(m))), tmp_x, y, z);
    detail::shift_interior(K, z);
    double tau = 1.0, kappa = 1.0;

    const double resx0 = std::max(1.0, f.c.lpNorm<Eigen::Infinity>());
    const double resy0 = std::max(1.0, p > 0 ? f.b.lpNorm<Eigen::Infinity>() : 0.0);
    const double resz0 = std::max(1.0, m > 0 ? f.h.lpNorm<Eigen::Infinity>() : 0.0);
    const double degree = K.degree() + 1.0;
    const Vec e = detail::identity_element(K);

    struct Best {
        double merit = std::numeric_limits<double>::infinity();
        Vec x;
        double tau = 1.0;
    } best;

    detail::Scaling W;
    int iter = 0, best_iter = 0;
    for (;; ++iter) {
        const Vec rx = f.A.transpose() * y + f.G.transpose() * z + f.c * tau;
        const Vec ry = f.A * x - f.b * tau;
        const Vec rz = s + f.G * x - f.h * tau;
        const double cx = f.c.dot(x), by = f.b.dot(y), hz = f.h.dot(z);
        const double rt = kappa + cx + by + hz;

        const double pres = std::max(p > 0 ? ry.lpNorm<Eigen::Infinity>() / resy0 : 0.0,
                                     m > 0 ? rz.lpNorm<Eigen::Infinity>() / resz0 : 0.0) / tau;
        const double dres = rx.lpNorm<Eigen::Infinity>() / resx0 / tau;
        const double pcost = cx / tau;
        const double dcost = -(by + hz) / tau;
        const double gap = s.dot(z) / (tau * tau);
        const double gap_ref = std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
        out.primal_infeasibility = pres;
        out.dual_infeasibility = dres;
        out.duality_gap = gap / gap_ref;

        if (opt.verbose)
            std::fprintf(stderr, "%3d pcost %+.6e dcost %+.6e gap %.2e pres %.2e dres %.2e tau %.2e kap %.2e\n", iter,
                         pcost, dcost, gap / gap_ref, pres, dres, tau, kappa);
        if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(gap)) break;

        const double merit = std::max({pres, dres, gap / gap_ref, std::abs(pcost - dcost) / gap_ref});
        if (merit < 0.5 * best.merit) best_iter = iter;
        if (merit < best.merit) best = {merit, x, tau};
        if (iter - best_iter >= opt.stall_window && best.merit <= opt.reduced_tol) break;

        if (pres <= opt.tol && dres <= opt.tol && gap / gap_ref <= opt.tol &&
            std::abs(pcost - dcost) / gap_ref <= opt.tol)
            return finish(Status::optimal, x, tau, iter);

        // Infeasibility certificates (checked once tau has collapsed).
        if (tau < kappa) {
            const double hz_by = hz + by;
            if (hz_by < 0.0) {
                const double res = (f.A.transpose() * y + f.G.transpose() * z).lpNorm<Eigen::Infinity>() / -hz_by;
                if (res <= opt.tol) return finish(Status::infeasible, x, tau, iter);
            }
            if (cx < 0.0) {
                const double res =
                    std::max(p > 0 ? (f.A * x).lpNorm<Eigen::Infinity>() : 0.0, (f.G * x + s).lpNorm<Eigen::Infinity>()) /
                    -cx;
                if (res <= opt.tol) return finish(Status::unbounded, x, tau, iter);
            }
        }
        if (iter >= opt.max_iter) return finish(Status::iteration_limit, best.x, best.tau, iter);

        if (!W.compute(K, s, z) || !kkt.factor(&W)) {
            if (opt.verbose) std::fprintf(stderr, "scaling or factorization failed\n");
            break;
        }
        const Vec& lambda = W.lambda;

        // Direction through the first three block equations as a function of
        // dtau: d = q + p*dtau, with K p_sol = [-c; b; h].
        Vec px, py, pz;
        split(kkt.solve(stack(-f.c, f.b, f.h)), px, py, pz);
        const double denom = f.c.dot(px) + f.b.dot(py) + f.h.dot(pz) - kappa / tau;

        auto direction = [&](double sig, const Vec& ds_target, double dk_target, Vec& dx, Vec& dy, Vec& dz,
                             Vec& ds, double& dtau, double& dkap) {
            const double r = 1.0 - sig;
            const Vec lds = detail::jordan_divide(K, lambda, ds_target);
            const Vec wlds = W.apply(K, lds, false);
            Vec qx, qy, qz;
            split(kkt.solve(stack(-r * rx, -r * ry, -r * rz + wlds)), qx, qy, qz);
            const double rhs_tau = -r * rt + dk_target / tau;
            dtau = (rhs_tau - f.c.dot(qx) - f.b.dot(qy) - f.h.dot(qz)) / denom;
            dx = qx + px * dtau;
            dy = qy + py * dtau;
            dz = qz + pz * dtau;
            // ds = -W (lambda \ ds_target) - W'W dz
            ds = -wlds - W.apply(K, W.apply(K, dz, false), false);
            dkap = (-dk_target - kappa * dtau) / tau;
        };

        const double mu = (s.dot(z) + tau * kappa) / degree;

        Vec dxa, dya, dza, dsa;
        double dta, dka;
        direction(0.0, detail::jordan(K, lambda, lambda), tau * kappa, dxa, dya, dza, dsa, dta, dka);
        double alpha_aff = std::min(detail::max_step(K, s, dsa, 1.0), detail::max_step(K, z, dza, 1.0));
        if (dta < 0.0) alpha_aff = std::min(alpha_aff, -tau / dta);
        if (dka < 0.0) alpha_aff = std::min(alpha_aff, -kappa / dka);
        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0), 0.0, 1.0);

        const Vec corr = detail::jordan(K, W.apply(K, dsa, true), W.apply(K, dza, false));
        const Vec ds_target = detail::jordan(K, lambda, lambda) + corr - sigma * mu * e;
        const double dk_target = tau * kappa + dta * dka - sigma * mu;

        Vec dx, dy, dz, ds;
        double dtau, dkap;
        direction(sigma, ds_target, dk_target, dx, dy, dz, ds, dtau, dkap);

        double alpha = std::min(detail::max_step(K, s, ds, 1e30), detail::max_step(K, z, dz, 1e30));
        if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
        if (dkap < 0.0) alpha = std::min(alpha, -kappa / dkap);
        alpha = std::min(1.0, opt.step_fraction * alpha);
        if (opt.verbose) std::fprintf(stderr, "    step %.3e sigma %.3e\n", alpha, sigma);
        if (!(alpha > 1e-12)) break;

        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dtau;
        kappa += alpha * dkap;
    }
    if (best.x.size() == 0) return finish(Status::numerical_failure, x, tau, iter);
    return finish(best.merit <= opt.reduced_tol ? Status::optimal : Status::numerical_failure, best.x, best.tau, iter);
}

}  // namespace fuelopt::socp
