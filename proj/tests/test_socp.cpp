#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fuelopt/socp.hpp"
#include "fuelopt/socp_solver.hpp"

using namespace fuelopt::socp;

namespace {

// minimize w  s.t. 2*w*(1/2) >= p^2, p fixed.
ConicProblem tight_square(double p_value) {
    ModelForm m;
    const int w = m.linear.add_var(-kInf, kInf, 1.0);
    const int p = m.linear.add_var(p_value, p_value);
    m.squared.push_back({w, 1.0, {p}});
    return assemble(m).problem;
}

}  // namespace

TEST(Assemble, SquaredEpigraphGetsHalfHead) {
    ModelForm m;
    const int w = m.linear.add_var();
    const int p = m.linear.add_var();
    m.squared.push_back({w, 1.0, {p}});
    const auto a = assemble(m);
    ASSERT_EQ(a.problem.num_vars, 3);
    ASSERT_EQ(a.problem.cones.size(), 1u);
    const auto& cone = a.problem.cones[0];
    EXPECT_EQ(cone.kind, ConeKind::rotated);
    EXPECT_EQ(cone.vars, (std::vector<int>{w, 2, p}));
    EXPECT_EQ(a.problem.lower[2], 0.5);
    EXPECT_EQ(a.problem.upper[2], 0.5);
}

TEST(Assemble, HyperbolicPairGetsSqrt2Tail) {
    ModelForm m;
    const int t = m.linear.add_var();
    const int s = m.linear.add_var();
    m.hyperbolic.push_back({t, s});
    const auto a = assemble(m);
    ASSERT_EQ(a.problem.cones.size(), 1u);
    EXPECT_EQ(a.problem.cones[0].vars, (std::vector<int>{t, s, 2}));
    EXPECT_DOUBLE_EQ(a.problem.lower[2], std::sqrt(2.0));
    // 2 * t * s >= 2 at t = s = 1 holds with equality.
    const auto r = residuals(a.problem, a.extend({1.0, 1.0}));
    EXPECT_LE(r.cone, 1e-15);
}

TEST(Assemble, EmptyModel) {
    const auto a = assemble(ModelForm{});
    EXPECT_EQ(a.problem.num_vars, 0);
    EXPECT_TRUE(a.problem.cones.empty());
    EXPECT_TRUE(a.problem.rows.empty());
}

TEST(Assemble, UnregisteredVariableThrows) {
    ModelForm m;
    m.linear.add_var();
    m.squared.push_back({0, 1.0, {5}});
    EXPECT_THROW(assemble(m), fuelopt::AssemblyError);
}

TEST(Residuals, ConeAndEqualityViolations) {
    ConicProblem p;
    for (int i = 0; i < 3; ++i) p.add_var();
    p.add_cone(ConeKind::rotated, {0, 1, 2});
    p.add_row({{0, 2.0}, {1, 1.0}}, 1.0, 1.0);
    auto r = residuals(p, {0.0, 0.0, 1.0});
    EXPECT_DOUBLE_EQ(r.cone, 1.0);
    // Feasible point, then perturb one coordinate by 1e-3.
    std::vector<double> x{0.5, 0.0, 0.0};
    r = residuals(p, x);
    EXPECT_EQ(r.equality, 0.0);
    EXPECT_EQ(r.cone, 0.0);
    x[0] += 1e-3;
    r = residuals(p, x);
    EXPECT_NEAR(r.equality, 2e-3, 1e-15);
}

TEST(Solve, TightEpigraph) {
    const auto sol = solve(tight_square(2.0));
    ASSERT_EQ(sol.status, Status::optimal);
    EXPECT_NEAR(sol.x[0], 4.0, 1e-7);
    EXPECT_NEAR(sol.objective, 4.0, 1e-7);
}

TEST(Solve, ReciprocalAtRatedEfficiency) {
    ModelForm m;
    const int t = m.linear.add_var(-kInf, kInf, 1.0);
    const int s = m.linear.add_var(-kInf, 0.352);
    m.hyperbolic.push_back({t, s});
    const auto sol = solve(assemble(m).problem);
    ASSERT_EQ(sol.status, Status::optimal);
    EXPECT_NEAR(sol.x[t], 1.0 / 0.352, 1e-7);
}

TEST(Solve, ContradictoryBoundsInfeasible) {
    ConicProblem p;
    p.add_var(1.0, 0.0, 1.0);
    EXPECT_EQ(solve(p).status, Status::infeasible);
}

TEST(Solve, InfeasibleLinearSystemDetectedByCertificate) {
    ConicProblem p;
    const int a = p.add_var(0.0, 1.0, 1.0);
    const int b = p.add_var(0.0, 1.0, 1.0);
    p.add_row({{a, 1.0}, {b, 1.0}}, 3.0, kInf);
    const auto sol = solve(p);
    EXPECT_EQ(sol.status, Status::infeasible);
}

TEST(Solve, InfeasibleConeDetected) {
    // 2*x0*x1 >= x2^2 with x0 = x1 = 0.5 and x2 >= 1.
    ConicProblem p;
    const int x0 = p.add_var(0.5, 0.5);
    const int x1 = p.add_var(0.5, 0.5);
    const int x2 = p.add_var(1.0, kInf, 1.0);
    p.add_cone(ConeKind::rotated, {x0, x1, x2});
    EXPECT_EQ(solve(p).status, Status::infeasible);
}

TEST(Solve, UnboundedDetected) {
    ConicProblem p;
    const int a = p.add_var(-kInf, 1.0, 1.0);
    const int b = p.add_var(0.0, kInf, 0.0);
    p.add_row({{a, 1.0}, {b, -1.0}}, -kInf, 0.0);
    EXPECT_EQ(solve(p).status, Status::unbounded);
}

TEST(Solve, Deterministic) {
    const auto p = tight_square(3.0);
    const auto a = solve(p);
    const auto b = solve(p);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Solve, TwoDimensionalGridOracle) {
    // minimize c'x over the disc ||x - center|| <= r intersected with a box
    // and one halfplane; compared with a zooming grid search.
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double cx = U(rng), cy = U(rng), r = 0.5 + 0.5 * std::abs(U(rng));
        const double c0 = U(rng), c1 = U(rng);
        const double h0 = U(rng), h1 = U(rng), hb = 0.3 + 0.2 * U(rng);
        const double lo = -0.8, hi = 0.9;

        ConicProblem p;
        const int x = p.add_var(lo, hi, c0);
        const int y = p.add_var(lo, hi, c1);
        const int rad = p.add_var(r, r);
        const int dx = p.add_var();
        const int dy = p.add_var();
        p.add_row({{dx, 1.0}, {x, -1.0}}, -cx, -cx);
        p.add_row({{dy, 1.0}, {y, -1.0}}, -cy, -cy);
        p.add_row({{x, h0}, {y, h1}}, -kInf, hb);
        p.add_cone(ConeKind::quadratic, {rad, dx, dy});

        auto feasible = [&](double a, double b) {
            return a >= lo && a <= hi && b >= lo && b <= hi && (a - cx) * (a - cx) + (b - cy) * (b - cy) <= r * r &&
                   h0 * a + h1 * b <= hb;
        };
        double best = std::numeric_limits<double>::infinity(), ba = 0, bb = 0;
        double wlo = lo, whi = hi, vlo = lo, vhi = hi;
        for (int level = 0; level < 6; ++level) {
            const int N = 400;
            for (int i = 0; i <= N; ++i)
                for (int j = 0; j <= N; ++j) {
                    const double a = wlo + (whi - wlo) * i / N, b = vlo + (vhi - vlo) * j / N;
                    if (feasible(a, b) && c0 * a + c1 * b < best) best = c0 * a + c1 * b, ba = a, bb = b;
                }
            const double span = (whi - wlo) / 20;
            wlo = ba - span, whi = ba + span, vlo = bb - span, vhi = bb + span;
        }
        if (!std::isfinite(best)) {
            EXPECT_EQ(solve(p).status, Status::infeasible) << "trial " << trial;
            continue;
        }
        const auto sol = solve(p);
        ASSERT_EQ(sol.status, Status::optimal) << "trial " << trial;
        EXPECT_NEAR(sol.objective, best, 1e-4 * (1.0 + std::abs(best))) << "trial " << trial;
    }
}

namespace {

// Random problem with a known optimum built from a primal-dual certificate:
//   min c_x'x + c_u'u  s.t.  u_k - M_k x = d_k,  u_k in Qr,  a_r'x <= h_r,
// with complementary (u*, z*) on the cone boundaries and active/inactive rows.
struct Certified {
    ConicProblem problem;
    double optimum = 0.0;
};

Certified certified_problem(std::mt19937& rng, int n, int cones, int rows) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.2, 2.0);
    Certified out;
    auto& p = out.problem;
    std::vector<double> xs(n);
    for (int j = 0; j < n; ++j) xs[j] = N(rng);
    std::vector<double> cx(n, 0.0);
    for (int j = 0; j < n; ++j) p.add_var(-kInf, kInf, 0.0);

    double optimum = 0.0;
    for (int k = 0; k < cones; ++k) {
        // Boundary point u = (a, b, t) with 2ab = |t|^2; dual z = s*(b, a, -t).
        const double a = U(rng), b = U(rng), ang = N(rng);
        const double tn = std::sqrt(2.0 * a * b);
        const double t0 = tn * std::cos(ang), t1 = tn * std::sin(ang);
        const double sc = U(rng);
        const double u[4] = {a, b, t0, t1};
        const double z[4] = {sc * b, sc * a, -sc * t0, -sc * t1};
        std::vector<int> vars;
        for (int i = 0; i < 4; ++i) {
            const double y = N(rng);
            const int v = p.add_var(-kInf, kInf, y + z[i]);
            vars.push_back(v);
            optimum += (y + z[i]) * u[i];
            // u_i - M_i x = d_i with random sparse M_i.
            std::vector<LinearTerm> terms{{v, 1.0}};
            double mx = 0.0;
            for (int j = 0; j < n; ++j)
                if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
                    const double m = N(rng);
                    terms.push_back({j, -m});
                    mx += m * xs[j];
                    cx[j] += -m * y;  // c_x = -M'y - A'w
                }
            p.add_row(terms, u[i] - mx, u[i] - mx);
        }
        p.add_cone(ConeKind::rotated, vars);
    }
    for (int r = 0; r < rows; ++r) {
        std::vector<LinearTerm> terms;
        double ax = 0.0;
        std::vector<double> a(n, 0.0);
        for (int j = 0; j < n; ++j) {
            a[j] = N(rng);
            terms.push_back({j, a[j]});
            ax += a[j] * xs[j];
        }
        const bool active = r < n;  // enough active rows to pin x
        const double w = active ? U(rng) : 0.0;
        for (int j = 0; j < n; ++j) cx[j] -= a[j] * w;
        p.add_row(terms, -kInf, active ? ax : ax + U(rng));
    }
    for (int j = 0; j < n; ++j) {
        p.cost[j] = cx[j];
        optimum += cx[j] * xs[j];
    }
    out.optimum = optimum;
    return out;
}

}  // namespace

TEST(Solve, CertifiedRandomProblems) {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 4 + trial % 10;
        const auto cp = certified_problem(rng, n, 1 + trial % 4, n + 6);
        const auto sol = solve(cp.problem);
        ASSERT_EQ(sol.status, Status::optimal) << "trial " << trial;
        EXPECT_NEAR(sol.objective, cp.optimum, 1e-4 * (1.0 + std::abs(cp.optimum))) << "trial " << trial;
        EXPECT_LE(sol.residuals.max(), 1e-6 * (1.0 + std::abs(cp.optimum))) << "trial " << trial;
    }
}

TEST(Solve, ArgminInvariantUnderObjectiveScaling) {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 8; ++trial) {
        auto cp = certified_problem(rng, 6, 2, 12);
        const auto base = solve(cp.problem);
        ASSERT_EQ(base.status, Status::optimal);
        for (double lambda : {0.01, 7.5, 1e3}) {
            auto scaled = cp.problem;
            for (auto& c : scaled.cost) c *= lambda;
            const auto sol = solve(scaled);
            ASSERT_EQ(sol.status, Status::optimal);
            for (int j = 0; j < 6; ++j) EXPECT_NEAR(sol.x[j], base.x[j], 1e-5 * (1.0 + std::abs(base.x[j])));
        }
    }
}

TEST(Dump, WritesTripletsAndCones) {
    auto p = tight_square(2.0);
    std::ostringstream out;
    dump(p, out);
    const auto text = out.str();
    EXPECT_NE(text.find("conic-problem v1"), std::string::npos);
    EXPECT_NE(text.find("vars 3"), std::string::npos);
    EXPECT_NE(text.find("cone rotated 0 2 1"), std::string::npos);
}
