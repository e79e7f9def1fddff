#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fuelopt/baseline.hpp"
#include "fuelopt/case_io.hpp"
#include "fuelopt/engine.hpp"

using namespace fuelopt;

namespace {

NetworkCase fixture(const std::string& name) {
    return load_case_file(std::string(FUELOPT_CASE_DIR) + "/" + name + ".case.json");
}

GeneratorSpec unit(const std::string& id, const std::string& cls, double pmax, double c) {
    GeneratorSpec g;
    g.id = id;
    g.unit_class = cls;
    g.bus = 1;
    g.p_max_mw = g.p_base_mw = pmax;
    g.q_min_mvar = -pmax;
    g.q_max_mvar = pmax;
    g.a = -0.133;
    g.b = 0.311;
    g.c = c;
    return g;
}

NetworkCase copper_plate(std::vector<GeneratorSpec> gens, std::vector<double> load_mw) {
    NetworkCase cs;
    cs.system.horizon = static_cast<int>(load_mw.size());
    cs.system.alpha_mwh_per_liter = 0.01;
    cs.buses.push_back(BusSpec{.id = 1});
    cs.generators = std::move(gens);
    for (double l : load_mw) cs.loads.push_back({BusLoad{l, 0.0}});
    return cs;
}

}  // namespace

TEST(SolveDispatch, SingleGeneratorIsForced) {
    const auto cs = fixture("single_gen");
    const auto sol = solve_dispatch(cs);
    ASSERT_EQ(sol.status, DispatchStatus::converged) << sol.message;
    EXPECT_NEAR(sol.p_mw[0][0], 2.0, 1e-6);
    const auto& g = cs.generators[0];
    const double expected = 2.0 / (0.01 * efficiency(g, 2.0 / g.p_base_mw)) * 1.0;
    EXPECT_NEAR(sol.fuel_liters, expected, 1e-6 * expected);
    EXPECT_LE(sol.outer_iterations(), 3);
    EXPECT_NEAR(sol.trace.front().objective, 2.0 / efficiency(g, 2.0 / g.p_base_mw), 1e-6);
}

TEST(SolveDispatch, ZeroLoadBurnsNothing) {
    auto cs = fixture("single_gen");
    for (auto& row : cs.loads)
        for (auto& l : row) l = {};
    const auto sol = solve_dispatch(cs);
    ASSERT_EQ(sol.status, DispatchStatus::converged) << sol.message;
    EXPECT_NEAR(sol.p_mw[0][0], 0.0, 1e-6);
    EXPECT_NEAR(sol.fuel_liters, 0.0, 1e-3);
}

TEST(SolveDispatch, InfeasibleLoadIsReported) {
    auto cs = fixture("single_gen");
    cs.loads[0][0].p_mw = 50.0;
    const auto sol = solve_dispatch(cs);
    EXPECT_EQ(sol.status, DispatchStatus::infeasible);
}

TEST(SolveDispatch, TinyMatchesOracle) {
    const auto cs = fixture("tiny");
    const auto sol = solve_dispatch(cs);
    ASSERT_EQ(sol.status, DispatchStatus::converged) << sol.message;
    const auto oracle = baseline::brute_force_dispatch(cs);
    ASSERT_TRUE(oracle.feasible);
    EXPECT_NEAR(sol.fuel_liters, oracle.fuel_liters, 0.005 * oracle.fuel_liters);
    for (std::size_t g = 0; g < cs.generators.size(); ++g)
        EXPECT_NEAR(sol.p_mw[0][g], oracle.p_mw[0][g], 0.05) << cs.generators[g].id;
}

TEST(SolveDispatch, StorageCaseMatchesOracle) {
    const auto cs = fixture("storage_two_step");
    const auto sol = solve_dispatch(cs);
    ASSERT_EQ(sol.status, DispatchStatus::converged) << sol.message;
    baseline::OracleOptions opt;
    opt.step_mw = 1e-2;
    const auto oracle = baseline::brute_force_dispatch(cs, opt);
    ASSERT_TRUE(oracle.feasible);
    EXPECT_NEAR(sol.fuel_liters, oracle.fuel_liters, 0.005 * oracle.fuel_liters);
    EXPECT_LE(sol.fuel_liters, oracle.fuel_liters * (1.0 + 1e-6));
}

TEST(SolveDispatch, Invariants) {
    const auto cs = fixture("storage_two_step");
    const auto sol = solve_dispatch(cs);
    ASSERT_EQ(sol.status, DispatchStatus::converged);
    EXPECT_GE(sol.best_iteration, 1);
    EXPECT_LE(sol.best_iteration, sol.outer_iterations());
    EXPECT_GE(sol.max_cone_gap, -1e-6);
    for (const auto& rec : sol.trace) {
        EXPECT_GE(rec.equiv_gap, -1e-9 * (1.0 + rec.objective));
        EXPECT_LE(rec.cut_max, 1e-9);
    }
    const auto& st = cs.storage[0];
    double net = 0.0;
    for (int t = 0; t < sol.horizon(); ++t) {
        net += sol.storage_mw[t][0];
        EXPECT_GE(sol.soc[t][0], st.soc_min - 1e-6);
        EXPECT_LE(sol.soc[t][0], st.soc_max + 1e-6);
        double balance = sol.storage_mw[t][0] - cs.total_load_mw(t);
        for (double p : sol.p_mw[t]) balance += p;
        EXPECT_NEAR(balance, 0.0, 1e-6);
    }
    EXPECT_NEAR(net, 0.0, 1e-6);
    EXPECT_NEAR(sol.fuel_liters, compute_fuel(sol, cs), 1e-9);
}

TEST(SolveDispatch, Deterministic) {
    const auto cs = fixture("storage_two_step");
    const auto a = solve_dispatch(cs), b = solve_dispatch(cs);
    EXPECT_EQ(a.p_mw, b.p_mw);
    EXPECT_EQ(a.storage_mw, b.storage_mw);
    EXPECT_EQ(a.fuel_liters, b.fuel_liters);
    EXPECT_EQ(a.outer_iterations(), b.outer_iterations());
}

TEST(ComputeFuel, Examples) {
    const auto atg = unit("ATG1", "ATG", 4.7, 0.174);
    auto cs = copper_plate({atg}, {4.7});
    DispatchSolution sol;
    sol.p_mw = {{4.7}};
    EXPECT_NEAR(compute_fuel(sol, cs), 1335.23, 5e-3);

    sol.p_mw.clear();
    EXPECT_EQ(compute_fuel(sol, cs), 0.0);

    auto pair = copper_plate({atg, atg}, {6.0});
    pair.generators[1].id = "ATG2";
    DispatchSolution both;
    both.p_mw = {{3.0, 3.0}};
    sol.p_mw = {{3.0}};
    EXPECT_EQ(compute_fuel(both, pair), 2.0 * compute_fuel(sol, cs));

    auto bad = cs;
    bad.generators[0].c = -1.0;
    sol.p_mw = {{1.0}};
    EXPECT_THROW(compute_fuel(sol, bad), DomainError);
}

TEST(CumulativeFuel, EndsAtTotal) {
    const auto cs = fixture("storage_two_step");
    const auto sol = solve_dispatch(cs);
    const auto cum = cumulative_fuel(sol, cs);
    ASSERT_EQ(cum.size(), 2u);
    EXPECT_LE(cum[0], cum[1]);
    EXPECT_NEAR(cum.back(), sol.fuel_liters, 1e-9);
}

TEST(RecoverState, Examples) {
    NetworkCase cs;
    for (int id : {1, 2}) cs.buses.push_back(BusSpec{.id = id});
    for (int k = 0; k < 3; ++k) cs.lines.push_back(LineSpec{.from_bus = 1, .to_bus = 2, .g = 1.0, .b = 5.0});
    socp::ConicProblem p;
    const auto m = operational_bounds(cs, p);
    std::vector<double> x(static_cast<std::size_t>(p.num_vars), 0.0);
    x[m.u[0][0]] = x[m.u[0][1]] = 1.0 / std::numbers::sqrt2;
    x[m.wr[0][0]] = 1.0;
    x[m.wr[0][1]] = x[m.wi[0][1]] = 1.0;
    x[m.theta[0][1]] = std::numbers::pi / 4;

    const auto st = recover_state(x, m, cs);
    EXPECT_NEAR(st.voltage[0][0], 1.0, 1e-15);
    EXPECT_NEAR(st.theta[0][0], 0.0, 1e-15);
    EXPECT_NEAR(st.theta[0][1], std::numbers::pi / 4, 1e-15);
    EXPECT_TRUE(std::isnan(st.theta[0][2]));
    EXPECT_FALSE(st.angle_defined[0][2]);
    EXPECT_NEAR(st.max_discrepancy, 0.0, 1e-15);
}

TEST(CompareModels, VariantCSharesEqually) {
    const auto cs = copper_plate({unit("M1", "MTG", 35.0, 0.204), unit("M2", "MTG", 35.0, 0.204)}, {14.0});
    const auto res = compare_models(cs, {Variant::C});
    ASSERT_EQ(res[0].solution.status, DispatchStatus::converged);
    EXPECT_NEAR(res[0].solution.p_mw[0][0], 7.0, 1e-6);
    EXPECT_NEAR(res[0].solution.p_mw[0][1], 7.0, 1e-6);
}

TEST(CompareModels, OverloadedVariantFailsAlone) {
    const auto cs = copper_plate({unit("M1", "MTG", 35.0, 0.204), unit("M2", "MTG", 35.0, 0.204),
                                  unit("A1", "ATG", 4.7, 0.174), unit("A2", "ATG", 4.7, 0.174)},
                                 {45.0, 30.0});
    const auto res = compare_models(cs, {Variant::full, Variant::A, Variant::B, Variant::C});
    ASSERT_EQ(res.size(), 4u);
    EXPECT_EQ(res[0].variant, Variant::full);
    EXPECT_EQ(res[2].variant, Variant::B);
    EXPECT_EQ(res[2].solution.status, DispatchStatus::infeasible);
    for (std::size_t k : {0u, 1u, 3u}) {
        ASSERT_EQ(res[k].solution.status, DispatchStatus::converged) << to_string(res[k].variant);
        ASSERT_EQ(res[k].cumulative.size(), 2u);
        EXPECT_NEAR(res[k].cumulative.back(), res[k].solution.fuel_liters, 1e-9);
    }
}

TEST(CompareModels, VariantNeedsUnitClasses) {
    const auto cs = copper_plate({unit("X", "", 35.0, 0.204)}, {1.0});
    const auto res = compare_models(cs, {Variant::A});
    EXPECT_EQ(res[0].solution.status, DispatchStatus::infeasible);
    EXPECT_FALSE(res[0].error.empty());
}

TEST(Variant, Names) {
    for (auto v : {Variant::full, Variant::A, Variant::B, Variant::C}) EXPECT_EQ(parse_variant(to_string(v)), v);
    EXPECT_FALSE(parse_variant("D").has_value());
}
