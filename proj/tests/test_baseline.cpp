#include <algorithm>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fuelopt/baseline.hpp"
#include "fuelopt/case_io.hpp"
#include "fuelopt/engine.hpp"

using namespace fuelopt;
using namespace fuelopt::baseline;

namespace {

// Grid argmin of the ATG + MTG split at 5 MW, 1e-3 MW step.
constexpr double kTinyGolden = 1480.396095773;

NetworkCase fixture(const std::string& name) {
    return load_case_file(std::string(FUELOPT_CASE_DIR) + "/" + name + ".case.json");
}

GeneratorSpec unit(const std::string& id, double pmax, double c) {
    GeneratorSpec g;
    g.id = id;
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

TEST(BruteForce, SingleGeneratorForced) {
    const auto cs = fixture("single_gen");
    const auto r = brute_force_dispatch(cs);
    ASSERT_TRUE(r.feasible);
    EXPECT_EQ(r.p_mw[0][0], 2.0);
    EXPECT_NEAR(r.fuel_liters, fuel_rate(cs.generators[0], 2.0, 0.01), 1e-9);
}

TEST(BruteForce, TinyGolden) {
    const auto r = brute_force_dispatch(fixture("tiny"));
    ASSERT_TRUE(r.feasible);
    EXPECT_NEAR(r.p_mw[0][0], 4.7, 1e-9);
    EXPECT_NEAR(r.p_mw[0][1], 0.3, 1e-9);
    EXPECT_NEAR(r.fuel_liters, kTinyGolden, 1e-6);
}

TEST(BruteForce, ZeroLoad) {
    auto cs = fixture("tiny");
    cs.loads[0][0] = {};
    const auto r = brute_force_dispatch(cs);
    ASSERT_TRUE(r.feasible);
    for (double p : r.p_mw[0]) EXPECT_EQ(p, 0.0);
    EXPECT_EQ(r.fuel_liters, 0.0);
}

TEST(BruteForce, NoFeasiblePoint) {
    auto cs = fixture("tiny");
    cs.loads[0][0].p_mw = 50.0;
    EXPECT_FALSE(brute_force_dispatch(cs).feasible);
}

TEST(BruteForce, PermutationInvariant) {
    auto cs = copper_plate({unit("A", 4.7, 0.174), unit("B", 35.0, 0.204), unit("C", 10.0, 0.19)}, {12.0});
    OracleOptions opt;
    opt.step_mw = 1e-2;
    const double ref = brute_force_dispatch(cs, opt).fuel_liters;
    std::vector<int> order{0, 1, 2};
    const auto gens = cs.generators;
    while (std::next_permutation(order.begin(), order.end())) {
        for (int k = 0; k < 3; ++k) cs.generators[k] = gens[order[k]];
        EXPECT_NEAR(brute_force_dispatch(cs, opt).fuel_liters, ref, 1e-9 * ref);
    }
}

TEST(BruteForce, RespectsRamps) {
    auto g = unit("M", 35.0, 0.204);
    g.ramp_up_mw = g.ramp_down_mw = 2.0;
    auto cs = copper_plate({unit("A", 4.7, 0.174), g}, {4.0, 10.0});
    OracleOptions opt;
    opt.step_mw = 1e-2;
    const auto r = brute_force_dispatch(cs, opt);
    ASSERT_TRUE(r.feasible);
    EXPECT_LE(r.p_mw[1][1] - r.p_mw[0][1], 2.0 + 1e-9);
    for (int t = 0; t < 2; ++t) EXPECT_NEAR(r.p_mw[t][0] + r.p_mw[t][1], cs.total_load_mw(t), 1e-9);
}

TEST(BruteForce, LossyLineNeedsExtraGeneration) {
    const auto cs = fixture("two_bus");
    OracleOptions opt;
    opt.step_mw = 1e-2;
    const auto r = brute_force_dispatch(cs, opt);
    ASSERT_TRUE(r.feasible);
    const double generated = r.p_mw[0][0] + r.p_mw[0][1];
    EXPECT_GE(generated, cs.total_load_mw(0) - opt.step_mw);
    EXPECT_LE(generated, cs.total_load_mw(0) + 0.5);

    const auto fp = solve_dispatch(cs);
    ASSERT_EQ(fp.status, DispatchStatus::converged);
    EXPECT_LE(fp.fuel_liters, r.fuel_liters * 1.005);
}

TEST(BruteForce, RejectsLargeCases) {
    EXPECT_THROW(brute_force_dispatch(fixture("ship")), DomainError);
    auto cs = fixture("tiny");
    cs.system.horizon = 3;
    EXPECT_THROW(check_tiny(cs), DomainError);
    cs = fixture("tiny");
    for (int id : {2, 3, 4}) cs.buses.push_back(BusSpec{.id = id});
    EXPECT_THROW(check_tiny(cs), DomainError);
    cs = fixture("tiny");
    OracleOptions opt;
    opt.step_mw = 0.0;
    EXPECT_THROW(brute_force_dispatch(cs, opt), DomainError);
}

TEST(EqualSharing, Examples) {
    auto twin = copper_plate({unit("M1", 35.0, 0.204), unit("M2", 35.0, 0.204)}, {14.0});
    const auto a = equal_sharing_dispatch(twin);
    EXPECT_NEAR(a.p_mw[0][0], 7.0, 1e-12);
    EXPECT_NEAR(a.p_mw[0][1], 7.0, 1e-12);

    auto mixed = copper_plate({unit("A", 4.7, 0.174), unit("M", 35.0, 0.204)}, {7.94});
    const auto b = equal_sharing_dispatch(mixed);
    EXPECT_NEAR(b.per_unit[0], 0.2, 1e-12);
    EXPECT_NEAR(b.p_mw[0][0], 0.94, 1e-12);
    EXPECT_NEAR(b.p_mw[0][1], 7.0, 1e-12);
    const double fuel = fuel_rate(mixed.generators[0], 0.94, 0.01) + fuel_rate(mixed.generators[1], 7.0, 0.01);
    EXPECT_NEAR(b.fuel_liters, fuel, 1e-9);

    mixed.loads.push_back({BusLoad{39.8, 0.0}});
    mixed.system.horizon = 2;
    try {
        equal_sharing_dispatch(mixed);
        FAIL() << "expected infeasible sharing";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("t=1"), std::string::npos);
    }
}

TEST(EqualSharing, MatchesVariantC) {
    const auto cs = fixture("tiny");
    const auto shared = equal_sharing_dispatch(cs);
    SolverConfig cfg;
    cfg.variant = Variant::C;
    const auto fp = solve_dispatch(cs, cfg);
    ASSERT_EQ(fp.status, DispatchStatus::converged);
    EXPECT_NEAR(fp.fuel_liters, shared.fuel_liters, 1e-6 * shared.fuel_liters);
}
