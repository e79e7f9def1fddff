#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fuelopt/fractional.hpp"

using namespace fuelopt;
using namespace fuelopt::frac;

namespace {

RatioTerm term(double a, double c) {
    RatioTerm t;
    t.numerator = a;
    t.inverse_denominator = c;
    return t;
}

// Minimizes zeta*A^2 + C^2/zeta over log(zeta) by a dense grid followed by
// golden-section refinement.
double grid_zeta(double a, double c) {
    auto f = [&](double lz) {
        const double z = std::exp(lz);
        return z * a * a + c * c / z;
    };
    double best = -20.0;
    for (double lz = -20.0; lz <= 20.0; lz += 1e-3)
        if (f(lz) < f(best)) best = lz;
    double lo = best - 1e-3, hi = best + 1e-3;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int k = 0; k < 100; ++k) {
        const double m1 = hi - r * (hi - lo), m2 = lo + r * (hi - lo);
        (f(m1) < f(m2) ? hi : lo) = (f(m1) < f(m2) ? m2 : m1);
    }
    return std::exp(0.5 * (lo + hi));
}

}  // namespace

TEST(RatioSum, Examples) {
    const std::vector<RatioTerm> one{term(2.0, 0.5)};
    EXPECT_DOUBLE_EQ(ratio_sum(one, 1.0), 1.0);
    const std::vector<RatioTerm> zeros{term(0.0, 3.0), term(0.0, 1.5)};
    EXPECT_EQ(ratio_sum(zeros, 1.0), 0.0);
    const std::vector<RatioTerm> two{term(1.0, 1.0), term(3.0, 2.0)};
    EXPECT_DOUBLE_EQ(ratio_sum(two, 1.0), 7.0);
    EXPECT_DOUBLE_EQ(ratio_sum(two, 0.5), 3.5);
}

TEST(Surrogate, Examples) {
    const std::vector<RatioTerm> t{term(2.0, 0.5)};
    EXPECT_DOUBLE_EQ(surrogate(t, {{{0.25, 4.0}}}, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(surrogate(t, {{{1.0, 1.0}}}, 1.0), 2.125);
    const std::vector<RatioTerm> unit{term(1.0, 1.0)};
    EXPECT_DOUBLE_EQ(surrogate(unit, AuxiliaryState::ones(1), 1.0), 1.0);
    EXPECT_THROW(surrogate(t, AuxiliaryState::ones(2), 1.0), DomainError);
}

TEST(AuxiliaryUpdate, Examples) {
    auto p = auxiliary_update(2.0, 0.5);
    EXPECT_DOUBLE_EQ(p.zeta, 0.25);
    EXPECT_DOUBLE_EQ(p.beta, 4.0);
    p = auxiliary_update(1.0, 1.0);
    EXPECT_EQ(p.zeta, 1.0);
    EXPECT_EQ(p.beta, 1.0);
    p = auxiliary_update(0.0, 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(p.zeta, 1e9);
    EXPECT_DOUBLE_EQ(p.beta, 1e-9);
}

TEST(AuxiliaryUpdate, MatchesGridOracle) {
    for (auto [a, c] : {std::pair{2.0, 0.5}, {1.0, 1.0}, {4.7, 2.84}, {0.3, 5.0}}) {
        const auto p = auxiliary_update(a, c);
        EXPECT_NEAR(std::log(p.zeta), std::log(grid_zeta(a, c)), 1e-6) << a << " " << c;
    }
}

TEST(AuxiliaryUpdate, RejectsNonpositiveReciprocal) {
    EXPECT_THROW(auxiliary_update(1.0, 0.0), DomainError);
    EXPECT_THROW(auxiliary_update(1.0, -2.0), DomainError);
    EXPECT_THROW(auxiliary_update(-1.0, 1.0), DomainError);
}

TEST(Cutting, Examples) {
    EXPECT_EQ(cutting_violation(1.0, 1.0), 0.0);
    EXPECT_EQ(cutting_violation(4.0, 0.25), 0.0);
    EXPECT_DOUBLE_EQ(cutting_violation(0.5, 0.5), 1.0);
    EXPECT_THROW(cutting_violation(0.0, 1.0), DomainError);
    EXPECT_EQ(max_cutting_violation({}), 0.0);
}

TEST(EquivalenceGap, Examples) {
    const std::vector<RatioTerm> t{term(2.0, 0.5)};
    EXPECT_DOUBLE_EQ(equivalence_gap(t, AuxiliaryState::ones(1), 1.0), 1.125);
    EXPECT_LE(std::abs(equivalence_gap(t, auxiliary_update(t), 1.0)), 1e-9 * 2.0);
    EXPECT_EQ(equivalence_gap({}, {}, 1.0), 0.0);
}

class FractionalProperties : public ::testing::Test {
protected:
    std::mt19937_64 rng{20240611};
    std::uniform_real_distribution<double> log_u{-6.0, 6.0};

    double positive() { return std::exp(log_u(rng)); }

    std::vector<RatioTerm> random_terms(std::size_t m) {
        std::vector<RatioTerm> out;
        for (std::size_t i = 0; i < m; ++i) out.push_back(term(positive(), positive()));
        return out;
    }
};

TEST_F(FractionalProperties, FixedPointIdentity) {
    for (int k = 0; k < 2000; ++k) {
        const double a = positive(), c = positive();
        const auto p = auxiliary_update(a, c);
        EXPECT_NEAR(surrogate_term(term(a, c), p), a * c, 1e-12 * a * c);
    }
}

TEST_F(FractionalProperties, SurrogateBoundsRatio) {
    for (int k = 0; k < 2000; ++k) {
        const double a = positive(), c = positive();
        const double zeta = positive();
        const double beta = (1.0 + positive()) / zeta;
        EXPECT_GE(surrogate_term(term(a, c), {zeta, beta}), a * c * (1.0 - 1e-12));
    }
}

TEST_F(FractionalProperties, UpdateNeverIncreasesSurrogate) {
    for (int seq = 0; seq < 50; ++seq) {
        auto terms = random_terms(20);
        AuxiliaryState aux = AuxiliaryState::ones(terms.size());
        for (int step = 0; step < 10; ++step) {
            const double before = surrogate(terms, aux, 1.0);
            aux = auxiliary_update(terms);
            EXPECT_LE(surrogate(terms, aux, 1.0), before * (1.0 + 1e-12));
            EXPECT_TRUE(aux.satisfies_invariants());
            EXPECT_LE(max_cutting_violation(aux), 1e-9);
            for (auto& t : terms) t.numerator *= std::exp(0.1 * log_u(rng));
        }
    }
}

TEST_F(FractionalProperties, CuttingSignMatchesProduct) {
    for (int k = 0; k < 2000; ++k) {
        const double z = positive(), b = positive();
        EXPECT_EQ(cutting_violation(z, b) <= 0.0, z * b >= 1.0) << z << " " << b;
    }
}
