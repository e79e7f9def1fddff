#pragma once

// Sum-of-ratios machinery.
//
// Each generator-timestep contributes a ratio A / B with A = P (MW) and
// B = eta(p). Writing C = 1/B, the ratio is the product A*C, and for any
// (zeta, beta) with zeta*beta >= 1
//
//     (1/2)(zeta*A^2 + beta*C^2) >= sqrt(zeta*beta)*A*C >= A*C,
//
// with equality at zeta = C/A, beta = A/C. Alternating between a convex
// solve in the dispatch and the closed-form update below therefore descends
// the true fuel objective.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "fuelopt/errors.hpp"

namespace fuelopt::frac {

inline constexpr double kDefaultClamp = 1e-9;

struct RatioTerm {
    std::size_t generator = 0;
    std::size_t timestep = 0;
    double numerator = 0.0;          // A >= 0
    double inverse_denominator = 1.0;  // C = 1/eta > 0

    double value() const { return numerator * inverse_denominator; }
};

struct AuxPair {
    double zeta = 1.0;
    double beta = 1.0;
};

/// One (zeta, beta) pair per ratio term, in the same order as the terms.
struct AuxiliaryState {
    std::vector<AuxPair> pairs;

    static AuxiliaryState ones(std::size_t m) { return {std::vector<AuxPair>(m)}; }

    std::size_t size() const { return pairs.size(); }

    bool satisfies_invariants(double slack = 1e-9) const {
        for (const auto& p : pairs)
            if (!(p.zeta > 0.0 && p.beta > 0.0 && p.zeta * p.beta >= 1.0 - slack)) return false;
        return true;
    }
};

inline double ratio_sum(std::span<const RatioTerm> terms, double dt) {
    double sum = 0.0;
    for (const auto& t : terms) sum += t.value();
    return sum * dt;
}

inline double surrogate_term(const RatioTerm& t, const AuxPair& aux) {
    const double a = t.numerator;
    const double c = t.inverse_denominator;
    return 0.5 * (aux.zeta * a * a + aux.beta * c * c);
}

inline double surrogate(std::span<const RatioTerm> terms, const AuxiliaryState& aux, double dt) {
    if (aux.size() != terms.size()) throw DomainError("auxiliary state size does not match term count");
    double sum = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) sum += surrogate_term(terms[i], aux.pairs[i]);
    return sum * dt;
}

/// Minimizer of zeta*A^2 + beta*C^2 over zeta*beta >= 1. The numerator is
/// clamped below by eps so that idle units keep a finite beta.
inline AuxPair auxiliary_update(double numerator, double inverse_denominator, double eps = kDefaultClamp) {
    if (!(inverse_denominator > 0.0)) throw DomainError("denominator reciprocal must be positive");
    if (!(eps > 0.0)) throw DomainError("numerator clamp must be positive");
    if (numerator < 0.0) throw DomainError("numerator must be nonnegative");
    const double a = std::max(numerator, eps);
    return {inverse_denominator / a, a / inverse_denominator};
}

inline AuxiliaryState auxiliary_update(std::span<const RatioTerm> terms, double eps = kDefaultClamp) {
    AuxiliaryState out;
    out.pairs.reserve(terms.size());
    for (const auto& t : terms) out.pairs.push_back(auxiliary_update(t.numerator, t.inverse_denominator, eps));
    return out;
}

/// l = 2 - beta*sqrt(zeta/beta) - zeta*sqrt(beta/zeta) = 2 - 2*sqrt(zeta*beta).
/// Nonpositive exactly when zeta*beta >= 1.
inline double cutting_violation(double zeta, double beta) {
    if (!(zeta > 0.0 && beta > 0.0)) throw DomainError("auxiliary variables must be positive");
    return 2.0 - 2.0 * std::sqrt(zeta * beta);
}

inline double max_cutting_violation(const AuxiliaryState& aux) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& p : aux.pairs) worst = std::max(worst, cutting_violation(p.zeta, p.beta));
    return aux.pairs.empty() ? 0.0 : worst;
}

/// surrogate - ratio_sum; nonnegative whenever zeta*beta >= 1.
inline double equivalence_gap(std::span<const RatioTerm> terms, const AuxiliaryState& aux, double dt) {
    return surrogate(terms, aux, dt) - ratio_sum(terms, dt);
}

}  // namespace fuelopt::frac
