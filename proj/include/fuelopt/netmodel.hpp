#pragma once

// Power-network domain types, generator efficiency and fuel-rate evaluation,
// and invariant checking for a complete problem instance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fuelopt/errors.hpp"

namespace fuelopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct BusSpec {
    int id = 0;
    double v_min = 0.95;  // p.u.
    double v_max = 1.05;
    double theta_min = -0.7853981633974483;  // rad
    double theta_max = 0.7853981633974483;

    bool operator==(const BusSpec&) const = default;
};

/// Series branch between two buses. The series admittance is g - j*b in
/// per-unit on the system base (b > 0 for an inductive line), so the bus
/// admittance entries are G_ii += g, B_ii -= b, G_ik = -g, B_ik = b.
struct LineSpec {
    int from_bus = 0;
    int to_bus = 0;
    double g = 0.0;
    double b = 0.0;
    double p_max_mw = kInf;
    double q_max_mvar = kInf;

    bool operator==(const LineSpec&) const = default;
};

struct GeneratorSpec {
    std::string id;
    std::string unit_class;  // e.g. "MTG", "ATG"; used by dispatch variants
    int bus = 0;
    double p_min_mw = 0.0;
    double p_max_mw = 0.0;
    double q_min_mvar = 0.0;
    double q_max_mvar = 0.0;
    double p_base_mw = 0.0;  // per-unit base of the efficiency polynomial
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double ramp_down_mw = kInf;  // per timestep
    double ramp_up_mw = kInf;

    bool operator==(const GeneratorSpec&) const = default;
};

struct StorageSpec {
    std::string id;
    int bus = 0;
    double capacity_mwh = 0.0;
    double p_charge_max_mw = 0.0;
    double p_discharge_max_mw = 0.0;
    double efficiency = 1.0;
    double soc_min = 0.2;
    double soc_max = 1.0;
    double e0_mwh = 0.0;

    bool operator==(const StorageSpec&) const = default;
};

struct SystemParams {
    double mva_base = 100.0;
    int horizon = 1;  // number of timesteps T
    double dt_hours = 1.0;
    double alpha_mwh_per_liter = 0.0;

    bool operator==(const SystemParams&) const = default;
};

struct BusLoad {
    double p_mw = 0.0;
    double q_mvar = 0.0;

    bool operator==(const BusLoad&) const = default;
};

/// A complete problem instance. Immutable once parsed.
struct NetworkCase {
    std::string name;
    SystemParams system;
    std::vector<BusSpec> buses;
    std::vector<LineSpec> lines;
    std::vector<GeneratorSpec> generators;
    std::vector<StorageSpec> storage;
    /// loads[t][bus index], zero-filled.
    std::vector<std::vector<BusLoad>> loads;

    bool operator==(const NetworkCase&) const = default;

    std::optional<std::size_t> bus_index(int bus_id) const {
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (buses[i].id == bus_id) return i;
        return std::nullopt;
    }

    std::size_t require_bus(int bus_id) const {
        auto idx = bus_index(bus_id);
        if (!idx) throw ReferenceError("bus " + std::to_string(bus_id) + " does not exist");
        return *idx;
    }

    int horizon() const { return system.horizon; }
    double dt() const { return system.dt_hours; }

    double total_load_mw(int t) const {
        double sum = 0.0;
        for (const auto& l : loads.at(static_cast<std::size_t>(t))) sum += l.p_mw;
        return sum;
    }
};

/// eta(p) = a p^2 + b p + c, p in per-unit of the generator's base.
inline double efficiency(const GeneratorSpec& gen, double p_pu) {
    return (gen.a * p_pu + gen.b) * p_pu + gen.c;
}

/// Fuel consumption rate in L/h at output P (MW).
inline double fuel_rate(const GeneratorSpec& gen, double p_mw, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("fuel energy density must be positive");
    if (p_mw < 0.0) throw DomainError("generator output must be nonnegative");
    const double eta = efficiency(gen, p_mw / gen.p_base_mw);
    if (!(eta > 0.0))
        throw DomainError("nonpositive efficiency for generator '" + gen.id + "' at " +
                          std::to_string(p_mw) + " MW");
    return p_mw / (alpha * eta);
}

/// Smallest value of the efficiency polynomial over [P_min, P_max].
inline double min_efficiency_on_band(const GeneratorSpec& gen) {
    const double lo = gen.p_min_mw / gen.p_base_mw;
    const double hi = gen.p_max_mw / gen.p_base_mw;
    double m = std::min(efficiency(gen, lo), efficiency(gen, hi));
    if (gen.a > 0.0) {
        const double vertex = -gen.b / (2.0 * gen.a);
        if (vertex > lo && vertex < hi) m = std::min(m, efficiency(gen, vertex));
    }
    return m;
}

struct Violation {
    std::string where;
    std::string message;

    bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

inline ValidationReport validate_case(const NetworkCase& cs) {
    ValidationReport report;
    auto add = [&](std::string where, std::string msg) {
        report.push_back({std::move(where), std::move(msg)});
    };

    const auto& sys = cs.system;
    if (sys.horizon < 1) add("system", "horizon T must be at least 1");
    if (!(sys.dt_hours > 0.0)) add("system", "dt_hours must be positive");
    if (!(sys.alpha_mwh_per_liter > 0.0)) add("system", "alpha_mwh_per_liter must be positive");
    if (!(sys.mva_base > 0.0)) add("system", "mva_base must be positive");
    if (cs.buses.empty()) add("buses", "at least one bus required");
    if (cs.generators.empty()) add("generators", "at least one generator required");

    for (std::size_t i = 0; i < cs.buses.size(); ++i) {
        const auto& b = cs.buses[i];
        const std::string where = "bus " + std::to_string(b.id);
        if (!(b.v_min > 0.0) || b.v_min > b.v_max) add(where, "voltage bounds must satisfy 0 < v_min <= v_max");
        if (b.theta_min > b.theta_max) add(where, "angle bounds must satisfy theta_min <= theta_max");
        for (std::size_t j = 0; j < i; ++j)
            if (cs.buses[j].id == b.id) add(where, "duplicate bus id");
    }

    for (std::size_t i = 0; i < cs.lines.size(); ++i) {
        const auto& l = cs.lines[i];
        const std::string where = "line " + std::to_string(l.from_bus) + "-" + std::to_string(l.to_bus);
        if (l.from_bus == l.to_bus) add(where, "from-bus equals to-bus");
        if (!cs.bus_index(l.from_bus) || !cs.bus_index(l.to_bus)) add(where, "references a nonexistent bus");
        if (l.p_max_mw < 0.0 || l.q_max_mvar < 0.0) add(where, "line ratings must be nonnegative");
        for (std::size_t j = 0; j < i; ++j) {
            const auto& o = cs.lines[j];
            if ((o.from_bus == l.from_bus && o.to_bus == l.to_bus) ||
                (o.from_bus == l.to_bus && o.to_bus == l.from_bus))
                add(where, "parallel lines must be merged into one branch");
        }
    }

    for (const auto& g : cs.generators) {
        const std::string where = "generator " + g.id;
        if (!cs.bus_index(g.bus)) add(where, "references a nonexistent bus");
        if (g.p_min_mw < 0.0 || g.p_max_mw < g.p_min_mw) add(where, "real power limits must satisfy 0 <= P_min <= P_max");
        if (g.q_max_mvar < g.q_min_mvar) add(where, "reactive limits must satisfy Q_min <= Q_max");
        if (!(g.p_base_mw > 0.0)) {
            add(where, "base power must be positive");
            continue;
        }
        if (g.a > 0.0) add(where, "convex efficiency curve (a > 0) is unsupported");
        if (!(min_efficiency_on_band(g) > 0.0)) add(where, "efficiency nonpositive on operating range");
        if (g.ramp_down_mw < 0.0 || g.ramp_up_mw < 0.0) add(where, "ramp limits must be nonnegative");
    }

    for (const auto& s : cs.storage) {
        const std::string where = "storage " + s.id;
        if (!cs.bus_index(s.bus)) add(where, "references a nonexistent bus");
        if (!(s.capacity_mwh > 0.0)) add(where, "capacity must be positive");
        if (!(0.0 <= s.soc_min && s.soc_min < s.soc_max && s.soc_max <= 1.0))
            add(where, "SOC bounds must satisfy 0 <= SOC_min < SOC_max <= 1");
        if (s.e0_mwh < s.soc_min * s.capacity_mwh) add(where, "initial energy below SOC_min");
        if (s.e0_mwh > s.soc_max * s.capacity_mwh) add(where, "initial energy above SOC_max");
        if (s.p_charge_max_mw < 0.0 || s.p_discharge_max_mw < 0.0) add(where, "charge/discharge rates must be nonnegative");
        if (!(s.efficiency > 0.0 && s.efficiency <= 1.0)) add(where, "efficiency factor must lie in (0, 1]");
    }

    if (sys.horizon >= 1) {
        if (cs.loads.size() != static_cast<std::size_t>(sys.horizon))
            add("loads", "load profile must cover every timestep");
        else
            for (const auto& row : cs.loads)
                if (row.size() != cs.buses.size()) {
                    add("loads", "load profile must cover every bus");
                    break;
                }
    }
    return report;
}

}  // namespace fuelopt
