#pragma once

// Output formats for dispatch results.
//
//   schedule.csv   t,unit_id,kind,p_mw,q_mvar,soc      kind is gen or ess;
//                  soc is empty for generators
//   trace.csv      iter,objective,surrogate,equiv_gap,cone_gap,cut_max
//   summary.txt    key = value lines (fuel_liters, outer_iterations,
//                  max_cone_gap, equivalence_gap, ...)
//   solution.json  the full DispatchSolution
//
// Numbers are written with %.12g so repeated runs are byte-identical.

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fuelopt/engine.hpp"
#include "fuelopt/errors.hpp"
#include "fuelopt/netmodel.hpp"

namespace fuelopt {

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
    return buf;
}

/// One row of schedule.csv.
struct ScheduleRow {
    int t = 0;
    std::string unit_id;
    std::string kind;  // "gen" or "ess"
    double p_mw = 0.0;
    double q_mvar = 0.0;
    double soc = std::nan("");
};

inline std::vector<ScheduleRow> schedule_rows(const DispatchSolution& sol) {
    std::vector<ScheduleRow> rows;
    for (std::size_t t = 0; t < sol.p_mw.size(); ++t) {
        for (std::size_t g = 0; g < sol.generator_ids.size(); ++g)
            rows.push_back({static_cast<int>(t), sol.generator_ids[g], "gen", sol.p_mw[t][g], sol.q_mvar[t][g]});
        for (std::size_t k = 0; k < sol.storage_ids.size(); ++k)
            rows.push_back({static_cast<int>(t), sol.storage_ids[k], "ess", sol.storage_mw[t][k], 0.0, sol.soc[t][k]});
    }
    return rows;
}

inline void write_schedule_csv(const std::vector<ScheduleRow>& rows, std::ostream& out) {
    out << "t,unit_id,kind,p_mw,q_mvar,soc\n";
    for (const auto& r : rows)
        out << r.t << ',' << r.unit_id << ',' << r.kind << ',' << format_number(r.p_mw) << ','
            << format_number(r.q_mvar) << ',' << (std::isnan(r.soc) ? "" : format_number(r.soc)) << '\n';
}

inline void write_schedule_csv(const DispatchSolution& sol, std::ostream& out) {
    write_schedule_csv(schedule_rows(sol), out);
}

inline std::vector<ScheduleRow> read_schedule_csv(std::istream& in, const std::string& source = "schedule") {
    std::vector<ScheduleRow> rows;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("", source, "empty schedule");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,unit_id,kind,p_mw,q_mvar,soc") throw ParseError("header", source, "unexpected schedule header");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        const std::string where = source + ":" + std::to_string(lineno);
        if (cells.size() != 6) throw ParseError("", where, "expected 6 columns");
        ScheduleRow r;
        try {
            r.t = std::stoi(cells[0]);
            r.unit_id = cells[1];
            r.kind = cells[2];
            r.p_mw = std::stod(cells[3]);
            r.q_mvar = std::stod(cells[4]);
            if (!cells[5].empty()) r.soc = std::stod(cells[5]);
        } catch (const std::exception&) {
            throw ParseError("", where, "malformed number");
        }
        if (r.kind != "gen" && r.kind != "ess") throw ParseError("kind", where, "expected gen or ess");
        if (r.kind == "ess" && std::isnan(r.soc)) throw ParseError("soc", where, "storage row needs soc");
        rows.push_back(std::move(r));
    }
    return rows;
}

inline void write_trace_csv(const DispatchSolution& sol, std::ostream& out) {
    out << "iter,objective,surrogate,equiv_gap,cone_gap,cut_max\n";
    for (const auto& r : sol.trace)
        out << r.iter << ',' << format_number(r.objective) << ',' << format_number(r.surrogate) << ','
            << format_number(r.equiv_gap) << ',' << format_number(r.cone_gap) << ',' << format_number(r.cut_max)
            << '\n';
}

inline void write_summary(const DispatchSolution& sol, std::ostream& out) {
    out << "status = " << to_string(sol.status) << '\n';
    out << "variant = " << to_string(sol.variant) << '\n';
    out << "fuel_liters = " << format_number(sol.fuel_liters) << '\n';
    out << "outer_iterations = " << sol.outer_iterations() << '\n';
    out << "best_iteration = " << sol.best_iteration << '\n';
    out << "objective = " << format_number(sol.objective) << '\n';
    out << "max_cone_gap = " << format_number(sol.max_cone_gap) << '\n';
    out << "equivalence_gap = " << format_number(sol.equivalence_gap) << '\n';
    out << "max_angle_discrepancy = " << format_number(sol.max_angle_discrepancy) << '\n';
    out << "max_conic_residual = " << format_number(sol.residuals.max()) << '\n';
    if (!sol.message.empty()) out << "message = " << sol.message << '\n';
}

/// Parses summary.txt into its key/value pairs.
inline std::map<std::string, std::string> read_summary(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json matrix_json(const std::vector<std::vector<double>>& m) {
    auto out = nlohmann::json::array();
    for (const auto& row : m) {
        auto r = nlohmann::json::array();
        for (double v : row) r.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<std::vector<double>> json_matrix(const nlohmann::json& j) {
    std::vector<std::vector<double>> out;
    for (const auto& row : j) {
        std::vector<double> r;
        for (const auto& v : row) r.push_back(v.is_null() ? std::nan("") : v.get<double>());
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace detail

inline nlohmann::json solution_to_json(const DispatchSolution& sol) {
    nlohmann::json j;
    j["status"] = to_string(sol.status);
    j["variant"] = to_string(sol.variant);
    j["message"] = sol.message;
    j["dt_hours"] = sol.dt_hours;
    j["fuel_liters"] = sol.fuel_liters;
    j["objective"] = sol.objective;
    j["outer_iterations"] = sol.outer_iterations();
    j["best_iteration"] = sol.best_iteration;
    j["equivalence_gap"] = sol.equivalence_gap;
    j["max_cone_gap"] = sol.max_cone_gap;
    j["max_angle_discrepancy"] = sol.max_angle_discrepancy;
    j["generators"] = sol.generator_ids;
    j["storage"] = sol.storage_ids;
    j["p_mw"] = detail::matrix_json(sol.p_mw);
    j["q_mvar"] = detail::matrix_json(sol.q_mvar);
    j["storage_mw"] = detail::matrix_json(sol.storage_mw);
    j["energy_mwh"] = detail::matrix_json(sol.energy_mwh);
    j["soc"] = detail::matrix_json(sol.soc);
    j["voltage"] = detail::matrix_json(sol.voltage);
    j["theta"] = detail::matrix_json(sol.theta);
    auto trace = nlohmann::json::array();
    for (const auto& r : sol.trace)
        trace.push_back({{"iter", r.iter},
                         {"objective", r.objective},
                         {"surrogate", r.surrogate},
                         {"equiv_gap", r.equiv_gap},
                         {"cone_gap", r.cone_gap},
                         {"cut_max", r.cut_max},
                         {"conic_iterations", r.conic_iterations},
                         {"conic_status", socp::to_string(r.conic_status)}});
    j["trace"] = std::move(trace);
    return j;
}

inline DispatchSolution solution_from_json(const nlohmann::json& j) {
    DispatchSolution sol;
    try {
        const auto status = j.at("status").get<std::string>();
        for (auto s : {DispatchStatus::converged, DispatchStatus::iteration_limit, DispatchStatus::infeasible,
                       DispatchStatus::numerical_failure})
            if (status == to_string(s)) sol.status = s;
        const auto variant = parse_variant(j.at("variant").get<std::string>());
        if (!variant) throw ParseError("variant", "solution", "unknown variant");
        sol.variant = *variant;
        sol.message = j.value("message", "");
        sol.dt_hours = j.at("dt_hours").get<double>();
        sol.fuel_liters = j.at("fuel_liters").get<double>();
        sol.objective = j.at("objective").get<double>();
        sol.best_iteration = j.at("best_iteration").get<int>();
        sol.equivalence_gap = j.at("equivalence_gap").get<double>();
        sol.max_cone_gap = j.at("max_cone_gap").get<double>();
        sol.max_angle_discrepancy = j.at("max_angle_discrepancy").get<double>();
        sol.generator_ids = j.at("generators").get<std::vector<std::string>>();
        sol.storage_ids = j.at("storage").get<std::vector<std::string>>();
        sol.p_mw = detail::json_matrix(j.at("p_mw"));
        sol.q_mvar = detail::json_matrix(j.at("q_mvar"));
        sol.storage_mw = detail::json_matrix(j.at("storage_mw"));
        sol.energy_mwh = detail::json_matrix(j.at("energy_mwh"));
        sol.soc = detail::json_matrix(j.at("soc"));
        sol.voltage = detail::json_matrix(j.at("voltage"));
        sol.theta = detail::json_matrix(j.at("theta"));
        for (const auto& r : j.at("trace")) {
            IterationRecord rec;
            rec.iter = r.at("iter").get<int>();
            rec.objective = r.at("objective").get<double>();
            rec.surrogate = r.at("surrogate").get<double>();
            rec.equiv_gap = r.at("equiv_gap").get<double>();
            rec.cone_gap = r.at("cone_gap").get<double>();
            rec.cut_max = r.at("cut_max").get<double>();
            rec.conic_iterations = r.at("conic_iterations").get<int>();
            sol.trace.push_back(rec);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("", "solution", e.what());
    }
    return sol;
}

inline DispatchSolution parse_solution(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("", "solution", e.what());
    }
    return solution_from_json(j);
}

// ---------------------------------------------------------------------------
// Schedule checks
// ---------------------------------------------------------------------------

/// Bounds, ramps and storage consistency of a schedule against its case.
inline ValidationReport check_schedule(const NetworkCase& cs, const std::vector<ScheduleRow>& rows,
                                       double tol = 1e-6) {
    ValidationReport report;
    auto add = [&](std::string where, std::string msg) { report.push_back({std::move(where), std::move(msg)}); };
    const auto T = static_cast<std::size_t>(cs.horizon());
    std::vector<std::vector<double>> p(T, std::vector<double>(cs.generators.size(), std::nan("")));
    std::vector<std::vector<double>> q = p;
    std::vector<std::vector<double>> pb(T, std::vector<double>(cs.storage.size(), std::nan("")));
    std::vector<std::vector<double>> soc = pb;

    auto find = [](const auto& units, const std::string& id) -> int {
        for (std::size_t i = 0; i < units.size(); ++i)
            if (units[i].id == id) return static_cast<int>(i);
        return -1;
    };
    for (const auto& r : rows) {
        const std::string where = "t=" + std::to_string(r.t) + " " + r.unit_id;
        if (r.t < 0 || static_cast<std::size_t>(r.t) >= T) {
            add(where, "timestep outside the horizon");
            continue;
        }
        const auto t = static_cast<std::size_t>(r.t);
        if (r.kind == "gen") {
            const int g = find(cs.generators, r.unit_id);
            if (g < 0) {
                add(where, "unknown generator");
                continue;
            }
            p[t][g] = r.p_mw;
            q[t][g] = r.q_mvar;
        } else {
            const int k = find(cs.storage, r.unit_id);
            if (k < 0) {
                add(where, "unknown storage unit");
                continue;
            }
            pb[t][k] = r.p_mw;
            soc[t][k] = r.soc;
        }
    }

    for (std::size_t g = 0; g < cs.generators.size(); ++g) {
        const auto& gen = cs.generators[g];
        for (std::size_t t = 0; t < T; ++t) {
            const std::string where = "t=" + std::to_string(t) + " " + gen.id;
            if (std::isnan(p[t][g])) {
                add(where, "missing schedule row");
                continue;
            }
            if (p[t][g] < gen.p_min_mw - tol || p[t][g] > gen.p_max_mw + tol) add(where, "real power outside limits");
            if (q[t][g] < gen.q_min_mvar - tol || q[t][g] > gen.q_max_mvar + tol)
                add(where, "reactive power outside limits");
            if (t > 0 && !std::isnan(p[t - 1][g])) {
                const double d = p[t][g] - p[t - 1][g];
                if (d > gen.ramp_up_mw + tol) add(where, "ramp-up limit exceeded");
                if (d < -gen.ramp_down_mw - tol) add(where, "ramp-down limit exceeded");
            }
        }
    }
    for (std::size_t k = 0; k < cs.storage.size(); ++k) {
        const auto& st = cs.storage[k];
        double energy = st.e0_mwh, net = 0.0;
        bool complete = true;
        for (std::size_t t = 0; t < T; ++t) {
            const std::string where = "t=" + std::to_string(t) + " " + st.id;
            if (std::isnan(pb[t][k])) {
                add(where, "missing schedule row");
                complete = false;
                continue;
            }
            if (pb[t][k] < -st.p_charge_max_mw - tol || pb[t][k] > st.p_discharge_max_mw + tol)
                add(where, "storage power outside rate limits");
            if (soc[t][k] < st.soc_min - tol || soc[t][k] > st.soc_max + tol) add(where, "SOC outside limits");
            energy -= st.efficiency * pb[t][k] * cs.dt();
            net += pb[t][k];
            if (std::abs(energy / st.capacity_mwh - soc[t][k]) > tol)
                add(where, "SOC inconsistent with the energy balance");
        }
        if (complete && std::abs(net) > tol) add("storage " + st.id, "charge and discharge do not net to zero");
    }
    return report;
}

}  // namespace fuelopt
