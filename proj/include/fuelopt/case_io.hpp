#pragma once

// Case document reader/writer.
//
// A case is a JSON object with sections
//   system     { mva_base, T, dt_hours, alpha_mwh_per_liter }
//   buses      [ { id, v_min, v_max, theta_min?, theta_max? } ]
//   lines      [ { from, to, g, b, p_max_mw?, q_max_mvar? } ]
//   generators [ { id, class?, bus, p_min_mw, p_max_mw, q_min_mvar, q_max_mvar,
//                  p_base_mw?, a, b, c, ramp_down_mw?, ramp_up_mw? } ]
//   storage    [ { id, bus, capacity_mwh, p_charge_max_mw, p_discharge_max_mw,
//                  efficiency?, soc_min, soc_max, e0_mwh } ]
//   loads      [ { t, bus, p_mw, q_mvar } ]  or  { "csv": "relative/path.csv" }
// Omitted ratings and ramp limits mean "unlimited". p_base_mw defaults to
// p_max_mw. Load CSV columns are t,bus,p_mw,q_mvar with t in 0..T-1; any
// (bus, t) pair not listed has zero load.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fuelopt/errors.hpp"
#include "fuelopt/netmodel.hpp"

namespace fuelopt {

namespace detail {

using json = nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw ParseError("", where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(key, where, "missing required field");
    return *it;
}

inline double number(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number()) throw ParseError(key, where, "expected a number");
    return v.get<double>();
}

inline double number_or(const json& obj, const char* key, const std::string& where, double fallback) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    if (!it->is_number()) throw ParseError(key, where, "expected a number");
    return it->get<double>();
}

inline int integer(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number_integer()) throw ParseError(key, where, "expected an integer");
    return v.get<int>();
}

inline std::string text(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string()) throw ParseError(key, where, "expected a string");
    return v.get<std::string>();
}

inline const json& array(const json& obj, const char* key) {
    const json& v = require(obj, key, "");
    if (!v.is_array()) throw ParseError(key, "", "expected an array");
    return v;
}

inline std::string at(const char* section, std::size_t i) {
    return std::string(section) + "[" + std::to_string(i) + "]";
}

inline void add_load(NetworkCase& cs, int t, int bus, double p, double q, const std::string& where) {
    if (t < 0 || t >= cs.system.horizon)
        throw ParseError("t", where, "timestep " + std::to_string(t) + " outside 0..T-1");
    auto idx = cs.bus_index(bus);
    if (!idx) throw ReferenceError(where + ": load references nonexistent bus " + std::to_string(bus));
    auto& slot = cs.loads[static_cast<std::size_t>(t)][*idx];
    slot.p_mw += p;
    slot.q_mvar += q;
}

inline void read_load_csv(NetworkCase& cs, std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            if (line.rfind("t,", 0) == 0) continue;
        }
        const std::string where = source + ":" + std::to_string(lineno);
        std::istringstream row(line);
        std::string cell[4];
        for (auto& c : cell)
            if (!std::getline(row, c, ',')) throw ParseError("", where, "expected 4 columns t,bus,p_mw,q_mvar");
        try {
            std::size_t used = 0;
            const int t = std::stoi(cell[0], &used);
            const int bus = std::stoi(cell[1]);
            add_load(cs, t, bus, std::stod(cell[2]), std::stod(cell[3]), where);
        } catch (const std::invalid_argument&) {
            throw ParseError("", where, "non-numeric load entry");
        } catch (const std::out_of_range&) {
            throw ParseError("", where, "load entry out of range");
        }
    }
}

}  // namespace detail

/// Parses a case document. Relative load CSV paths resolve against base_dir.
inline NetworkCase parse_case(const std::string& document, const std::filesystem::path& base_dir = {}) {
    using detail::json;
    json root;
    try {
        root = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError("", "byte " + std::to_string(e.byte), "malformed document");
    }
    if (!root.is_object()) throw ParseError("", "document", "top level must be an object");

    NetworkCase cs;
    if (auto it = root.find("name"); it != root.end() && it->is_string()) cs.name = it->get<std::string>();

    const json& sys = detail::require(root, "system", "document");
    cs.system.mva_base = detail::number(sys, "mva_base", "system");
    cs.system.horizon = detail::integer(sys, "T", "system");
    cs.system.dt_hours = detail::number(sys, "dt_hours", "system");
    cs.system.alpha_mwh_per_liter = detail::number(sys, "alpha_mwh_per_liter", "system");
    if (cs.system.horizon < 1) throw ParseError("T", "system", "horizon must be at least 1");

    const json& buses = detail::array(root, "buses");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const auto where = detail::at("buses", i);
        BusSpec b;
        b.id = detail::integer(buses[i], "id", where);
        b.v_min = detail::number(buses[i], "v_min", where);
        b.v_max = detail::number(buses[i], "v_max", where);
        b.theta_min = detail::number_or(buses[i], "theta_min", where, b.theta_min);
        b.theta_max = detail::number_or(buses[i], "theta_max", where, b.theta_max);
        if (cs.bus_index(b.id)) throw ParseError("id", where, "duplicate bus id");
        cs.buses.push_back(b);
    }
    if (cs.buses.empty()) throw ParseError("buses", "document", "at least one bus required");

    if (root.contains("lines")) {
        const json& lines = detail::array(root, "lines");
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto where = detail::at("lines", i);
            LineSpec l;
            l.from_bus = detail::integer(lines[i], "from", where);
            l.to_bus = detail::integer(lines[i], "to", where);
            l.g = detail::number(lines[i], "g", where);
            l.b = detail::number(lines[i], "b", where);
            l.p_max_mw = detail::number_or(lines[i], "p_max_mw", where, kInf);
            l.q_max_mvar = detail::number_or(lines[i], "q_max_mvar", where, kInf);
            for (int bus : {l.from_bus, l.to_bus})
                if (!cs.bus_index(bus))
                    throw ReferenceError(where + ": line references nonexistent bus " + std::to_string(bus));
            cs.lines.push_back(l);
        }
    }

    const json& gens = detail::array(root, "generators");
    if (gens.empty()) throw ParseError("generators", "document", "at least one generator required");
    for (std::size_t i = 0; i < gens.size(); ++i) {
        const auto where = detail::at("generators", i);
        const json& j = gens[i];
        GeneratorSpec g;
        g.id = detail::text(j, "id", where);
        if (auto it = j.find("class"); it != j.end() && it->is_string()) g.unit_class = it->get<std::string>();
        g.bus = detail::integer(j, "bus", where);
        g.p_min_mw = detail::number(j, "p_min_mw", where);
        g.p_max_mw = detail::number(j, "p_max_mw", where);
        g.q_min_mvar = detail::number(j, "q_min_mvar", where);
        g.q_max_mvar = detail::number(j, "q_max_mvar", where);
        g.p_base_mw = detail::number_or(j, "p_base_mw", where, g.p_max_mw);
        g.a = detail::number(j, "a", where);
        g.b = detail::number(j, "b", where);
        g.c = detail::number(j, "c", where);
        g.ramp_down_mw = detail::number_or(j, "ramp_down_mw", where, kInf);
        g.ramp_up_mw = detail::number_or(j, "ramp_up_mw", where, kInf);
        if (!cs.bus_index(g.bus))
            throw ReferenceError(where + ": generator references nonexistent bus " + std::to_string(g.bus));
        cs.generators.push_back(std::move(g));
    }

    if (root.contains("storage")) {
        const json& units = detail::array(root, "storage");
        for (std::size_t i = 0; i < units.size(); ++i) {
            const auto where = detail::at("storage", i);
            const json& j = units[i];
            StorageSpec s;
            s.id = detail::text(j, "id", where);
            s.bus = detail::integer(j, "bus", where);
            s.capacity_mwh = detail::number(j, "capacity_mwh", where);
            s.p_charge_max_mw = detail::number(j, "p_charge_max_mw", where);
            s.p_discharge_max_mw = detail::number(j, "p_discharge_max_mw", where);
            s.efficiency = detail::number_or(j, "efficiency", where, 1.0);
            s.soc_min = detail::number(j, "soc_min", where);
            s.soc_max = detail::number(j, "soc_max", where);
            s.e0_mwh = detail::number(j, "e0_mwh", where);
            if (!cs.bus_index(s.bus))
                throw ReferenceError(where + ": storage references nonexistent bus " + std::to_string(s.bus));
            cs.storage.push_back(std::move(s));
        }
    }

    cs.loads.assign(static_cast<std::size_t>(cs.system.horizon), std::vector<BusLoad>(cs.buses.size()));
    if (auto it = root.find("loads"); it != root.end()) {
        if (it->is_array()) {
            for (std::size_t i = 0; i < it->size(); ++i) {
                const auto where = detail::at("loads", i);
                const json& j = (*it)[i];
                detail::add_load(cs, detail::integer(j, "t", where), detail::integer(j, "bus", where),
                                 detail::number(j, "p_mw", where), detail::number_or(j, "q_mvar", where, 0.0),
                                 where);
            }
        } else if (it->is_object()) {
            const std::filesystem::path rel = detail::text(*it, "csv", "loads");
            const auto path = rel.is_absolute() ? rel : base_dir / rel;
            std::ifstream in(path);
            if (!in) throw ParseError("csv", "loads", "cannot open load profile '" + path.string() + "'");
            detail::read_load_csv(cs, in, path.filename().string());
        } else {
            throw ParseError("loads", "document", "expected an array or {\"csv\": path}");
        }
    }
    return cs;
}

inline NetworkCase load_case_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("", path.string(), "cannot open case file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_case(buf.str(), path.parent_path());
}

/// Writes the case with inline loads (nonzero entries only).
inline std::string serialize_case(const NetworkCase& cs) {
    using detail::json;
    auto put_finite = [](json& j, const char* key, double v) {
        if (std::isfinite(v)) j[key] = v;
    };
    json root;
    if (!cs.name.empty()) root["name"] = cs.name;
    root["system"] = {{"mva_base", cs.system.mva_base},
                      {"T", cs.system.horizon},
                      {"dt_hours", cs.system.dt_hours},
                      {"alpha_mwh_per_liter", cs.system.alpha_mwh_per_liter}};
    root["buses"] = json::array();
    for (const auto& b : cs.buses)
        root["buses"].push_back({{"id", b.id},
                                 {"v_min", b.v_min},
                                 {"v_max", b.v_max},
                                 {"theta_min", b.theta_min},
                                 {"theta_max", b.theta_max}});
    root["lines"] = json::array();
    for (const auto& l : cs.lines) {
        json j = {{"from", l.from_bus}, {"to", l.to_bus}, {"g", l.g}, {"b", l.b}};
        put_finite(j, "p_max_mw", l.p_max_mw);
        put_finite(j, "q_max_mvar", l.q_max_mvar);
        root["lines"].push_back(std::move(j));
    }
    root["generators"] = json::array();
    for (const auto& g : cs.generators) {
        json j = {{"id", g.id},           {"bus", g.bus},
                  {"p_min_mw", g.p_min_mw}, {"p_max_mw", g.p_max_mw},
                  {"q_min_mvar", g.q_min_mvar}, {"q_max_mvar", g.q_max_mvar},
                  {"p_base_mw", g.p_base_mw}, {"a", g.a}, {"b", g.b}, {"c", g.c}};
        if (!g.unit_class.empty()) j["class"] = g.unit_class;
        put_finite(j, "ramp_down_mw", g.ramp_down_mw);
        put_finite(j, "ramp_up_mw", g.ramp_up_mw);
        root["generators"].push_back(std::move(j));
    }
    root["storage"] = json::array();
    for (const auto& s : cs.storage)
        root["storage"].push_back({{"id", s.id},
                                   {"bus", s.bus},
                                   {"capacity_mwh", s.capacity_mwh},
                                   {"p_charge_max_mw", s.p_charge_max_mw},
                                   {"p_discharge_max_mw", s.p_discharge_max_mw},
                                   {"efficiency", s.efficiency},
                                   {"soc_min", s.soc_min},
                                   {"soc_max", s.soc_max},
                                   {"e0_mwh", s.e0_mwh}});
    root["loads"] = json::array();
    for (std::size_t t = 0; t < cs.loads.size(); ++t)
        for (std::size_t i = 0; i < cs.loads[t].size(); ++i) {
            const auto& l = cs.loads[t][i];
            if (l.p_mw != 0.0 || l.q_mvar != 0.0)
                root["loads"].push_back(
                    {{"t", t}, {"bus", cs.buses[i].id}, {"p_mw", l.p_mw}, {"q_mvar", l.q_mvar}});
        }
    return root.dump(2);
}

}  // namespace fuelopt
