#pragma once

// Command-line front end.
//
//   fuelopt solve    --case F [--tol X] [--max-iter N] [--out DIR] [--alpha A]
//                    [--variant full|A|B|C] [--dump-conic FILE] [--seed S]
//   fuelopt compare  --case F [--variants A,B,C] [--out DIR]
//   fuelopt validate --case F [--solution schedule.csv|solution.json]
//   fuelopt oracle   --case F [--step S] [--v-step S]
//   fuelopt export   --solution solution.json --format csv|json [--out FILE]
//
// Exit codes: 0 success, 1 infeasible, 2 input error, 3 numerical failure.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fuelopt/baseline.hpp"
#include "fuelopt/case_io.hpp"
#include "fuelopt/engine.hpp"
#include "fuelopt/errors.hpp"
#include "fuelopt/netmodel.hpp"
#include "fuelopt/relaxation.hpp"
#include "fuelopt/socp.hpp"
#include "fuelopt/solution_io.hpp"

namespace fuelopt::cli {

enum ExitCode : int { ok = 0, infeasible = 1, input_error = 2, numerical_failure = 3 };

/// What a run produced.
struct RunManifest {
    std::string command;
    std::string case_path;
    std::vector<std::string> overrides;
    std::string output_dir;
    int exit_status = ok;
    std::vector<std::string> artifacts;
};

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    nlohmann::json j{{"command", m.command},     {"case", m.case_path},           {"overrides", m.overrides},
                     {"output_dir", m.output_dir}, {"exit_status", m.exit_status}, {"artifacts", m.artifacts}};
    std::ofstream(path) << j.dump(2) << '\n';
}

namespace detail {

inline int exit_for(DispatchStatus s) {
    switch (s) {
        case DispatchStatus::converged:
        case DispatchStatus::iteration_limit: return ok;
        case DispatchStatus::infeasible: return infeasible;
        case DispatchStatus::numerical_failure: return numerical_failure;
    }
    return numerical_failure;
}

inline void print_report(const ValidationReport& report, std::ostream& out) {
    for (const auto& v : report) out << v.where << ": " << v.message << '\n';
}

/// Writes `text` to dir/name and records it in the manifest.
inline void emit(RunManifest& m, const std::filesystem::path& dir, const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ParseError("", (dir / name).string(), "cannot write output file");
    f << text;
    m.artifacts.push_back(name);
}

template <class F>
std::string render(F&& f) {
    std::ostringstream s;
    f(s);
    return s.str();
}

inline std::vector<ScheduleRow> load_schedule(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("", path, "cannot open solution file");
    if (std::filesystem::path(path).extension() == ".json") {
        std::stringstream buf;
        buf << in.rdbuf();
        return schedule_rows(parse_solution(buf.str()));
    }
    return read_schedule_csv(in, path);
}

}  // namespace detail

struct Options {
    std::string case_path;
    std::string out_dir = ".";
    double tol = 1e-6;
    int max_iter = 500;
    double inner_tol = 1e-8;
    double alpha = 0.0;
    long long seed = 0;
    std::string dump_conic;
    std::string variant = "full";
    std::string variants = "A,B,C";
    std::string solution;
    std::string format = "csv";
    double step = 1e-3;
    double v_step = 0.005;
};

inline NetworkCase load_for_run(const Options& o, std::ostream& err, bool& valid) {
    auto cs = load_case_file(o.case_path);
    if (o.alpha > 0.0) cs.system.alpha_mwh_per_liter = o.alpha;
    const auto report = validate_case(cs);
    valid = report.empty();
    if (!valid) detail::print_report(report, err);
    return cs;
}

inline SolverConfig config_from(const Options& o) {
    SolverConfig cfg;
    cfg.outer_tol = o.tol;
    cfg.max_outer = o.max_iter;
    cfg.inner_tol = o.inner_tol;
    return cfg;
}

inline int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
    bool valid = false;
    const auto cs = load_for_run(o, err, valid);
    if (!valid) return input_error;
    auto cfg = config_from(o);
    const auto variant = parse_variant(o.variant);
    if (!variant) {
        err << "unknown variant '" << o.variant << "'\n";
        return input_error;
    }
    cfg.variant = *variant;

    const std::filesystem::path dir(o.out_dir);
    std::filesystem::create_directories(dir);
    RunManifest m{"solve", o.case_path, {}, o.out_dir, ok, {}};
    if (o.alpha > 0.0) m.overrides.push_back("alpha=" + format_number(o.alpha));
    m.overrides.push_back("tol=" + format_number(o.tol));
    m.overrides.push_back("max_iter=" + std::to_string(o.max_iter));

    if (!o.dump_conic.empty()) {
        const auto restrict = variant_restrictions(cs, cfg.variant);
        const auto terms = ratio_terms(cs, restrict);
        const auto model = build_relaxation(cs, frac::AuxiliaryState::ones(terms.size()),
                                            LinearizationPoint::flat(cs.horizon(), cs.lines.size()), restrict);
        std::ofstream f(o.dump_conic, std::ios::binary);
        if (!f) throw ParseError("", o.dump_conic, "cannot write conic dump");
        socp::dump(socp::assemble(model).problem, f);
    }

    const auto sol = solve_dispatch(cs, cfg);
    detail::emit(m, dir, "schedule.csv", detail::render([&](std::ostream& s) { write_schedule_csv(sol, s); }));
    detail::emit(m, dir, "trace.csv", detail::render([&](std::ostream& s) { write_trace_csv(sol, s); }));
    const auto summary = detail::render([&](std::ostream& s) { write_summary(sol, s); });
    detail::emit(m, dir, "summary.txt", summary);
    detail::emit(m, dir, "solution.json", solution_to_json(sol).dump(1) + "\n");
    m.exit_status = detail::exit_for(sol.status);
    write_manifest(m, dir / "manifest.json");
    out << summary;
    if (sol.status == DispatchStatus::iteration_limit) err << "warning: outer iteration limit reached\n";
    return m.exit_status;
}

inline int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
    bool valid = false;
    const auto cs = load_for_run(o, err, valid);
    if (!valid) return input_error;
    std::vector<Variant> variants{Variant::full};
    std::stringstream ss(o.variants);
    std::string name;
    while (std::getline(ss, name, ',')) {
        const auto v = parse_variant(name);
        if (!v) {
            err << "unknown variant '" << name << "'\n";
            return input_error;
        }
        if (*v != Variant::full) variants.push_back(*v);
    }
    const auto results = compare_models(cs, variants, config_from(o));

    const std::filesystem::path dir(o.out_dir);
    std::filesystem::create_directories(dir);
    RunManifest m{"compare", o.case_path, {"variants=" + o.variants}, o.out_dir, ok, {}};

    const auto cumulative = detail::render([&](std::ostream& s) {
        s << 't';
        for (const auto& r : results) s << ',' << to_string(r.variant);
        s << '\n';
        for (int t = 0; t < cs.horizon(); ++t) {
            s << t;
            for (const auto& r : results) {
                s << ',';
                if (static_cast<std::size_t>(t) < r.cumulative.size()) s << format_number(r.cumulative[t]);
            }
            s << '\n';
        }
    });
    detail::emit(m, dir, "cumulative_fuel.csv", cumulative);
    const auto table = detail::render([&](std::ostream& s) {
        s << "variant,status,fuel_liters,outer_iterations\n";
        for (const auto& r : results) {
            const bool solved = !r.cumulative.empty();
            s << to_string(r.variant) << ',' << to_string(r.solution.status) << ','
              << (solved ? format_number(r.solution.fuel_liters) : "") << ',' << r.solution.outer_iterations()
              << '\n';
        }
    });
    detail::emit(m, dir, "comparison.csv", table);
    for (const auto& r : results)
        if (!r.error.empty()) err << "variant " << to_string(r.variant) << ": " << r.error << '\n';
    m.exit_status = detail::exit_for(results.front().solution.status);
    write_manifest(m, dir / "manifest.json");
    out << table;
    return m.exit_status;
}

inline int cmd_validate(const Options& o, std::ostream& out, std::ostream&) {
    const auto cs = load_case_file(o.case_path);
    auto report = validate_case(cs);
    if (report.empty() && !o.solution.empty()) report = check_schedule(cs, detail::load_schedule(o.solution));
    if (report.empty()) {
        out << "valid\n";
        return ok;
    }
    detail::print_report(report, out);
    return input_error;
}

inline int cmd_oracle(const Options& o, std::ostream& out, std::ostream& err) {
    bool valid = false;
    const auto cs = load_for_run(o, err, valid);
    if (!valid) return input_error;
    baseline::OracleOptions opt;
    opt.step_mw = o.step;
    opt.v_step = o.v_step;
    const auto r = baseline::brute_force_dispatch(cs, opt);
    if (!r.feasible) {
        out << "status = infeasible\n";
        return infeasible;
    }
    out << "status = optimal\n";
    out << "fuel_liters = " << format_number(r.fuel_liters) << '\n';
    out << "grid_points = " << r.evaluated << '\n';
    for (std::size_t t = 0; t < r.p_mw.size(); ++t)
        for (std::size_t g = 0; g < r.p_mw[t].size(); ++g)
            out << "p[" << t << "][" << cs.generators[g].id << "] = " << format_number(r.p_mw[t][g]) << '\n';
    return ok;
}

inline int cmd_export(const Options& o, std::ostream& out, std::ostream& err) {
    std::ifstream in(o.solution);
    if (!in) throw ParseError("", o.solution, "cannot open solution file");
    std::stringstream buf;
    buf << in.rdbuf();
    const auto sol = parse_solution(buf.str());
    std::string text;
    if (o.format == "csv")
        text = detail::render([&](std::ostream& s) { write_schedule_csv(sol, s); });
    else if (o.format == "json")
        text = solution_to_json(sol).dump(1) + "\n";
    else {
        err << "unknown format '" << o.format << "'\n";
        return input_error;
    }
    if (o.out_dir.empty() || o.out_dir == "-") {
        out << text;
    } else {
        std::ofstream f(o.out_dir, std::ios::binary);
        if (!f) throw ParseError("", o.out_dir, "cannot write export file");
        f << text;
    }
    return ok;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fuel-efficient multi-period dispatch", "fuelopt"};
    app.require_subcommand(1);
    Options o;

    auto* solve = app.add_subcommand("solve", "Solve a case and write schedule, trace and summary");
    solve->add_option("--case", o.case_path, "Case file")->required();
    solve->add_option("--tol", o.tol, "Relative outer tolerance")->check(CLI::PositiveNumber);
    solve->add_option("--max-iter", o.max_iter, "Maximum outer iterations")->check(CLI::PositiveNumber);
    solve->add_option("--inner-tol", o.inner_tol, "Conic solver tolerance")->check(CLI::PositiveNumber);
    solve->add_option("--out", o.out_dir, "Output directory");
    solve->add_option("--alpha", o.alpha, "Override fuel energy density (MWh/L)")->check(CLI::PositiveNumber);
    solve->add_option("--seed", o.seed, "Reserved; the solver is deterministic");
    solve->add_option("--variant", o.variant, "full, A, B or C");
    solve->add_option("--dump-conic", o.dump_conic, "Write the first conic subproblem to FILE");

    auto* compare = app.add_subcommand("compare", "Compare the proposed model with dispatch variants");
    compare->add_option("--case", o.case_path, "Case file")->required();
    compare->add_option("--variants", o.variants, "Comma-separated variants");
    compare->add_option("--out", o.out_dir, "Output directory");
    compare->add_option("--tol", o.tol, "Relative outer tolerance")->check(CLI::PositiveNumber);
    compare->add_option("--max-iter", o.max_iter, "Maximum outer iterations")->check(CLI::PositiveNumber);
    compare->add_option("--alpha", o.alpha, "Override fuel energy density (MWh/L)")->check(CLI::PositiveNumber);
    compare->add_option("--seed", o.seed, "Reserved; the solver is deterministic");

    auto* validate = app.add_subcommand("validate", "Check a case, and optionally a schedule against it");
    validate->add_option("--case", o.case_path, "Case file")->required();
    validate->add_option("--solution", o.solution, "schedule.csv or solution.json");

    auto* oracle = app.add_subcommand("oracle", "Brute-force grid search on a tiny case");
    oracle->add_option("--case", o.case_path, "Case file")->required();
    oracle->add_option("--step", o.step, "Grid step in MW")->check(CLI::PositiveNumber);
    oracle->add_option("--v-step", o.v_step, "Voltage grid step in p.u.")->check(CLI::PositiveNumber);
    oracle->add_option("--alpha", o.alpha, "Override fuel energy density (MWh/L)")->check(CLI::PositiveNumber);

    auto* exporter = app.add_subcommand("export", "Convert a solution file");
    exporter->add_option("--solution", o.solution, "solution.json")->required();
    exporter->add_option("--format", o.format, "csv or json");
    exporter->add_option("--out", o.out_dir, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        err << app.help();
        return input_error;
    }

    try {
        if (solve->parsed()) return cmd_solve(o, out, err);
        if (compare->parsed()) return cmd_compare(o, out, err);
        if (validate->parsed()) return cmd_validate(o, out, err);
        if (oracle->parsed()) return cmd_oracle(o, out, err);
        if (exporter->parsed()) {
            if (exporter->count("--out") == 0) o.out_dir.clear();
            return cmd_export(o, out, err);
        }
    } catch (const ParseError& e) {
        err << e.what() << '\n';
        return input_error;
    } catch (const ReferenceError& e) {
        err << "reference error: " << e.what() << '\n';
        return input_error;
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << '\n';
        return input_error;
    } catch (const UnsupportedCurvature& e) {
        err << "unsupported: " << e.what() << '\n';
        return input_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return numerical_failure;
    }
    return input_error;
}

}  // namespace fuelopt::cli
