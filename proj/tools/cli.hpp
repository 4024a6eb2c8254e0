#pragma once

// Command-line front end. Exit codes: 0 success or schedulable, 1
// unschedulable or deadline miss found, 2 usage or runtime error.

#include "mcdbf/mcdbf.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace mcdbf::cli {

inline TaskSet load_taskset(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    try {
        return parse_taskset(in);
    } catch (const ParseError& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline DeadlineTable load_deadlines(const std::string& path, const TaskSet& set)
{
    if (path.empty())
        return DeadlineTable::initial(set);
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    try {
        return parse_deadlines_csv(in, set);
    } catch (const ParseError& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    try {
        return parse_config(in);
    } catch (const ParseError& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    return out;
}

inline std::string describe(const Witness& w)
{
    std::ostringstream s;
    s << "mode " << w.mode << ", e=" << w.e;
    if (w.s_m)
        s << ", s_m=" << *w.s_m;
    return s.str();
}

struct AnalyzeArgs {
    std::string file;
    std::string method = "impt";
    std::optional<Time> emax_cap;
    std::string trace;
    std::string deadlines_out;
};

inline int run_analyze(const AnalyzeArgs& a, std::ostream& out)
{
    const TaskSet set = load_taskset(a.file);
    const Method method = parse_method(a.method);
    const Verdict v = tune_system(set, {method, a.emax_cap});

    out << "tasks: " << set.size() << ", levels: " << set.max_level()
        << ", U: " << to_string(utilization_bound(set)) << '\n';
    out << "method: " << to_string(method) << '\n';
    if (v.schedulable) {
        out << "schedulable\n";
    } else {
        out << "unschedulable (" << to_string(v.reason) << ")";
        if (v.witness)
            out << " at " << describe(*v.witness);
        out << '\n';
    }
    if (!a.trace.empty()) {
        auto f = open_out(a.trace);
        write_trace_csv(f, v.trace);
    }
    if (!a.deadlines_out.empty() && v.schedulable) {
        auto f = open_out(a.deadlines_out);
        write_deadlines_csv(f, set, v.deadlines);
    }
    return v.schedulable ? 0 : 1;
}

struct DbfArgs {
    std::string file;
    int mode = 1;
    std::string kind = "sm";
    std::optional<Time> s_m;
    Time emax = 0;
    std::string out;
    std::string deadlines;
};

inline int run_dbf(const DbfArgs& a, std::ostream& log)
{
    const TaskSet set = load_taskset(a.file);
    const DeadlineTable dl = load_deadlines(a.deadlines, set);
    if (a.mode < 1 || a.mode > set.max_level())
        throw std::runtime_error("mode must lie in 1.." + std::to_string(set.max_level()));
    if (a.emax < 1)
        throw std::runtime_error("--emax must be >= 1");

    auto f = open_out(a.out);
    std::size_t rows = 0;
    if (a.kind == "sm" || a.kind == "ism") {
        f << "e,demand\n";
        for (Time e = 1; e <= a.emax; ++e, ++rows)
            f << e << ',' << (a.kind == "sm" ? dbf_sm_set(set, dl, e, a.mode) : dbf_ism_set(set, dl, e, a.mode))
              << '\n';
    } else if (a.kind == "mm") {
        if (a.mode < 2)
            throw std::runtime_error("--kind mm needs --mode >= 2");
        f << "e,s_m,demand\n";
        for (Time e = 1; e <= a.emax; ++e) {
            if (a.s_m) {
                if (*a.s_m > e)
                    continue;
                f << e << ',' << *a.s_m << ',' << dbf_mm_set(set, dl, {*a.s_m, e, a.mode}) << '\n';
                ++rows;
                continue;
            }
            for (Time s = 0; s <= e; ++s, ++rows)
                f << e << ',' << s << ',' << dbf_mm_set(set, dl, {s, e, a.mode}) << '\n';
        }
    } else {
        throw std::runtime_error("unknown dbf kind '" + a.kind + "' (sm, ism or mm)");
    }
    log << "wrote " << rows << " rows to " << a.out << '\n';
    return 0;
}

struct GenArgs {
    std::string config;
    std::size_t count = 1;
    std::uint64_t seed = 1;
    std::string outdir;
};

inline int run_gen(const GenArgs& a, std::ostream& log)
{
    const ExperimentConfig cfg = load_config(a.config);
    std::filesystem::create_directories(a.outdir);
    const std::filesystem::path dir(a.outdir);
    auto manifest = open_out((dir / "manifest.csv").string());
    manifest << "file,seed,ubound,utilization,tasks\n";

    std::uint64_t seed = a.seed;
    std::size_t written = 0;
    for (const auto& u : cfg.ubound_sweep) {
        GenParams gp = cfg.gen;
        gp.ubound = u;
        for (std::size_t k = 0; k < a.count; ++k, ++seed) {
            const TaskSet set = gen_taskset(gp, seed);
            std::ostringstream name;
            name << "set_" << std::setw(5) << std::setfill('0') << written++ << ".tasks";
            auto f = open_out((dir / name.str()).string());
            f << "# seed " << seed << ", ubound " << to_string(u) << '\n';
            write_taskset(f, set);
            manifest << name.str() << ',' << seed << ',' << to_double(u) << ','
                     << to_double(utilization_bound(set)) << ',' << set.size() << '\n';
        }
    }
    log << "wrote " << written << " task sets to " << a.outdir << '\n';
    return 0;
}

struct ExpArgs {
    std::string config;
    std::string out;
    std::optional<unsigned> workers;
    std::optional<std::size_t> falsify;
};

inline int run_exp(const ExpArgs& a, std::ostream& log)
{
    ExperimentConfig cfg = load_config(a.config);
    if (a.workers)
        cfg.workers = *a.workers;
    if (a.falsify)
        cfg.falsify = *a.falsify;

    AcceptanceTable table;
    try {
        table = run_experiment(cfg);
    } catch (const FalsificationError& e) {
        log << "counterexample: " << e.what() << '\n';
        return 1;
    }
    auto f = open_out(a.out);
    write_acceptance_csv(f, table);
    for (Method m : cfg.methods)
        log << to_string(m) << " weighted acceptance: " << std::fixed << std::setprecision(4)
            << to_double(weighted_acceptance(table, m, cfg.ubound_sweep)) << '\n';
    return 0;
}

struct SimArgs {
    std::string file;
    std::string deadlines;
    std::size_t scenarios = 100;
    std::uint64_t seed = 1;
    Time horizon = 0;
    std::string trace;
};

inline int run_sim(const SimArgs& a, std::ostream& out)
{
    const TaskSet set = load_taskset(a.file);
    const DeadlineTable dl = load_deadlines(a.deadlines, set);
    Time horizon = a.horizon;
    if (horizon <= 0) {
        for (const auto& t : set)
            horizon = std::max(horizon, 10 * t.period);
    }

    auto cex = falsify(set, dl, a.scenarios, a.seed, horizon);
    if (!a.trace.empty()) {
        const Scenario sc = cex ? cex->scenario : random_scenario(set, a.seed, horizon, kAggressiveness[0]);
        auto f = open_out(a.trace);
        simulate(set, dl, sc, horizon, {.track_virtual = true, .trace = &f});
    }
    if (!cex) {
        out << "no deadline miss in " << a.scenarios << " scenarios (horizon " << horizon << ")\n";
        return 0;
    }
    const Miss& m = cex->result.misses.front();
    out << "deadline miss in scenario " << cex->index << " (aggressiveness " << cex->aggressiveness << "): task "
        << m.task << " job " << m.job << " released at " << m.release << ", deadline " << m.deadline << ", mode "
        << m.mode << '\n';
    return 1;
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Mixed-criticality EDF-VD demand-bound analysis"};
    app.require_subcommand(1);

    AnalyzeArgs analyze;
    auto* c_analyze = app.add_subcommand("analyze", "Tune virtual deadlines and decide schedulability");
    c_analyze->add_option("file", analyze.file, "Task-set file")->required();
    c_analyze->add_option("--method", analyze.method, "gt, gti or impt")->capture_default_str();
    c_analyze->add_option("--emax-cap", analyze.emax_cap, "Cap on checked interval lengths");
    c_analyze->add_option("--trace", analyze.trace, "Write the tuning trace as CSV");
    c_analyze->add_option("--deadlines-out", analyze.deadlines_out, "Write the tuned deadlines as CSV");

    DbfArgs dbf;
    auto* c_dbf = app.add_subcommand("dbf", "Dump a demand-bound curve as CSV");
    c_dbf->add_option("file", dbf.file, "Task-set file")->required();
    c_dbf->add_option("--mode", dbf.mode, "Criticality mode")->required();
    c_dbf->add_option("--kind", dbf.kind, "sm, ism or mm")->capture_default_str();
    c_dbf->add_option("--sm", dbf.s_m, "Fixed mode-switch offset for --kind mm");
    c_dbf->add_option("--emax", dbf.emax, "Largest interval length")->required();
    c_dbf->add_option("--out", dbf.out, "Output CSV")->required();
    c_dbf->add_option("--deadlines", dbf.deadlines, "Virtual deadlines CSV (default: D^m = D)");

    GenArgs gen;
    auto* c_gen = app.add_subcommand("gen", "Generate random task sets");
    c_gen->add_option("--config", gen.config, "Experiment config file")->required();
    c_gen->add_option("--count", gen.count, "Sets per utilization bound")->capture_default_str();
    c_gen->add_option("--seed", gen.seed, "Seed of the first set")->capture_default_str();
    c_gen->add_option("--outdir", gen.outdir, "Output directory")->required();

    ExpArgs exp;
    auto* c_exp = app.add_subcommand("exp", "Run an acceptance-ratio sweep");
    c_exp->add_option("--config", exp.config, "Experiment config file")->required();
    c_exp->add_option("--out", exp.out, "Output CSV")->required();
    c_exp->add_option("--workers", exp.workers, "Worker threads");
    c_exp->add_option("--falsify", exp.falsify, "Simulate N scenarios per accepted set");

    SimArgs sim;
    auto* c_sim = app.add_subcommand("sim", "Search for deadline misses by simulation");
    c_sim->add_option("file", sim.file, "Task-set file")->required();
    c_sim->add_option("--deadlines", sim.deadlines, "Virtual deadlines CSV (default: D^m = D)");
    c_sim->add_option("--scenarios", sim.scenarios, "Number of random scenarios")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "Seed of the first scenario")->capture_default_str();
    c_sim->add_option("--horizon", sim.horizon, "Simulated time (default: 10 x largest period)");
    c_sim->add_option("--trace", sim.trace, "Write the schedule of the first miss (or first scenario) as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*c_analyze)
            return run_analyze(analyze, out);
        if (*c_dbf)
            return run_dbf(dbf, out);
        if (*c_gen)
            return run_gen(gen, out);
        if (*c_exp)
            return run_exp(exp, out);
        if (*c_sim)
            return run_sim(sim, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

}  // namespace mcdbf::cli
