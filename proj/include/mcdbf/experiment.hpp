#pragma once

// Acceptance-ratio sweeps. For every utilization bound U in the sweep and
// every k < sets_per_point, one task set is generated from seed
// base_seed + index(U) * sets_per_point + k and judged by every method, so
// methods are always compared on identical sets and results do not depend on
// the number of workers.

#include "mcdbf/sim.hpp"
#include "mcdbf/taskgen.hpp"
#include "mcdbf/tuner.hpp"

#include <atomic>
#include <exception>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace mcdbf {

/// {0.55, 0.60, ..., 0.95}.
inline std::vector<Rational> default_sweep()
{
    std::vector<Rational> out;
    for (int u = 55; u <= 95; u += 5)
        out.emplace_back(u, 100);
    return out;
}

struct ExperimentConfig {
    GenParams gen;  // ubound is overwritten by each sweep point
    std::vector<Rational> ubound_sweep = default_sweep();
    std::size_t sets_per_point = 200;
    std::vector<Method> methods{Method::GT, Method::GTI, Method::IMPT};
    std::uint64_t base_seed = 1;
    unsigned workers = 1;
    std::optional<Time> emax_cap;
    std::size_t falsify = 0;  // scenarios per accepted set; 0 disables
    Time falsify_horizon_periods = 10;

    std::string violation() const
    {
        if (auto v = gen.violation(); !v.empty())
            return v;
        if (ubound_sweep.empty())
            return "ubound_sweep is empty";
        for (const auto& u : ubound_sweep)
            if (u <= 0 || u > 1)
                return "sweep value " + to_string(u) + " outside (0, 1]";
        if (sets_per_point < 1)
            return "sets_per_point must be >= 1";
        if (methods.empty())
            return "no methods";
        return {};
    }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        auto b = item.find_first_not_of(" \t");
        auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos)
            out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

inline long long to_integer(const std::string& s)
{
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size())
        throw std::invalid_argument("not an integer: '" + s + "'");
    return v;
}

}  // namespace detail

/// Flat key=value config; '#' starts a comment, lists are comma-separated.
///
///   level_probs = 0.25, 0.75
///   rc = 3
///   rd = 0.5
///   ubound_sweep = 0.55, 0.75, 0.95
///   sets_per_point = 200
///   methods = gt, impt
///
/// Other keys: c1_min, c1_max, t_max, epsilon, max_restarts, base_seed,
/// workers, emax_cap, falsify, falsify_horizon_periods.
inline ExperimentConfig parse_config(std::istream& in)
{
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(lineno, "expected key = value");
        auto parts = detail::split_list(line.substr(0, eq));
        if (parts.size() != 1)
            throw ParseError(lineno, "bad key");
        const std::string key = parts[0];
        std::string value = line.substr(eq + 1);
        std::erase(value, '\r');
        const auto items = detail::split_list(value);
        if (items.empty())
            throw ParseError(lineno, "missing value for '" + key + "'");
        auto single = [&]() -> const std::string& {
            if (items.size() != 1)
                throw ParseError(lineno, "'" + key + "' takes a single value");
            return items[0];
        };

        try {
            if (key == "level_probs") {
                cfg.gen.level_probs.clear();
                for (const auto& s : items)
                    cfg.gen.level_probs.push_back(to_double(parse_rational(s)));
            } else if (key == "rc") {
                cfg.gen.rc.clear();
                for (const auto& s : items)
                    cfg.gen.rc.push_back(parse_rational(s));
            } else if (key == "rd") {
                cfg.gen.rd = parse_rational(single());
            } else if (key == "c1_min") {
                cfg.gen.c1_min = detail::to_integer(single());
            } else if (key == "c1_max") {
                cfg.gen.c1_max = detail::to_integer(single());
            } else if (key == "t_max") {
                cfg.gen.t_max = detail::to_integer(single());
            } else if (key == "epsilon") {
                cfg.gen.epsilon = parse_rational(single());
            } else if (key == "max_restarts") {
                cfg.gen.max_restarts = static_cast<std::size_t>(detail::to_integer(single()));
            } else if (key == "ubound" || key == "ubound_sweep") {
                cfg.ubound_sweep.clear();
                for (const auto& s : items)
                    cfg.ubound_sweep.push_back(parse_rational(s));
            } else if (key == "sets_per_point") {
                cfg.sets_per_point = static_cast<std::size_t>(detail::to_integer(single()));
            } else if (key == "methods") {
                cfg.methods.clear();
                for (const auto& s : items)
                    cfg.methods.push_back(parse_method(s));
            } else if (key == "base_seed") {
                cfg.base_seed = static_cast<std::uint64_t>(detail::to_integer(single()));
            } else if (key == "workers") {
                cfg.workers = static_cast<unsigned>(detail::to_integer(single()));
            } else if (key == "emax_cap") {
                cfg.emax_cap = detail::to_integer(single());
            } else if (key == "falsify") {
                cfg.falsify = static_cast<std::size_t>(detail::to_integer(single()));
            } else if (key == "falsify_horizon_periods") {
                cfg.falsify_horizon_periods = detail::to_integer(single());
            } else {
                throw ParseError(lineno, "unknown key '" + key + "'");
            }
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ParseError(lineno, ex.what());
        }
    }
    if (auto v = cfg.violation(); !v.empty())
        throw ParseError(lineno, v);
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

// ---------------------------------------------------------------------------

struct AcceptanceRow {
    Rational ubound = 0;
    Method method = Method::GT;
    std::size_t accepted = 0;
    std::size_t total = 0;

    Rational ratio() const { return total == 0 ? Rational(0) : Rational(accepted, total); }

    bool operator==(const AcceptanceRow&) const = default;
};

struct AcceptanceTable {
    std::vector<AcceptanceRow> rows;

    const AcceptanceRow* find(const Rational& u, Method m) const
    {
        for (const auto& r : rows)
            if (r.ubound == u && r.method == m)
                return &r;
        return nullptr;
    }

    bool operator==(const AcceptanceTable&) const = default;
};

inline void write_acceptance_csv(std::ostream& out, const AcceptanceTable& table)
{
    out << "ubound,method,accepted,total,ratio\n";
    for (const auto& r : table.rows) {
        std::ostringstream u, ratio;
        u << std::setprecision(6) << to_double(r.ubound);
        ratio << std::fixed << std::setprecision(6) << to_double(r.ratio());
        out << u.str() << ',' << to_string(r.method) << ',' << r.accepted << ',' << r.total << ',' << ratio.str()
            << '\n';
    }
}

/// Sum of A(U) * U over sum of U, over every point of `sweep`. Throws
/// std::invalid_argument if the table lacks a point for `method`.
inline Rational weighted_acceptance(const AcceptanceTable& table, Method method,
                                    const std::vector<Rational>& sweep = default_sweep())
{
    Rational num = 0;
    Rational den = 0;
    for (const auto& u : sweep) {
        const AcceptanceRow* row = table.find(u, method);
        if (!row)
            throw std::invalid_argument("no " + to_string(method) + " row for U = " + to_string(u));
        num += row->ratio() * u;
        den += u;
    }
    if (den == 0)
        throw std::invalid_argument("empty sweep");
    return num / den;
}

/// Thrown when the simulator finds a deadline miss in an accepted set.
class FalsificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws std::invalid_argument for an invalid config, std::runtime_error if
/// generation gives up, and FalsificationError on a counterexample.
inline AcceptanceTable run_experiment(const ExperimentConfig& cfg)
{
    if (auto v = cfg.violation(); !v.empty())
        throw std::invalid_argument(v);

    const std::size_t points = cfg.ubound_sweep.size();
    const std::size_t n_jobs = points * cfg.sets_per_point;
    const std::size_t n_methods = cfg.methods.size();
    std::vector<char> accepted(n_jobs * n_methods, 0);
    std::vector<std::exception_ptr> errors(n_jobs);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};

    auto work = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= n_jobs || stop.load())
                return;
            try {
                GenParams gp = cfg.gen;
                gp.ubound = cfg.ubound_sweep[j / cfg.sets_per_point];
                const std::uint64_t seed = cfg.base_seed + j;
                const TaskSet set = gen_taskset(gp, seed);
                for (std::size_t k = 0; k < n_methods; ++k) {
                    Verdict v = tune_system(set, {cfg.methods[k], cfg.emax_cap});
                    accepted[j * n_methods + k] = v.schedulable ? 1 : 0;
                    if (!v.schedulable || cfg.falsify == 0)
                        continue;
                    Time t_max = 0;
                    for (const auto& t : set)
                        t_max = std::max(t_max, t.period);
                    if (auto cex = falsify(set, v.deadlines, cfg.falsify, seed, cfg.falsify_horizon_periods * t_max)) {
                        std::ostringstream msg;
                        const Miss& m = cex->result.misses.front();
                        msg << "deadline miss in a set accepted by " << to_string(cfg.methods[k]) << " (seed " << seed
                            << ", scenario " << cex->index << "): task " << m.task << " job " << m.job
                            << " released " << m.release << " missed " << m.deadline << " in mode " << m.mode
                            << "\n"
                            << serialize_taskset(set);
                        throw FalsificationError(msg.str());
                    }
                }
            } catch (...) {
                errors[j] = std::current_exception();
                stop.store(true);
            }
        }
    };

    const unsigned workers = std::max(1u, cfg.workers);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    AcceptanceTable table;
    for (std::size_t p = 0; p < points; ++p) {
        for (std::size_t k = 0; k < n_methods; ++k) {
            AcceptanceRow row{cfg.ubound_sweep[p], cfg.methods[k], 0, cfg.sets_per_point};
            for (std::size_t s = 0; s < cfg.sets_per_point; ++s)
                row.accepted += accepted[(p * cfg.sets_per_point + s) * n_methods + k];
            table.rows.push_back(row);
        }
    }
    return table;
}

}  // namespace mcdbf
