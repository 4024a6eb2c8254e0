#pragma once

// Unit-quantum preemptive EDF with per-mode virtual deadlines.
//
// The system starts in mode 1. A job that has run for C^m units in mode m
// without signalling completion, and whose task has L_i > m, moves the system
// to mode m+1; all jobs of tasks with L_i <= m are dropped at that instant and
// later releases of those tasks are ignored. An idle instant returns the
// system to mode 1.

#include "mcdbf/model.hpp"

#include <algorithm>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace mcdbf {

struct ScenarioJob {
    Time release = 0;
    Time budget = 1;  // execution time the job actually needs, 1..C^{L_i}

    bool operator==(const ScenarioJob&) const = default;
};

/// Release times and budgets per task, in release order.
struct Scenario {
    std::vector<std::vector<ScenarioJob>> jobs;

    bool operator==(const Scenario&) const = default;
};

/// Empty string when `sc` is a legal sporadic scenario for `set`.
inline std::string scenario_violation(const TaskSet& set, const Scenario& sc)
{
    if (sc.jobs.size() != set.size())
        return "scenario has " + std::to_string(sc.jobs.size()) + " job lists for " + std::to_string(set.size()) +
               " tasks";
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& t = set[i];
        const auto& js = sc.jobs[i];
        for (std::size_t k = 0; k < js.size(); ++k) {
            const std::string where = "task " + std::to_string(i) + " job " + std::to_string(k) + ": ";
            if (js[k].release < 0)
                return where + "negative release";
            if (k > 0 && js[k].release - js[k - 1].release < t.period)
                return where + "released less than T after the previous job";
            if (js[k].budget < 1 || js[k].budget > t.budget(t.level))
                return where + "budget outside [1, C^L]";
        }
    }
    return {};
}

struct Miss {
    std::size_t task = 0;
    std::size_t job = 0;
    Time release = 0;
    Time deadline = 0;
    int mode = 0;  // mode in force at the deadline

    bool operator==(const Miss&) const = default;
};

struct ModeSwitch {
    Time time = 0;
    int from = 0;
    int to = 0;
    std::size_t task = 0;  // task whose job overran

    bool operator==(const ModeSwitch&) const = default;
};

struct SimResult {
    std::vector<Miss> misses;          // true deadlines r + D_i
    std::vector<Miss> virtual_misses;  // virtual deadlines r + D_i^m of the current mode
    std::vector<ModeSwitch> mode_switch_log;
    std::vector<Time> idle_resets;

    bool operator==(const SimResult&) const = default;
};

struct SimOptions {
    bool track_virtual = true;
    std::ostream* trace = nullptr;  // CSV: time,task,mode,event
};

/// Throws std::invalid_argument for an invalid scenario or horizon < 1.
inline SimResult simulate(const TaskSet& set, const DeadlineTable& dl, const Scenario& sc, Time horizon,
                          const SimOptions& opt = {})
{
    if (auto v = scenario_violation(set, sc); !v.empty())
        throw std::invalid_argument(v);
    if (horizon < 1)
        throw std::invalid_argument("horizon must be >= 1");

    struct Active {
        std::size_t task;
        std::size_t job;
        Time release;
        Time budget;
        Time executed = 0;
        bool missed = false;
        bool vmissed = false;
    };

    SimResult res;
    std::vector<Active> active;
    std::vector<std::size_t> next(set.size(), 0);
    int mode = 1;

    auto log = [&](Time t, long task, const char* event) {
        if (opt.trace)
            *opt.trace << t << ',' << task << ',' << mode << ',' << event << '\n';
    };
    if (opt.trace)
        *opt.trace << "time,task,mode,event\n";

    auto check_deadlines = [&](Time t) {
        for (auto& j : active) {
            const auto& task = set[j.task];
            if (!j.missed && t >= j.release + task.deadline) {
                j.missed = true;
                res.misses.push_back({j.task, j.job, j.release, j.release + task.deadline, mode});
                log(t, static_cast<long>(j.task), "miss");
            }
            if (opt.track_virtual && !j.vmissed && task.level >= mode &&
                t >= j.release + dl.at(j.task, mode)) {
                j.vmissed = true;
                res.virtual_misses.push_back({j.task, j.job, j.release, j.release + dl.at(j.task, mode), mode});
            }
        }
    };

    for (Time t = 0; t < horizon; ++t) {
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto& js = sc.jobs[i];
            while (next[i] < js.size() && js[next[i]].release <= t) {
                const auto& j = js[next[i]];
                if (set[i].level >= mode)
                    active.push_back({i, next[i], j.release, j.budget});
                ++next[i];
            }
        }
        check_deadlines(t);

        if (active.empty()) {
            if (mode > 1) {
                mode = 1;
                res.idle_resets.push_back(t);
                log(t, -1, "reset");
            }
            log(t, -1, "idle");
            continue;
        }

        auto run = std::min_element(active.begin(), active.end(), [&](const Active& a, const Active& b) {
            const Time da = a.release + dl.at(a.task, mode);
            const Time db = b.release + dl.at(b.task, mode);
            if (da != db)
                return da < db;
            if (a.task != b.task)
                return a.task < b.task;
            return a.job < b.job;
        });
        log(t, static_cast<long>(run->task), "run");
        ++run->executed;

        const auto& task = set[run->task];
        if (run->executed >= run->budget) {
            log(t + 1, static_cast<long>(run->task), "complete");
            active.erase(run);
            continue;
        }
        bool switched = false;
        while (mode < task.level && run->executed >= task.budget(mode)) {
            res.mode_switch_log.push_back({t + 1, mode, mode + 1, run->task});
            ++mode;
            switched = true;
        }
        if (switched) {
            log(t + 1, static_cast<long>(run->task), "switch");
            std::erase_if(active, [&](const Active& a) { return set[a.task].level < mode; });
        }
    }
    check_deadlines(horizon);
    return res;
}

// ---------------------------------------------------------------------------
// Falsification

/// Sporadic releases with gap T_i plus geometric jitter. With probability
/// `aggressiveness` a job overruns: its budget is drawn from (C^m, C^{m+1}]
/// for a random level m < L_i; otherwise from [1, C^1].
inline Scenario random_scenario(const TaskSet& set, std::uint64_t seed, Time horizon, double aggressiveness)
{
    std::mt19937_64 rng(seed);
    std::geometric_distribution<Time> jitter(0.6);
    std::bernoulli_distribution overrun(std::clamp(aggressiveness, 0.0, 1.0));

    Scenario sc;
    sc.jobs.resize(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& t = set[i];
        std::vector<int> steps;  // levels m with C^m < C^{m+1}
        for (int m = 1; m < t.level; ++m)
            if (t.budget(m) < t.budget(m + 1))
                steps.push_back(m);

        for (Time r = jitter(rng); r < horizon; r += t.period + jitter(rng)) {
            Time b = 0;
            if (!steps.empty() && overrun(rng)) {
                const int m = steps[std::uniform_int_distribution<std::size_t>(0, steps.size() - 1)(rng)];
                b = std::uniform_int_distribution<Time>(t.budget(m) + 1, t.budget(m + 1))(rng);
            } else {
                b = std::uniform_int_distribution<Time>(1, t.budget(1))(rng);
            }
            sc.jobs[i].push_back({r, b});
        }
    }
    return sc;
}

struct Counterexample {
    std::size_t index = 0;  // which of the n scenarios
    double aggressiveness = 0;
    Scenario scenario;
    SimResult result;
};

inline constexpr double kAggressiveness[] = {0.0, 0.1, 0.5, 1.0};

/// Runs n random scenarios, cycling the aggressiveness levels, and returns the
/// first one with a true-deadline miss.
inline std::optional<Counterexample> falsify(const TaskSet& set, const DeadlineTable& dl, std::size_t n,
                                             std::uint64_t seed, Time horizon)
{
    for (std::size_t k = 0; k < n; ++k) {
        const double aggr = kAggressiveness[k % std::size(kAggressiveness)];
        Scenario sc = random_scenario(set, seed + k, horizon, aggr);
        SimResult r = simulate(set, dl, sc, horizon, {.track_virtual = false});
        if (!r.misses.empty())
            return Counterexample{k, aggr, std::move(sc), std::move(r)};
    }
    return std::nullopt;
}

}  // namespace mcdbf
