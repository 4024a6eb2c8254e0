#pragma once

// Single-mode (SM) demand bound functions. dbf_sm_task(task, e, m) bounds the
// demand of one task over [S_m, S_m + e) assuming modes below m were met; the
// system before S_m is otherwise ignored.

#include "mcdbf/model.hpp"

#include <optional>

namespace mcdbf {

/// floor(a / b) for b > 0.
constexpr Time floor_div(Time a, Time b)
{
    Time q = a / b;
    return (a % b != 0 && a < 0) ? q - 1 : q;
}

/// Non-negative a mod b for b > 0.
constexpr Time floor_mod(Time a, Time b)
{
    Time r = a % b;
    return r < 0 ? r + b : r;
}

/// Classic sporadic dbf: max(0, (floor((e - D) / T) + 1) * C).
constexpr Time dbf_nonmc(Time period, Time deadline, Time wcet, Time e)
{
    if (e < deadline)
        return 0;
    return (floor_div(e - deadline, period) + 1) * wcet;
}

/// Mode-1 demand, using the (possibly tuned) virtual deadline D^1.
inline Time dbf_sm_mode1(const McTask& task, TaskDeadlines dl, Time e)
{
    return dbf_nonmc(task.period, dl.at(1), task.budget(1), e);
}

/// Demand of the carry-over job that must already be finished before S_m,
/// when its last virtual deadline lands at the end of the window.
inline Time carry_over_done(const McTask& task, TaskDeadlines dl, Time e, int mode)
{
    const Time r = floor_mod(e, task.period);
    const Time slack = dl.at(mode) - dl.at(mode - 1);
    if (slack <= r && r < dl.at(mode))
        return std::max<Time>(0, task.budget(mode - 1) - r + slack);
    return 0;
}

/// dbf_SM(tau_i, e, m). Zero for tasks below mode m; mode 1 is the plain
/// sporadic dbf with D^1.
inline Time dbf_sm_task(const McTask& task, TaskDeadlines dl, Time e, int mode)
{
    if (task.level < mode)
        return 0;
    if (mode == 1)
        return dbf_sm_mode1(task, dl, e);
    const Time slack = dl.at(mode) - dl.at(mode - 1);
    const Time jobs = std::max<Time>(0, 1 + floor_div(e - slack, task.period));
    return std::max<Time>(0, jobs * task.budget(mode) - carry_over_done(task, dl, e, mode));
}

inline Time dbf_sm_set(const TaskSet& set, const DeadlineTable& dl, Time e, int mode)
{
    Time sum = 0;
    for (std::size_t i = 0; i < set.size(); ++i)
        sum += dbf_sm_task(set[i], dl.row(i), e, mode);
    return sum;
}

struct SmCheckResult {
    std::optional<Time> failing_e;
    std::optional<Time> demand_at_failure;

    bool passed() const { return !failing_e.has_value(); }
};

namespace detail {

template <class DemandFn>
SmCheckResult first_overload(Time emax, DemandFn demand)
{
    for (Time e = 1; e <= emax; ++e) {
        Time d = demand(e);
        if (d > e)
            return {e, d};
    }
    return {};
}

}  // namespace detail

/// CN_m^S: dbf_SM(tau, e, m) <= e for every e in 1..emax.
inline SmCheckResult check_cn_s(const TaskSet& set, const DeadlineTable& dl, int mode, Time emax)
{
    return detail::first_overload(emax, [&](Time e) { return dbf_sm_set(set, dl, e, mode); });
}

}  // namespace mcdbf
