#pragma once

// Improved single-mode dbf. The SM dbf lets every carry-over job keep its
// full remaining level-(m-1) demand at S_m. On a uniprocessor those remainders
// must also fit before their old-mode deadlines, so whatever does not fit was
// necessarily executed before the switch and is subtracted here.

#include "mcdbf/dbf_sm.hpp"

#include <algorithm>
#include <vector>

namespace mcdbf {

struct CarryOverProfile {
    std::size_t task_index = 0;
    Time rmd = 0;           // maximum remaining level-(m-1) demand at S_m
    Time rel_deadline = 0;  // old-mode deadline of the carry-over job, relative to S_m
};

struct OverEstimate {
    std::size_t task_index = 0;
    Time available = 0;  // AS: slots left for this job before its old-mode deadline
    Time od = 0;         // demand that must have completed before S_m
};

/// Carry-over job of `task` under the worst-case SM release pattern for
/// window length e. Requires 2 <= mode <= task.level.
inline CarryOverProfile remaining_demand(const McTask& task, TaskDeadlines dl, Time e, int mode,
                                         std::size_t task_index = 0)
{
    CarryOverProfile p;
    p.task_index = task_index;
    p.rel_deadline = floor_mod(e, task.period) - dl.at(mode) + dl.at(mode - 1);
    if (p.rel_deadline >= 0)
        p.rmd = task.budget(mode - 1) - carry_over_done(task, dl, e, mode);
    return p;
}

/// Available-slot recursion over carry-over jobs in old-deadline order.
/// Profiles with rmd == 0 are ignored. The result is in processing order
/// (rel_deadline ascending, ties by task index).
inline std::vector<OverEstimate> overestimated_demand(std::vector<CarryOverProfile> profiles)
{
    std::erase_if(profiles, [](const CarryOverProfile& p) { return p.rmd <= 0; });
    std::stable_sort(profiles.begin(), profiles.end(), [](const auto& a, const auto& b) {
        if (a.rel_deadline != b.rel_deadline)
            return a.rel_deadline < b.rel_deadline;
        return a.task_index < b.task_index;
    });

    std::vector<OverEstimate> out;
    out.reserve(profiles.size());
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        const auto& p = profiles[k];
        Time as = p.rel_deadline;
        if (k > 0) {
            const auto& prev = profiles[k - 1];
            as = p.rel_deadline - prev.rel_deadline + std::max<Time>(0, out.back().available - prev.rmd);
        }
        out.push_back({p.task_index, as, std::max<Time>(0, p.rmd - as)});
    }
    return out;
}

inline Time total_overestimate(const std::vector<OverEstimate>& ods)
{
    Time sum = 0;
    for (const auto& o : ods)
        sum += o.od;
    return sum;
}

/// Carry-over profiles of every task with L_i >= mode (mode >= 2).
inline std::vector<CarryOverProfile> carry_over_profiles(const TaskSet& set, const DeadlineTable& dl, Time e, int mode)
{
    std::vector<CarryOverProfile> out;
    for (std::size_t i = 0; i < set.size(); ++i)
        if (set[i].level >= mode)
            out.push_back(remaining_demand(set[i], dl.row(i), e, mode, i));
    return out;
}

/// dbf_ISM(tau, e, m) = dbf_SM(tau, e, m) - sum of OD. Equal to the SM dbf in
/// mode 1, which has no carry-over jobs.
inline Time dbf_ism_set(const TaskSet& set, const DeadlineTable& dl, Time e, int mode)
{
    Time sm = dbf_sm_set(set, dl, e, mode);
    if (mode <= 1)
        return sm;
    return sm - total_overestimate(overestimated_demand(carry_over_profiles(set, dl, e, mode)));
}

inline SmCheckResult check_ism(const TaskSet& set, const DeadlineTable& dl, int mode, Time emax)
{
    return detail::first_overload(emax, [&](Time e) { return dbf_ism_set(set, dl, e, mode); });
}

}  // namespace mcdbf
