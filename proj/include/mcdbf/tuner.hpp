#pragma once

// Virtual-deadline tuning. Modes are tuned from the highest level down to 2;
// tuning mode m lowers D^{m-1} of a chosen task one unit at a time until the
// mode-m check passes at every interval length (or no candidate is left).
//
//   GT    single-mode checks, candidate = largest demand step
//   GTI   single-mode checks, candidate by demand step times D^{m-1}
//   IMPT  as GTI, plus the multi-mode fallback on single-mode failures

#include "mcdbf/dbf_ism.hpp"
#include "mcdbf/dbf_mm.hpp"
#include "mcdbf/dbf_sm.hpp"

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcdbf {

enum class Method { GT, GTI, IMPT };

inline std::string to_string(Method m)
{
    switch (m) {
    case Method::GT: return "GT";
    case Method::GTI: return "GTI";
    case Method::IMPT: return "IMPT";
    }
    return "?";
}

/// Case-insensitive "gt", "gti" or "impt".
inline Method parse_method(std::string s)
{
    for (auto& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "gt")
        return Method::GT;
    if (s == "gti")
        return Method::GTI;
    if (s == "impt")
        return Method::IMPT;
    throw std::invalid_argument("unknown method '" + s + "'");
}

enum class Reason {
    Schedulable,
    CandidatesExhausted,  // a mode check failed and no candidate task is left
    LowestModeOverload,   // mode 1 fails and there is no decrement to undo
    UnboundedInterval,    // the interval-length bound of some mode is unbounded
    VerificationFailed,   // tuning finished but the final table fails a check
};

inline std::string to_string(Reason r)
{
    switch (r) {
    case Reason::Schedulable: return "schedulable";
    case Reason::CandidatesExhausted: return "candidates-exhausted";
    case Reason::LowestModeOverload: return "lowest-mode-overload";
    case Reason::UnboundedInterval: return "unbounded-interval";
    case Reason::VerificationFailed: return "verification-failed";
    }
    return "?";
}

enum class ActionKind {
    Decrement,      // D^{m-1} of `task` lowered by one
    Undo,           // the previous decrement reverted after a mode-1 overload
    UndoRemove,     // the reverted task dropped from the candidate set
    ExhaustRemove,  // the picked task is already at D^{m-1} = C^{m-1}; dropped
    Clamp,          // a lower-mode deadline pulled down to keep D^k <= D^{k+1};
                    // `mode` is then the mode of the clamped deadline
};

inline std::string to_string(ActionKind k)
{
    switch (k) {
    case ActionKind::Decrement: return "decrement";
    case ActionKind::Undo: return "undo";
    case ActionKind::UndoRemove: return "undo-remove";
    case ActionKind::ExhaustRemove: return "exhaust-remove";
    case ActionKind::Clamp: return "clamp";
    }
    return "?";
}

struct TuneAction {
    ActionKind kind = ActionKind::Decrement;
    std::size_t task = 0;
    int mode = 0;
    Time e = 0;
    Time old_deadline = 0;
    Time new_deadline = 0;

    bool operator==(const TuneAction&) const = default;
};

/// Where a check failed: mode, interval length, and the mode-m switch offset
/// for multi-mode failures.
struct Witness {
    int mode = 0;
    Time e = 0;
    std::optional<Time> s_m;

    bool operator==(const Witness&) const = default;
};

struct Verdict {
    bool schedulable = false;
    Reason reason = Reason::Schedulable;
    DeadlineTable deadlines;
    std::optional<Witness> witness;
    std::vector<TuneAction> trace;
};

struct TuneOptions {
    Method method = Method::IMPT;
    std::optional<Time> emax_cap;
};

inline void write_trace_csv(std::ostream& out, const std::vector<TuneAction>& trace)
{
    out << "action,task,mode,e,old_deadline,new_deadline\n";
    for (const auto& a : trace)
        out << to_string(a.kind) << ',' << a.task << ',' << a.mode << ',' << a.e << ',' << a.old_deadline << ','
            << a.new_deadline << '\n';
}

// ---------------------------------------------------------------------------
// Candidate selection

/// Demand step of the task's SM dbf at e; at e = 1 the step from zero.
inline Time delta(const McTask& task, TaskDeadlines dl, Time e, int mode)
{
    if (e <= 1)
        return dbf_sm_task(task, dl, 1, mode);
    return dbf_sm_task(task, dl, e, mode) - dbf_sm_task(task, dl, e - 1, mode);
}

/// How far D^{m-1} must drop before the task's demand at e starts to fall.
/// Unclamped.
inline Time len_metric(const McTask& task, TaskDeadlines dl, Time e, int mode)
{
    return floor_mod(e, task.period) - (dl.at(mode) - dl.at(mode - 1)) - task.budget(mode - 1);
}

enum class CandidateMetric {
    Delta,              // largest step, then lowest index
    DeltaTimesDeadline, // largest step * D^{m-1}, then smallest max(0, len), then lowest index
};

inline std::size_t find_candidate(const TaskSet& set, const std::vector<std::size_t>& candidates,
                                  const DeadlineTable& dl, Time e, int mode,
                                  CandidateMetric metric = CandidateMetric::DeltaTimesDeadline)
{
    if (candidates.empty())
        throw std::invalid_argument("find_candidate: no candidates");

    std::size_t best = candidates.front();
    Time best_key = 0;
    Time best_len = 0;
    bool first = true;
    for (std::size_t i : candidates) {
        const TaskDeadlines row = dl.row(i);
        const Time d = delta(set[i], row, e, mode);
        const Time key = metric == CandidateMetric::Delta ? d : d * row.at(mode - 1);
        const Time len = metric == CandidateMetric::Delta ? 0 : std::max<Time>(0, len_metric(set[i], row, e, mode));
        const bool better = first || key > best_key || (key == best_key && len < best_len) ||
                            (key == best_key && len == best_len && i < best);
        if (better) {
            best = i;
            best_key = key;
            best_len = len;
            first = false;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Per-mode tuning

struct ModeOutcome {
    bool ok = true;
    Reason reason = Reason::Schedulable;
    std::optional<Witness> witness;
};

namespace detail {

inline std::optional<Time> capped_bound(const TaskSet& set, const DeadlineTable& dl, int mode,
                                        std::optional<Time> cap)
{
    auto b = interval_bound(set, dl, mode);
    if (b && cap)
        b = std::min(*b, std::max<Time>(1, *cap));
    return b;
}

/// One diagonal cache per mode, all told about every row change.
class DiagonalCaches {
public:
    DiagonalCaches(const TaskSet& set)
    {
        for (int m = 2; m <= set.max_level(); ++m)
            caches_.emplace_back(set, m);
    }
    DiagonalCache* at(int mode) { return &caches_.at(static_cast<std::size_t>(mode - 2)); }
    void note_change(std::size_t task, const DeadlineTable& before)
    {
        for (auto& c : caches_)
            c.note_change(task, before);
    }

private:
    std::vector<DiagonalCache> caches_;
};

/// D^k <- min(D^k, D^{k+1}) for k below `mode`, from the top down.
inline void clamp_lower(const TaskSet& set, DeadlineTable& dl, std::size_t task, int mode, Time e,
                        std::vector<TuneAction>& trace, DiagonalCaches* caches = nullptr)
{
    for (int k = std::min(mode, set[task].level) - 1; k >= 1; --k) {
        const Time above = dl.at(task, k + 1);
        const Time cur = dl.at(task, k);
        if (cur > above) {
            if (caches)
                caches->note_change(task, dl);
            dl.set(task, k, above);
            trace.push_back({ActionKind::Clamp, task, k, e, cur, above});
        }
    }
}

/// Single-mode check at e, with the multi-mode diagonal fallback for IMPT.
/// Returns the failure if both fail.
inline std::optional<Witness> mode_failure_at(const TaskSet& set, const DeadlineTable& dl, int mode, Time e,
                                              Time emax, Method method, DiagonalCache* cache = nullptr)
{
    if (dbf_sm_set(set, dl, e, mode) <= e)
        return std::nullopt;
    if (method != Method::IMPT)
        return Witness{mode, e, std::nullopt};
    auto diag = cache ? cache->failure(dl, e, emax) : mm_diagonal_failure(set, dl, mode, e, emax);
    if (!diag)
        return std::nullopt;
    return Witness{mode, diag->e, diag->s_m};
}

}  // namespace detail

/// TuneMode(m) for m >= 2. Mutates `dl` and appends to `trace`. `caches`, if
/// given, must have seen every earlier change to `dl`.
inline ModeOutcome tune_mode(const TaskSet& set, DeadlineTable& dl, int mode, const TuneOptions& opt,
                             std::vector<TuneAction>& trace, detail::DiagonalCaches* caches = nullptr)
{
    if (mode < 2)
        throw std::invalid_argument("tune_mode needs mode >= 2");

    const CandidateMetric metric = opt.method == Method::GT ? CandidateMetric::Delta : CandidateMetric::DeltaTimesDeadline;
    std::vector<std::size_t> psi;
    for (std::size_t i = 0; i < set.size(); ++i)
        if (set[i].level >= mode)
            psi.push_back(i);
    auto drop = [&psi](std::size_t i) { std::erase(psi, i); };

    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::size_t last_decrement = none;
    std::optional<detail::DiagonalCaches> own;
    if (!caches)
        caches = &own.emplace(set);
    for (;;) {
        const auto bound_m = detail::capped_bound(set, dl, mode, opt.emax_cap);
        if (!bound_m)
            return {false, Reason::UnboundedInterval, Witness{mode, 0, std::nullopt}};
        std::optional<Time> bound_1;
        if (mode == 2) {
            bound_1 = detail::capped_bound(set, dl, 1, opt.emax_cap);
            if (!bound_1)
                return {false, Reason::UnboundedInterval, Witness{1, 0, std::nullopt}};
        }
        const Time scan_end = std::max(*bound_m, bound_1.value_or(0));

        bool changed = false;
        for (Time e = 1; e <= scan_end && !changed; ++e) {
            if (bound_1 && e <= *bound_1 && dbf_sm_set(set, dl, e, 1) > e) {
                if (last_decrement == none)
                    return {false, Reason::LowestModeOverload, Witness{1, e, std::nullopt}};
                const std::size_t i = last_decrement;
                const Time cur = dl.at(i, 1);
                caches->note_change(i, dl);
                dl.set(i, 1, cur + 1);
                trace.push_back({ActionKind::Undo, i, mode, e, cur, cur + 1});
                trace.push_back({ActionKind::UndoRemove, i, mode, e, cur + 1, cur + 1});
                drop(i);
                last_decrement = none;
                changed = true;
                break;
            }
            if (e > *bound_m)
                continue;
            auto failure = detail::mode_failure_at(set, dl, mode, e, *bound_m, opt.method, caches->at(mode));
            if (!failure)
                continue;

            for (;;) {
                if (psi.empty())
                    return {false, Reason::CandidatesExhausted, failure};
                const std::size_t i = find_candidate(set, psi, dl, e, mode, metric);
                const Time cur = dl.at(i, mode - 1);
                if (cur - 1 < set[i].budget(mode - 1)) {
                    trace.push_back({ActionKind::ExhaustRemove, i, mode, e, cur, cur});
                    drop(i);
                    continue;
                }
                caches->note_change(i, dl);
                dl.set(i, mode - 1, cur - 1);
                trace.push_back({ActionKind::Decrement, i, mode, e, cur, cur - 1});
                detail::clamp_lower(set, dl, i, mode - 1, e, trace, caches);
                last_decrement = i;
                changed = true;
                break;
            }
        }
        if (!changed)
            return {};
    }
}

// ---------------------------------------------------------------------------
// Whole-system tuning

/// Checks the table against every mode: the per-method mode-m condition for
/// m = M..2 and the mode-1 demand check. Returns the first failure.
inline std::optional<std::pair<Reason, Witness>> verify(const TaskSet& set, const DeadlineTable& dl, Method method,
                                                        std::optional<Time> emax_cap,
                                                        detail::DiagonalCaches* caches = nullptr)
{
    if (!dl.violation(set).empty())
        return std::pair{Reason::VerificationFailed, Witness{}};
    for (int m = set.max_level(); m >= 1; --m) {
        const auto bound = detail::capped_bound(set, dl, m, emax_cap);
        if (!bound)
            return std::pair{Reason::UnboundedInterval, Witness{m, 0, std::nullopt}};
        for (Time e = 1; e <= *bound; ++e) {
            if (m == 1) {
                if (dbf_sm_set(set, dl, e, 1) > e)
                    return std::pair{Reason::LowestModeOverload, Witness{1, e, std::nullopt}};
                continue;
            }
            if (auto w = detail::mode_failure_at(set, dl, m, e, *bound, method, caches ? caches->at(m) : nullptr))
                return std::pair{Reason::VerificationFailed, *w};
        }
    }
    return std::nullopt;
}

inline Verdict tune_system(const TaskSet& set, const TuneOptions& opt = {})
{
    Verdict v;
    v.deadlines = DeadlineTable::initial(set);
    detail::DiagonalCaches caches(set);
    for (int m = set.max_level(); m >= 2; --m) {
        ModeOutcome r = tune_mode(set, v.deadlines, m, opt, v.trace, &caches);
        if (!r.ok) {
            v.schedulable = false;
            v.reason = r.reason;
            v.witness = r.witness;
            return v;
        }
        for (std::size_t i = 0; i < set.size(); ++i)
            if (set[i].level >= m - 1)
                detail::clamp_lower(set, v.deadlines, i, m - 1, 0, v.trace, &caches);
    }
    if (auto failure = verify(set, v.deadlines, opt.method, opt.emax_cap, &caches)) {
        v.schedulable = false;
        v.reason = failure->first;
        v.witness = failure->second;
        return v;
    }
    v.schedulable = true;
    v.reason = Reason::Schedulable;
    return v;
}

}  // namespace mcdbf
