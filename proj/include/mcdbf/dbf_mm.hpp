#pragma once

// Multi-mode (MM) demand bound functions.
//
// The window is [0, e) where 0 is the switch into mode m-1 (S_{m-1}) and
// s_m in [0, e] is the switch into mode m. Tasks with L_i = m-1 execute only
// in [0, s_m); tasks with L_i >= m execute throughout. A job crossing 0 or s_m
// is one of four kinds:
//
//   A  L_i = m-1, released before 0
//   B  L_i = m-1, last release in [0, s_m]
//   C  L_i >= m,  released before 0
//   D  L_i >= m,  last release in [0, s_m]
//
// Budgets and virtual deadlines at mode 0 are 0, so for m = 2 every job
// released before the window start contributes nothing.

#include "mcdbf/dbf_ism.hpp"
#include "mcdbf/dbf_sm.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace mcdbf {

enum class JobKind { A, B, C, D };

struct MmQuery {
    Time s_m = 0;  // offset of the switch into mode m
    Time e = 0;    // window length
    int mode = 2;  // m >= 2
};

inline void validate(const MmQuery& q)
{
    if (q.mode < 2)
        throw std::invalid_argument("MM dbf needs mode >= 2");
    if (q.s_m < 0 || q.s_m > q.e)
        throw std::invalid_argument("MM dbf needs 0 <= s_m <= e");
}

namespace detail {

// Per-(task, mode) constants used in the inner loops.
struct MmTerms {
    Time period;
    Time c_m2, c_m1, c_m;  // C^{m-2}, C^{m-1}, C^m (c_m unused for L = m-1)
    Time d_m2, d_m1, d_m;  // D^{m-2}, D^{m-1}, D^m
    bool high;             // L_i >= m

    MmTerms(const McTask& task, TaskDeadlines dl, int mode)
        : period(task.period),
          c_m2(task.budget(mode - 2)),
          c_m1(task.budget(mode - 1)),
          c_m(task.level >= mode ? task.budget(mode) : 0),
          d_m2(dl.at(mode - 2)),
          d_m1(dl.at(mode - 1)),
          d_m(task.level >= mode ? dl.at(mode) : 0),
          high(task.level >= mode)
    {
    }
};

inline Time job_a(const MmTerms& t, Time r, Time s_m, Time e)
{
    const bool c1 = r + t.d_m2 < 0;
    const bool c4 = r + t.d_m1 <= e;
    if (c1 || !c4)
        return 0;
    return std::min(std::min(r + t.d_m2, t.c_m2) + t.c_m1 - t.c_m2, s_m);
}

inline Time job_b(const MmTerms& t, Time r, Time s_m, Time e)
{
    if (r + t.d_m1 > e)
        return 0;
    return std::min(t.c_m1, s_m - r);
}

inline Time job_c(const MmTerms& t, Time r, Time s_m, Time e)
{
    const bool c1 = r + t.d_m2 < 0;
    const bool c4 = r + t.d_m1 <= e;
    if (c1 || !c4)
        return 0;
    const Time done_before = std::min(r + t.d_m2, t.c_m2) - t.c_m2;
    if (r + t.d_m1 < s_m)
        return t.c_m1 + done_before;
    if (r + t.d_m <= e)
        return t.c_m + done_before;
    return std::min(s_m, t.c_m1 + done_before);
}

inline Time job_d(const MmTerms& t, Time r, Time s_m, Time e)
{
    if (r + t.d_m1 > e)
        return 0;
    if (r + t.d_m1 < s_m)
        return t.c_m1;
    if (r + t.d_m <= e)
        return t.c_m;
    return std::min(t.c_m1, s_m - r);
}

inline Time dem_lo(const MmTerms& t, Time r_a, Time s_m, Time e)
{
    Time demand = job_a(t, r_a, s_m, e);
    if (r_a + t.period > s_m)
        return demand;
    const Time between = floor_div(s_m - (r_a + t.period), t.period);
    const Time r_b = r_a + (between + 1) * t.period;
    return demand + between * t.c_m1 + job_b(t, r_b, s_m, e);
}

inline Time dem_hi(const MmTerms& t, Time r_c, Time s_m, Time e)
{
    const Time between = floor_div(s_m - r_c - t.period, t.period);
    if (between >= 0) {
        const Time r_d = r_c + (between + 1) * t.period;
        const Time after = std::max<Time>(0, floor_div(e - (r_d + t.period) - t.d_m, t.period) + 1);
        return job_c(t, r_c, s_m, e) + between * t.c_m1 + job_d(t, r_d, s_m, e) + after * t.c_m;
    }
    const Time after = std::max<Time>(0, floor_div(e - (r_c + t.period) - t.d_m, t.period) + 1);
    return job_c(t, r_c, s_m, e) + after * t.c_m;
}

inline Time dem(const MmTerms& t, Time r, Time s_m, Time e)
{
    return t.high ? dem_hi(t, r, s_m, e) : dem_lo(t, r, s_m, e);
}

// Small fixed-capacity list of candidate offsets in [-T, 0].
class OffsetList {
public:
    explicit OffsetList(Time period) : period_(period) {}

    void add(Time r)
    {
        if (r >= -period_ && r <= 0 && size_ < kCapacity)
            buf_[size_++] = r;
    }
    /// Every offset in [-T, 0] congruent to x, given res = x mod T.
    void add_residue_of(Time res)
    {
        buf_[size_++] = res - period_;
        if (res == 0)
            buf_[size_++] = 0;
    }
    void add_residue(Time x) { add_residue_of(floor_mod(x, period_)); }

    const Time* begin() const { return buf_; }
    const Time* end() const { return buf_ + size_; }
    std::size_t size() const { return size_; }

private:
    static constexpr std::size_t kCapacity = 48;
    Time period_;
    Time buf_[kCapacity];
    std::size_t size_ = 0;
};

template <class Offsets>
Time max_dem(const MmTerms& t, const Offsets& offsets, Time s_m, Time e)
{
    Time best = 0;
    for (Time r : offsets)
        best = std::max(best, dem(t, r, s_m, e));
    return best;
}

// Release offsets of the first job named by the maximum-demand pattern
// lemmas: the last virtual deadline (mode m or m-1) lands on e, or the first
// job's mode-(m-2) deadline leaves exactly C^{m-2} at the window start.
inline OffsetList lemma_offsets(const MmTerms& t, Time e)
{
    OffsetList out(t.period);
    out.add(-t.d_m2 + t.c_m2);
    out.add(floor_mod(e - t.d_m1, t.period) - t.period);
    if (t.high)
        out.add(floor_mod(e - t.d_m, t.period) - t.period);
    return out;
}

// DEM at a fixed (s_m, e) for offsets r in [-T, 0], with the job counts
// derived from one division each of s_m and e - D^m.
class PointDem {
public:
    PointDem(const MmTerms& t, Time s_m, Time e)
        : t_(t), s_(s_m), e_(e), qs_(floor_div(s_m, t.period)), rs_(s_m - qs_ * t.period)
    {
        if (t.high) {
            qx_ = floor_div(e - t.d_m, t.period);
            rx_ = e - t.d_m - qx_ * t.period;
        }
    }

    Time operator()(Time r) const
    {
        const Time T = t_.period;
        const Time between = qs_ + (rs_ - r >= T ? 1 : 0) - 1;  // floor((s - r - T) / T)
        if (!t_.high) {
            Time d = job_a(t_, r, s_, e_);
            if (between < 0)
                return d;
            return d + between * t_.c_m1 + job_b(t_, r + (between + 1) * T, s_, e_);
        }
        const Time to_e = qx_ + (rx_ - r >= T ? 1 : 0);  // floor((e - D^m - r) / T)
        const Time c = job_c(t_, r, s_, e_);
        if (between < 0)
            return c + std::max<Time>(0, to_e) * t_.c_m;
        const Time after = std::max<Time>(0, to_e - between - 1);
        return c + between * t_.c_m1 + job_d(t_, r + (between + 1) * T, s_, e_) + after * t_.c_m;
    }

    /// Offsets where DEM can peak. DEM is linear in r between consecutive
    /// breakpoints, so each jump contributes the last offset before it and
    /// the first after it, and each kink contributes itself.
    OffsetList candidates() const
    {
        const Time T = t_.period;
        OffsetList out(T);
        out.add(-T);
        out.add(0);

        // First job, at r itself.
        out.add(-t_.d_m2 - 1);  // r + D^{m-2} < 0
        out.add(-t_.d_m2);
        out.add(t_.c_m2 - t_.d_m2);  // min(r + D^{m-2}, C^{m-2})
        out.add(s_ - t_.d_m1 - 1);   // r + D^{m-1} < s_m
        out.add(s_ - t_.d_m1);
        out.add(e_ - t_.d_m1);  // r + D^{m-1} <= e
        out.add(e_ - t_.d_m1 + 1);
        out.add(s_ - t_.c_m1 + t_.c_m2 - t_.d_m2);  // cap at s_m
        if (t_.high) {
            out.add(e_ - t_.d_m);  // r + D^m <= e
            out.add(e_ - t_.d_m + 1);
        }

        // Last job before s_m and the job counts, at r + kT.
        auto wrap = [T](Time x) { return x < 0 ? x + T : (x >= T ? x - T : x); };
        out.add_residue_of(rs_);  // count of releases up to s_m
        out.add_residue_of(wrap(rs_ + 1));
        out.add_residue_of(wrap(rs_ - t_.c_m1));  // min(C^{m-1}, s_m - r)
        const Time rs_d1 = wrap(rs_ - t_.d_m1);   // r + D^{m-1} < s_m
        out.add_residue_of(wrap(rs_d1 - 1));
        out.add_residue_of(rs_d1);
        const Time re_d1 = floor_mod(e_ - t_.d_m1, T);  // r + D^{m-1} <= e
        out.add_residue_of(re_d1);
        out.add_residue_of(wrap(re_d1 + 1));
        if (t_.high) {
            out.add_residue_of(rx_);  // r + D^m <= e, and the count of later jobs
            out.add_residue_of(wrap(rx_ + 1));
        }
        return out;
    }

    Time max() const
    {
        Time best = 0;
        for (Time r : candidates())
            best = std::max(best, (*this)(r));
        return best;
    }

private:
    const MmTerms& t_;
    Time s_, e_;
    Time qs_, rs_;
    Time qx_ = 0, rx_ = 0;
};

}  // namespace detail

/// Demand of a single carry-over job of the given kind released at r.
/// Throws std::invalid_argument if the kind does not match the task level.
inline Time job_dbf(const McTask& task, TaskDeadlines dl, JobKind kind, Time r, const MmQuery& q)
{
    validate(q);
    const bool low_kind = kind == JobKind::A || kind == JobKind::B;
    if (low_kind && task.level != q.mode - 1)
        throw std::invalid_argument("job kinds A/B need L_i = m-1");
    if (!low_kind && task.level < q.mode)
        throw std::invalid_argument("job kinds C/D need L_i >= m");
    detail::MmTerms t(task, dl, q.mode);
    switch (kind) {
    case JobKind::A: return detail::job_a(t, r, q.s_m, q.e);
    case JobKind::B: return detail::job_b(t, r, q.s_m, q.e);
    case JobKind::C: return detail::job_c(t, r, q.s_m, q.e);
    case JobKind::D: return detail::job_d(t, r, q.s_m, q.e);
    }
    return 0;
}

/// DEM_i(r_A) for a task with L_i = m-1: its demand in [0, s_m) when the
/// first job is released at r_a and later ones follow at the period.
inline Time dem_lo(const McTask& task, TaskDeadlines dl, Time r_a, const MmQuery& q)
{
    validate(q);
    if (task.level != q.mode - 1)
        throw std::invalid_argument("dem_lo needs L_i = m-1");
    return detail::dem_lo(detail::MmTerms(task, dl, q.mode), r_a, q.s_m, q.e);
}

/// DEM_i(r_C) for a task with L_i >= m: its demand in [0, e).
inline Time dem_hi(const McTask& task, TaskDeadlines dl, Time r_c, const MmQuery& q)
{
    validate(q);
    if (task.level < q.mode)
        throw std::invalid_argument("dem_hi needs L_i >= m");
    return detail::dem_hi(detail::MmTerms(task, dl, q.mode), r_c, q.s_m, q.e);
}

/// dbf_MM(tau_i, s_m, e, m): maximum of DEM over every release offset in
/// {0, -1, ..., -T}, evaluated only at the offsets where DEM can peak. The
/// pattern-lemma offsets are a subset of these.
inline Time dbf_mm_task(const McTask& task, TaskDeadlines dl, const MmQuery& q)
{
    validate(q);
    if (task.level < q.mode - 1)
        return 0;
    detail::MmTerms t(task, dl, q.mode);
    return detail::PointDem(t, q.s_m, q.e).max();
}

/// Maximum of DEM over the pattern-lemma offsets only. Never exceeds
/// dbf_mm_task, and falls below it in some three-level configurations (for
/// example when a job whose mode-(m-2) deadline is exactly the window start
/// still carries C^{m-1} - C^{m-2}).
inline Time dbf_mm_task_lemma(const McTask& task, TaskDeadlines dl, const MmQuery& q)
{
    validate(q);
    if (task.level < q.mode - 1)
        return 0;
    detail::MmTerms t(task, dl, q.mode);
    return detail::max_dem(t, detail::lemma_offsets(t, q.e), q.s_m, q.e);
}

/// Exhaustive maximum of DEM over all integer offsets {0, -1, ..., -T}.
inline Time dbf_mm_task_bruteforce(const McTask& task, TaskDeadlines dl, const MmQuery& q)
{
    validate(q);
    if (task.level < q.mode - 1)
        return 0;
    detail::MmTerms t(task, dl, q.mode);
    Time best = 0;
    for (Time r = 0; r >= -t.period; --r)
        best = std::max(best, detail::dem(t, r, q.s_m, q.e));
    return best;
}

inline Time dbf_mm_set(const TaskSet& set, const DeadlineTable& dl, const MmQuery& q)
{
    Time sum = 0;
    for (std::size_t i = 0; i < set.size(); ++i)
        sum += dbf_mm_task(set[i], dl.row(i), q);
    return sum;
}

// ---------------------------------------------------------------------------
// Interval-length bound

/// Linear upper bound on the MM demand:
///   dbf_MM(tau, s_m, e, m) <= exp_a * s_m + exp_b + exp_c + u_m * e.
struct MmLinearBound {
    Rational exp_a = 0;
    Rational exp_b = 0;
    Rational exp_c = 0;
    Rational u_m = 0;
};

inline MmLinearBound mm_linear_bound(const TaskSet& set, const DeadlineTable& dl, int mode)
{
    MmLinearBound b;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& t = set[i];
        const Time T = t.period;
        const Time c1 = t.budget(mode - 1);
        if (t.level == mode - 1) {
            b.exp_a += Rational(c1, T);
            b.exp_b += Rational(2 * c1 * (T - c1), T);
        } else if (t.level >= mode) {
            const Time c = t.budget(mode);
            b.exp_a += Rational(c1 - c, T);
            b.exp_c += Rational(c * (2 * T - dl.at(i, mode)), T) + Rational(c1 * (T - c1), T);
            b.u_m += Rational(c, T);
        }
    }
    return b;
}

/// e^max for mode m >= 2, or nullopt when the bound is unbounded (the
/// applicable denominator is not positive). At least 1.
inline std::optional<Time> emax_bound(const TaskSet& set, const DeadlineTable& dl, int mode)
{
    if (mode < 2)
        throw std::invalid_argument("emax_bound needs mode >= 2");
    const MmLinearBound b = mm_linear_bound(set, dl, mode);
    const Rational denom = b.exp_a <= 0 ? Rational(1 - b.u_m) : Rational(1 - b.u_m - b.exp_a);
    if (denom <= 0)
        return std::nullopt;
    return std::max<Time>(1, ceil_to_int((b.exp_b + b.exp_c) / denom));
}

/// Classic bound for mode 1: sum C^1 (T - D^1) / T over 1 - U_1.
inline std::optional<Time> emax_bound_mode1(const TaskSet& set, const DeadlineTable& dl)
{
    Rational u = 0;
    Rational slack = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& t = set[i];
        u += Rational(t.budget(1), t.period);
        slack += Rational(t.budget(1) * (t.period - dl.at(i, 1)), t.period);
    }
    if (u >= 1)
        return std::nullopt;
    return std::max<Time>(1, ceil_to_int(slack / (1 - u)));
}

/// Per-mode interval bound: mode 1 uses the classic bound, higher modes the
/// MM bound (which also dominates the SM and ISM demand).
inline std::optional<Time> interval_bound(const TaskSet& set, const DeadlineTable& dl, int mode)
{
    return mode <= 1 ? emax_bound_mode1(set, dl) : emax_bound(set, dl, mode);
}

// ---------------------------------------------------------------------------
// CN_m^M

struct MmFailure {
    Time e = 0;
    Time s_m = 0;
    Time demand = 0;
};

struct MmCheckResult {
    std::optional<MmFailure> failing;
    bool passed() const { return !failing.has_value(); }
};

/// dbf_MM(tau, s_m, e, m) <= e for all e in 1..emax and s_m in 0..e. Returns
/// the lexicographically smallest (e, s_m) violation. Mode 1 falls back to
/// the mode-1 ISM check (s_m reported as 0).
inline MmCheckResult check_cn_m(const TaskSet& set, const DeadlineTable& dl, int mode, Time emax)
{
    if (mode <= 1) {
        auto r = check_ism(set, dl, 1, emax);
        if (r.passed())
            return {};
        return {MmFailure{*r.failing_e, 0, *r.demand_at_failure}};
    }
    for (Time e = 1; e <= emax; ++e) {
        for (Time s = 0; s <= e; ++s) {
            Time d = dbf_mm_set(set, dl, MmQuery{s, e, mode});
            if (d > e)
                return {MmFailure{e, s, d}};
        }
    }
    return {};
}

/// The diagonal used by the tuner's MM fallback: a switch e_from time units
/// before the end of every window e in e_from..e_to, i.e. s_m = e - e_from.
/// Returns the first violation. Points where the linear bound already fits
/// are not evaluated; along the diagonal the bound's slack only grows.
inline std::optional<MmFailure> mm_diagonal_failure(const TaskSet& set, const DeadlineTable& dl, int mode, Time e_from,
                                                    Time e_to)
{
    const MmLinearBound b = mm_linear_bound(set, dl, mode);
    const Rational slope = 1 - b.u_m - b.exp_a;
    if (slope > 0)
        e_to = std::min(e_to, ceil_to_int((b.exp_b + b.exp_c - b.exp_a * e_from) / slope) - 1);

    std::vector<detail::MmTerms> terms;
    terms.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i)
        if (set[i].level >= mode - 1)
            terms.emplace_back(set[i], dl.row(i), mode);

    for (Time e = e_from; e <= e_to; ++e) {
        const Time s = e - e_from;
        Time d = 0;
        for (const auto& t : terms)
            d += detail::PointDem(t, s, e).max();
        if (d > e)
            return MmFailure{e, s, d};
    }
    return std::nullopt;
}

/// Memoized diagonal checks for a deadline table that changes one task at a
/// time. Call note_change(i, dl) before every change to row i; later queries
/// then re-evaluate only the rows that changed since the diagonal was last
/// computed.
class DiagonalCache {
public:
    DiagonalCache(const TaskSet& set, int mode, std::size_t max_cached_points = std::size_t{1} << 22)
        : set_(set), mode_(mode), budget_(max_cached_points)
    {
        for (std::size_t i = 0; i < set.size(); ++i)
            if (set[i].level >= mode - 1)
                ++relevant_;
    }

    void note_change(std::size_t task, const DeadlineTable& before)
    {
        if (set_[task].level >= mode_ - 1)
            log_.push_back({task, detail::MmTerms(set_[task], before.row(task), mode_)});
    }

    /// Same result as mm_diagonal_failure(set, dl, mode, e_from, e_to).
    std::optional<MmFailure> failure(const DeadlineTable& dl, Time e_from, Time e_to)
    {
        const MmLinearBound b = mm_linear_bound(set_, dl, mode_);
        const Rational slope = 1 - b.u_m - b.exp_a;
        if (slope > 0)
            e_to = std::min(e_to, ceil_to_int((b.exp_b + b.exp_c - b.exp_a * e_from) / slope) - 1);
        if (e_to < e_from)
            return std::nullopt;

        Entry* entry = nullptr;
        if (auto it = entries_.find(e_from); it != entries_.end() && it->second.e_to == e_to) {
            entry = &it->second;
            refresh(*entry, dl, e_from);
        } else {
            const auto len = static_cast<std::size_t>(e_to - e_from + 1);
            if (stored_ + len > budget_)
                return mm_diagonal_failure(set_, dl, mode_, e_from, e_to);
            if (it != entries_.end()) {
                stored_ -= it->second.sums.size();
                entries_.erase(it);
            }
            stored_ += len;
            entry = &entries_[e_from];
            entry->e_to = e_to;
            entry->sums.assign(len, 0);
            for (std::size_t i = 0; i < set_.size(); ++i)
                if (set_[i].level >= mode_ - 1)
                    add_row(*entry, detail::MmTerms(set_[i], dl.row(i), mode_), e_from, 1);
        }
        entry->version = log_.size();

        for (std::size_t k = 0; k < entry->sums.size(); ++k) {
            const Time e = e_from + static_cast<Time>(k);
            if (entry->sums[k] > e)
                return MmFailure{e, e - e_from, entry->sums[k]};
        }
        return std::nullopt;
    }

private:
    struct Entry {
        Time e_to = 0;
        std::size_t version = 0;
        std::vector<std::int32_t> sums;  // demand per point; sums never exceed a few times e
    };
    struct Change {
        std::size_t task;
        detail::MmTerms before;
    };

    static void add_row(Entry& entry, const detail::MmTerms& t, Time e_from, Time sign)
    {
        for (std::size_t k = 0; k < entry.sums.size(); ++k) {
            const Time e = e_from + static_cast<Time>(k);
            entry.sums[k] += static_cast<std::int32_t>(sign * detail::PointDem(t, e - e_from, e).max());
        }
    }

    void refresh(Entry& entry, const DeadlineTable& dl, Time e_from)
    {
        std::vector<const Change*> first;
        for (std::size_t k = entry.version; k < log_.size(); ++k) {
            const auto& c = log_[k];
            bool seen = false;
            for (const Change* f : first)
                seen = seen || f->task == c.task;
            if (!seen)
                first.push_back(&c);
        }
        if (first.empty())
            return;
        if (2 * first.size() >= relevant_) {
            std::fill(entry.sums.begin(), entry.sums.end(), 0);
            for (std::size_t i = 0; i < set_.size(); ++i)
                if (set_[i].level >= mode_ - 1)
                    add_row(entry, detail::MmTerms(set_[i], dl.row(i), mode_), e_from, 1);
            return;
        }
        for (const Change* c : first) {
            add_row(entry, c->before, e_from, -1);
            add_row(entry, detail::MmTerms(set_[c->task], dl.row(c->task), mode_), e_from, 1);
        }
    }

    const TaskSet& set_;
    int mode_;
    std::size_t budget_;
    std::size_t relevant_ = 0;
    std::size_t stored_ = 0;
    std::vector<Change> log_;
    std::unordered_map<Time, Entry> entries_;
};

}  // namespace mcdbf
