#pragma once

// Task model for mixed-criticality sporadic systems on a unit-speed
// uniprocessor, plus the plain-text task-set format:
//
//   # comment
//   task <T> <D> <L> <C1> ... <CL>
//
// All time quantities are integers. Modes are 1-indexed; the value at mode 0
// is defined as 0 for both budgets and virtual deadlines.

#include "mcdbf/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcdbf {

using Time = std::int64_t;

/// Thrown for malformed task-set or deadline files. what() carries the line.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line)
    {
    }
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct McTask {
    Time period = 0;
    Time deadline = 0;
    int level = 0;
    std::vector<Time> wcet;  // wcet[m - 1] is the level-m budget

    /// C^m, with C^0 = 0.
    Time budget(int mode) const { return mode <= 0 ? 0 : wcet[static_cast<std::size_t>(mode - 1)]; }

    /// Empty string when the task is well formed, otherwise the first violation.
    std::string violation() const
    {
        if (period <= 0)
            return "period must be positive";
        if (deadline <= 0)
            return "deadline must be positive";
        if (level <= 0)
            return "level must be positive";
        if (wcet.size() != static_cast<std::size_t>(level))
            return "expected " + std::to_string(level) + " WCET values, got " + std::to_string(wcet.size());
        for (std::size_t m = 0; m < wcet.size(); ++m) {
            if (wcet[m] <= 0)
                return "C[" + std::to_string(m + 1) + "] must be positive";
            if (m > 0 && wcet[m] < wcet[m - 1])
                return "C[" + std::to_string(m + 1) + "]=" + std::to_string(wcet[m]) + " < C[" + std::to_string(m) +
                       "]=" + std::to_string(wcet[m - 1]);
        }
        if (wcet.back() > deadline)
            return "C[" + std::to_string(level) + "]=" + std::to_string(wcet.back()) + " > D=" + std::to_string(deadline);
        if (deadline > period)
            return "D=" + std::to_string(deadline) + " > T=" + std::to_string(period);
        return {};
    }

    bool operator==(const McTask&) const = default;
};

class TaskSet {
public:
    TaskSet() = default;

    explicit TaskSet(std::vector<McTask> tasks) : tasks_(std::move(tasks))
    {
        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            if (auto v = tasks_[i].violation(); !v.empty())
                throw std::invalid_argument("task " + std::to_string(i) + ": " + v);
            max_level_ = std::max(max_level_, tasks_[i].level);
        }
    }

    const std::vector<McTask>& tasks() const { return tasks_; }
    const McTask& operator[](std::size_t i) const { return tasks_[i]; }
    std::size_t size() const { return tasks_.size(); }
    bool empty() const { return tasks_.empty(); }
    auto begin() const { return tasks_.begin(); }
    auto end() const { return tasks_.end(); }

    /// M, the highest criticality level present (0 for an empty set).
    int max_level() const { return max_level_; }

    bool operator==(const TaskSet&) const = default;

private:
    std::vector<McTask> tasks_;
    int max_level_ = 0;
};

/// Virtual deadlines of one task, D^1..D^L, with D^0 = 0.
class TaskDeadlines {
public:
    explicit TaskDeadlines(std::span<const Time> d) : d_(d) {}

    Time at(int mode) const { return mode <= 0 ? 0 : d_[static_cast<std::size_t>(mode - 1)]; }
    int levels() const { return static_cast<int>(d_.size()); }

private:
    std::span<const Time> d_;
};

/// Per-task, per-mode virtual deadlines D_i^m. This is the state mutated by
/// deadline tuning.
class DeadlineTable {
public:
    DeadlineTable() = default;

    /// D_i^m = D_i for every task and every mode m <= L_i.
    static DeadlineTable initial(const TaskSet& set)
    {
        DeadlineTable t;
        t.rows_.reserve(set.size());
        for (const auto& task : set)
            t.rows_.emplace_back(static_cast<std::size_t>(task.level), task.deadline);
        return t;
    }

    Time at(std::size_t task, int mode) const { return row(task).at(mode); }

    void set(std::size_t task, int mode, Time value)
    {
        rows_.at(task).at(static_cast<std::size_t>(mode - 1)) = value;
    }

    TaskDeadlines row(std::size_t task) const { return TaskDeadlines(rows_.at(task)); }

    std::size_t size() const { return rows_.size(); }

    /// Empty string when C^m <= D^m <= D, D^m <= D^{m+1} and D^L = D hold for
    /// every task of `set`; otherwise a description of the first violation.
    std::string violation(const TaskSet& set) const
    {
        if (rows_.size() != set.size())
            return "table has " + std::to_string(rows_.size()) + " rows for " + std::to_string(set.size()) + " tasks";
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto& task = set[i];
            const auto& row = rows_[i];
            if (row.size() != static_cast<std::size_t>(task.level))
                return "task " + std::to_string(i) + ": wrong number of modes";
            for (int m = 1; m <= task.level; ++m) {
                Time d = row[static_cast<std::size_t>(m - 1)];
                std::string where = "task " + std::to_string(i) + " mode " + std::to_string(m) + ": ";
                if (d < task.budget(m))
                    return where + "D^m < C^m";
                if (d > task.deadline)
                    return where + "D^m > D";
                if (m < task.level && d > row[static_cast<std::size_t>(m)])
                    return where + "D^m > D^{m+1}";
            }
            if (row.back() != task.deadline)
                return "task " + std::to_string(i) + ": D^L differs from D";
        }
        return {};
    }

    bool operator==(const DeadlineTable&) const = default;

private:
    std::vector<std::vector<Time>> rows_;
};

// ---------------------------------------------------------------------------
// Utilization

/// Sum over tasks with L_i >= m of C_i^m / T_i.
inline Rational utilization(const TaskSet& set, int mode)
{
    Rational u = 0;
    for (const auto& t : set)
        if (t.level >= mode)
            u += Rational(t.budget(mode), t.period);
    return u;
}

/// U_tau: max over m in 1..M of utilization(set, m). Zero for an empty set.
inline Rational utilization_bound(const TaskSet& set)
{
    Rational best = 0;
    for (int m = 1; m <= set.max_level(); ++m)
        best = std::max(best, utilization(set, m));
    return best;
}

// ---------------------------------------------------------------------------
// Task-set text format

inline TaskSet parse_taskset(std::istream& in)
{
    std::vector<McTask> tasks;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#')
            continue;

        std::istringstream fields(line);
        std::string keyword;
        fields >> keyword;
        if (keyword != "task")
            throw ParseError(lineno, "expected 'task', got '" + keyword + "'");

        std::vector<Time> values;
        std::string tok;
        while (fields >> tok) {
            std::size_t used = 0;
            long long v = 0;
            try {
                v = std::stoll(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size())
                throw ParseError(lineno, "non-integer field '" + tok + "'");
            values.push_back(v);
        }
        if (values.size() < 4)
            throw ParseError(lineno, "expected 'task T D L C1 ... CL'");

        McTask t;
        t.period = values[0];
        t.deadline = values[1];
        if (values[2] <= 0)
            throw ParseError(lineno, "level must be positive");
        t.level = static_cast<int>(values[2]);
        t.wcet.assign(values.begin() + 3, values.end());
        if (auto v = t.violation(); !v.empty())
            throw ParseError(lineno, v);
        tasks.push_back(std::move(t));
    }
    if (tasks.empty())
        throw ParseError(lineno, "no tasks");
    return TaskSet(std::move(tasks));
}

inline TaskSet parse_taskset(const std::string& text)
{
    std::istringstream in(text);
    return parse_taskset(in);
}

inline void write_taskset(std::ostream& out, const TaskSet& set)
{
    for (const auto& t : set) {
        out << "task " << t.period << ' ' << t.deadline << ' ' << t.level;
        for (Time c : t.wcet)
            out << ' ' << c;
        out << '\n';
    }
}

inline std::string serialize_taskset(const TaskSet& set)
{
    std::ostringstream out;
    write_taskset(out, set);
    return out.str();
}

// ---------------------------------------------------------------------------
// Deadline-table CSV: header "task,mode,deadline", one row per (task, mode).

inline void write_deadlines_csv(std::ostream& out, const TaskSet& set, const DeadlineTable& dl)
{
    out << "task,mode,deadline\n";
    for (std::size_t i = 0; i < set.size(); ++i)
        for (int m = 1; m <= set[i].level; ++m)
            out << i << ',' << m << ',' << dl.at(i, m) << '\n';
}

/// Starts from the initial table and overrides every listed entry; the result
/// must satisfy the table invariants.
inline DeadlineTable parse_deadlines_csv(std::istream& in, const TaskSet& set)
{
    DeadlineTable dl = DeadlineTable::initial(set);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#' || (lineno == 1 && line.rfind("task", 0) == 0))
            continue;
        std::istringstream row(line);
        long long task = 0, mode = 0, value = 0;
        char c1 = 0, c2 = 0;
        if (!(row >> task >> c1 >> mode >> c2 >> value) || c1 != ',' || c2 != ',')
            throw ParseError(lineno, "expected 'task,mode,deadline'");
        if (task < 0 || static_cast<std::size_t>(task) >= set.size())
            throw ParseError(lineno, "task index out of range");
        if (mode < 1 || mode > set[static_cast<std::size_t>(task)].level)
            throw ParseError(lineno, "mode out of range");
        dl.set(static_cast<std::size_t>(task), static_cast<int>(mode), value);
    }
    if (auto v = dl.violation(set); !v.empty())
        throw ParseError(lineno, v);
    return dl;
}

}  // namespace mcdbf
