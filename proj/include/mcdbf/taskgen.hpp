#pragma once

// Random mixed-criticality task sets. Tasks are drawn one at a time and
// appended until the set utilization U_tau lands in [ubound - epsilon,
// ubound]; overshooting discards the whole set and starts again.

#include "mcdbf/model.hpp"
#include "mcdbf/rational.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcdbf {

struct GenParams {
    std::vector<double> level_probs{1.0};  // P(1), P(2), ...
    std::vector<Rational> rc;              // rc[k] bounds C^{k+2} / C^{k+1}
    Rational rd = 0;
    Time c1_min = 1;
    Time c1_max = 10;
    Time t_max = 200;
    Rational epsilon = Rational(1, 200);
    Rational ubound = Rational(95, 100);
    std::size_t max_restarts = 10000;

    int max_level() const { return static_cast<int>(level_probs.size()); }

    /// RC for level m >= 2; 1 when not given.
    Rational rc_for(int m) const
    {
        const auto k = static_cast<std::size_t>(m - 2);
        return k < rc.size() ? rc[k] : Rational(1);
    }

    std::string violation() const
    {
        if (level_probs.empty())
            return "level_probs is empty";
        double sum = 0;
        for (double p : level_probs) {
            if (p < 0)
                return "negative level probability";
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            return "level probabilities sum to " + std::to_string(sum);
        for (const auto& r : rc)
            if (r < 1)
                return "RC must be >= 1";
        if (rd < 0 || rd > 1)
            return "RD must lie in [0, 1]";
        if (c1_min < 1 || c1_max < c1_min)
            return "bad C^1 range";
        if (t_max < 1)
            return "t_max must be positive";
        if (epsilon < 0)
            return "epsilon must be >= 0";
        if (ubound <= 0 || ubound > 1)
            return "ubound must lie in (0, 1]";
        return {};
    }
};

inline McTask gen_task(const GenParams& p, std::mt19937_64& rng)
{
    std::discrete_distribution<int> level_dist(p.level_probs.begin(), p.level_probs.end());
    McTask t;
    t.level = level_dist(rng) + 1;
    t.wcet.push_back(std::uniform_int_distribution<Time>(p.c1_min, p.c1_max)(rng));
    for (int m = 2; m <= t.level; ++m) {
        const Time prev = t.wcet.back();
        const Time hi = floor_to_int(p.rc_for(m) * prev);
        t.wcet.push_back(std::uniform_int_distribution<Time>(prev, std::max(prev, hi))(rng));
    }
    const Time cl = t.wcet.back();
    t.period = std::uniform_int_distribution<Time>(cl, std::max(cl, p.t_max))(rng);
    const Time d_min = floor_to_int(Rational(cl) + p.rd * (t.period - cl));
    t.deadline = std::uniform_int_distribution<Time>(d_min, t.period)(rng);
    return t;
}

/// Throws std::runtime_error when max_restarts attempts all overshoot.
inline TaskSet gen_taskset(const GenParams& p, std::mt19937_64& rng)
{
    if (auto v = p.violation(); !v.empty())
        throw std::invalid_argument(v);
    const Rational lower = p.ubound - p.epsilon;
    for (std::size_t attempt = 0; attempt < p.max_restarts; ++attempt) {
        std::vector<McTask> tasks;
        std::vector<Rational> per_mode(static_cast<std::size_t>(p.max_level()), Rational(0));
        for (;;) {
            McTask t = gen_task(p, rng);
            for (int m = 1; m <= t.level; ++m)
                per_mode[static_cast<std::size_t>(m - 1)] += Rational(t.budget(m), t.period);
            tasks.push_back(std::move(t));
            const Rational u = *std::max_element(per_mode.begin(), per_mode.end());
            if (u > p.ubound)
                break;
            if (u >= lower)
                return TaskSet(std::move(tasks));
        }
    }
    throw std::runtime_error("task-set generation gave up after " + std::to_string(p.max_restarts) + " restarts");
}

inline TaskSet gen_taskset(const GenParams& p, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return gen_taskset(p, rng);
}

}  // namespace mcdbf
