#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace mcdbf;

namespace {

const McTask kTask{10, 8, 2, {2, 4}};

TaskDeadlines row(const std::vector<Time>& v) { return TaskDeadlines(v); }

/// Algorithm-3 order written as a sort: ascending by delta * D^{m-1}, then
/// descending by max(0, len), then descending by index; the last one wins.
std::size_t sorted_pick(const TaskSet& set, std::vector<std::size_t> psi, const DeadlineTable& dl, Time e, int m)
{
    auto key = [&](std::size_t i) {
        const TaskDeadlines r = dl.row(i);
        return std::tuple{delta(set[i], r, e, m) * r.at(m - 1), -std::max<Time>(0, len_metric(set[i], r, e, m)),
                          -static_cast<long>(i)};
    };
    std::sort(psi.begin(), psi.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    return psi.back();
}

TaskSet small_set(std::mt19937_64& rng, double u, int levels)
{
    GenParams p;
    p.level_probs.assign(static_cast<std::size_t>(levels), 1.0 / levels);
    p.rc.assign(static_cast<std::size_t>(levels - 1), Rational(2));
    p.rd = Rational(1, 2);
    p.t_max = 30;
    p.c1_max = 4;
    p.epsilon = Rational(5, 100);
    p.ubound = parse_rational(std::to_string(u));
    return gen_taskset(p, rng);
}

}  // namespace

TEST(Methods, NamesRoundTrip)
{
    for (Method m : {Method::GT, Method::GTI, Method::IMPT})
        EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_EQ(parse_method("Impt"), Method::IMPT);
    EXPECT_THROW(parse_method("edf"), std::invalid_argument);
    EXPECT_EQ(to_string(Reason::CandidatesExhausted), "candidates-exhausted");
    EXPECT_EQ(to_string(ActionKind::UndoRemove), "undo-remove");
}

TEST(Delta, Values)
{
    const std::vector<Time> dl{6, 8};
    EXPECT_EQ(delta(kTask, row(dl), 13, 2), 1);
    EXPECT_EQ(delta(kTask, row(dl), 12, 2), 2);
    EXPECT_EQ(delta(kTask, row(dl), 1, 2), dbf_sm_task(kTask, row(dl), 1, 2));
}

TEST(Delta, TelescopesToTheDbf)
{
    std::mt19937_64 rng(41);
    for (int k = 0; k < 200; ++k) {
        const TaskSet set = oracle::random_taskset(rng, 1, 25, 3);
        const DeadlineTable dl = oracle::random_deadlines(rng, set);
        for (int m = 1; m <= set[0].level; ++m) {
            Time sum = 0;
            for (Time e = 1; e <= 80; ++e) {
                const Time d = delta(set[0], dl.row(0), e, m);
                ASSERT_GE(d, 0);
                sum += d;
                ASSERT_EQ(sum, dbf_sm_task(set[0], dl.row(0), e, m));
            }
        }
    }
}

TEST(LenMetric, Values)
{
    const std::vector<Time> dl{6, 8};
    EXPECT_EQ(len_metric(kTask, row(dl), 13, 2), -1);
    const std::vector<Time> flat{8, 8};
    EXPECT_EQ(len_metric(kTask, row(flat), 22, 2), 0);
    EXPECT_LE(len_metric(kTask, row(dl), 20, 2), 0);
}

TEST(FindCandidate, SmallerLenWinsOnEqualKey)
{
    TaskSet set({kTask, kTask});
    DeadlineTable dl = DeadlineTable::initial(set);
    dl.set(0, 1, 8);
    dl.set(1, 1, 6);
    EXPECT_EQ(delta(set[0], dl.row(0), 15, 2), 0);
    EXPECT_EQ(delta(set[1], dl.row(1), 15, 2), 0);
    EXPECT_EQ(len_metric(set[0], dl.row(0), 15, 2), 3);
    EXPECT_EQ(len_metric(set[1], dl.row(1), 15, 2), 1);
    EXPECT_EQ(find_candidate(set, {0, 1}, dl, 15, 2), 1u);
    EXPECT_EQ(find_candidate(set, {0, 1}, dl, 15, 2, CandidateMetric::Delta), 0u);
    EXPECT_THROW(find_candidate(set, {}, dl, 15, 2), std::invalid_argument);
}

TEST(FindCandidate, MatchesSortedOrder)
{
    std::mt19937_64 rng(42);
    for (int k = 0; k < 500; ++k) {
        const TaskSet set = oracle::random_taskset(rng, 2 + k % 5, 20, 2);
        if (set.max_level() < 2)
            continue;
        const DeadlineTable dl = oracle::random_deadlines(rng, set);
        std::vector<std::size_t> psi;
        for (std::size_t i = 0; i < set.size(); ++i)
            if (set[i].level >= 2)
                psi.push_back(i);
        for (Time e = 1; e <= 40; ++e) {
            ASSERT_EQ(find_candidate(set, psi, dl, e, 2), sorted_pick(set, psi, dl, e, 2));
            const std::size_t gt = find_candidate(set, psi, dl, e, 2, CandidateMetric::Delta);
            for (std::size_t i : psi) {
                const Time di = delta(set[i], dl.row(i), e, 2), dg = delta(set[gt], dl.row(gt), e, 2);
                ASSERT_TRUE(di < dg || (di == dg && i >= gt));
            }
        }
    }
}

TEST(TuneMode, AlreadySchedulableLeavesTableAlone)
{
    TaskSet set({McTask{10, 10, 2, {1, 1}}, McTask{20, 20, 1, {3}}});
    DeadlineTable dl = DeadlineTable::initial(set);
    std::vector<TuneAction> trace;
    for (Method m : {Method::GT, Method::GTI, Method::IMPT}) {
        auto r = tune_mode(set, dl, 2, {m, std::nullopt}, trace);
        EXPECT_TRUE(r.ok);
    }
    EXPECT_TRUE(trace.empty());
    EXPECT_EQ(dl, DeadlineTable::initial(set));
    EXPECT_THROW(tune_mode(set, dl, 1, {}, trace), std::invalid_argument);
}

TEST(TuneMode, Example41FailsWithoutTheMultiModeFallback)
{
    const TaskSet set = oracle::example41();
    for (Method m : {Method::GT, Method::GTI}) {
        DeadlineTable dl = DeadlineTable::initial(set);
        std::vector<TuneAction> trace;
        EXPECT_FALSE(tune_mode(set, dl, 2, {m, std::nullopt}, trace).ok) << to_string(m);
    }
}

TEST(TuneMode, OverloadFailsUnderEveryMethod)
{
    TaskSet set({McTask{4, 4, 2, {3, 3}}, McTask{4, 4, 1, {2}}});
    for (Method m : {Method::GT, Method::GTI, Method::IMPT}) {
        DeadlineTable dl = DeadlineTable::initial(set);
        std::vector<TuneAction> trace;
        EXPECT_FALSE(tune_mode(set, dl, 2, {m, std::nullopt}, trace).ok) << to_string(m);
        EXPECT_FALSE(tune_system(set, {m, std::nullopt}).schedulable) << to_string(m);
    }
}

TEST(TuneSystem, LightSetNeedsNoTuning)
{
    TaskSet set({McTask{10, 10, 1, {2}}});
    for (Method m : {Method::GT, Method::GTI, Method::IMPT}) {
        Verdict v = tune_system(set, {m, std::nullopt});
        EXPECT_TRUE(v.schedulable);
        EXPECT_EQ(v.reason, Reason::Schedulable);
        EXPECT_TRUE(v.trace.empty());
        EXPECT_FALSE(v.witness.has_value());
    }
}

TEST(TuneSystem, Example41UnderGt)
{
    Verdict v = tune_system(oracle::example41(), {Method::GT, std::nullopt});
    EXPECT_FALSE(v.schedulable);
    EXPECT_NE(v.reason, Reason::Schedulable);
    ASSERT_TRUE(v.witness.has_value());
}

TEST(TuneSystem, Example41UnderImptSurvivesSimulation)
{
    const TaskSet set = oracle::example41();
    Verdict v = tune_system(set, {Method::IMPT, std::nullopt});
    std::cout << "IMPT verdict on the two-task example: " << (v.schedulable ? "schedulable" : to_string(v.reason))
              << '\n';
    if (v.schedulable) {
        EXPECT_FALSE(verify(set, v.deadlines, Method::IMPT, std::nullopt).has_value());
        EXPECT_FALSE(falsify(set, v.deadlines, 400, 7, 300).has_value());
    }
}

TEST(TuneSystem, UnboundedIntervalIsReported)
{
    TaskSet set({McTask{4, 4, 2, {1, 2}}, McTask{2, 2, 2, {1, 1}}});
    Verdict v = tune_system(set, {Method::IMPT, std::nullopt});
    EXPECT_FALSE(v.schedulable);
    EXPECT_EQ(v.reason, Reason::UnboundedInterval);
}

TEST(TuneSystem, TraceCsv)
{
    Verdict v = tune_system(oracle::example41(), {Method::GT, std::nullopt});
    std::ostringstream out;
    write_trace_csv(out, v.trace);
    const std::string s = out.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "action,task,mode,e,old_deadline,new_deadline");
    EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), v.trace.size() + 1);
}

TEST(TunerProperty, TraceReplaysToTheFinalTable)
{
    std::mt19937_64 rng(43);
    int actions = 0;
    for (int k = 0; k < 40; ++k) {
        const TaskSet set = small_set(rng, 0.75 + 0.05 * (k % 4), 2 + k % 2);
        for (Method method : {Method::GT, Method::GTI, Method::IMPT}) {
            const Verdict v = tune_system(set, {method, std::nullopt});
            DeadlineTable dl = DeadlineTable::initial(set);
            for (const auto& a : v.trace) {
                ++actions;
                const int dm = a.kind == ActionKind::Clamp ? a.mode
                               : a.kind == ActionKind::Undo || a.kind == ActionKind::UndoRemove ? 1
                                                                                               : a.mode - 1;
                ASSERT_EQ(dl.at(a.task, dm), a.old_deadline);
                switch (a.kind) {
                case ActionKind::Decrement: ASSERT_EQ(a.new_deadline, a.old_deadline - 1); break;
                case ActionKind::Undo: ASSERT_EQ(a.new_deadline, a.old_deadline + 1); break;
                case ActionKind::Clamp: ASSERT_LT(a.new_deadline, a.old_deadline); break;
                default: ASSERT_EQ(a.new_deadline, a.old_deadline); break;
                }
                dl.set(a.task, dm, a.new_deadline);
                ASSERT_GE(dl.at(a.task, dm), set[a.task].budget(dm));
            }
            ASSERT_EQ(dl, v.deadlines);
            ASSERT_EQ(dl.violation(set), "");
        }
    }
    EXPECT_GT(actions, 0);
}

TEST(TunerProperty, Deterministic)
{
    std::mt19937_64 rng(44);
    for (int k = 0; k < 15; ++k) {
        const TaskSet set = small_set(rng, 0.85, 2 + k % 2);
        for (Method method : {Method::GT, Method::IMPT}) {
            const Verdict a = tune_system(set, {method, std::nullopt});
            const Verdict b = tune_system(set, {method, std::nullopt});
            ASSERT_EQ(a.schedulable, b.schedulable);
            ASSERT_EQ(a.reason, b.reason);
            ASSERT_EQ(a.deadlines, b.deadlines);
            ASSERT_EQ(a.trace, b.trace);
            ASSERT_EQ(a.witness, b.witness);
        }
    }
}

TEST(TunerProperty, FallbackOnlyWidensTheModeCheck)
{
    std::mt19937_64 rng(45);
    for (int k = 0; k < 100; ++k) {
        const TaskSet set = oracle::random_taskset(rng, 2 + k % 3, 20, 3);
        if (set.max_level() < 2)
            continue;
        const DeadlineTable dl = oracle::random_deadlines(rng, set);
        for (int m = 2; m <= set.max_level(); ++m)
            for (Time e = 1; e <= 60; ++e) {
                const bool sm_ok = dbf_sm_set(set, dl, e, m) <= e;
                const auto gt = detail::mode_failure_at(set, dl, m, e, 120, Method::GT);
                const auto impt = detail::mode_failure_at(set, dl, m, e, 120, Method::IMPT);
                ASSERT_EQ(gt.has_value(), !sm_ok);
                if (sm_ok) {
                    ASSERT_FALSE(impt.has_value());
                }
            }
    }
}

TEST(TunerProperty, AcceptedSetsVerifyAndSurviveSimulation)
{
    std::mt19937_64 rng(46);
    int accepted = 0;
    for (int k = 0; k < 30; ++k) {
        const TaskSet set = small_set(rng, 0.7 + 0.05 * (k % 5), 2 + k % 2);
        Time tmax = 0;
        for (const auto& t : set)
            tmax = std::max(tmax, t.period);
        for (Method method : {Method::GT, Method::GTI, Method::IMPT}) {
            const Verdict v = tune_system(set, {method, std::nullopt});
            if (!v.schedulable)
                continue;
            ++accepted;
            ASSERT_FALSE(verify(set, v.deadlines, method, std::nullopt).has_value());
            auto cex = falsify(set, v.deadlines, 40, 1000 + static_cast<std::uint64_t>(k), 10 * tmax);
            ASSERT_FALSE(cex.has_value()) << serialize_taskset(set) << to_string(method);
        }
    }
    EXPECT_GT(accepted, 0);
}
