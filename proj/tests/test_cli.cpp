#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const std::string kData = MCDBF_DATA_DIR;

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args)
{
    args.insert(args.begin(), "mcdbf");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = mcdbf::cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("mcdbf-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& text) const
    {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    static std::vector<std::string> lines(const std::string& file)
    {
        std::ifstream in(file);
        std::vector<std::string> out;
        for (std::string l; std::getline(in, l);)
            out.push_back(l);
        return out;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, AnalyzeExample41UnderGtIsUnschedulable)
{
    const CliRun r = run({"analyze", kData + "/ex41.tasks", "--method", "gt", "--trace", path("trace.csv")});
    EXPECT_EQ(r.code, 1) << r.out << r.err;
    EXPECT_NE(r.out.find("unschedulable"), std::string::npos);
    EXPECT_EQ(lines(path("trace.csv")).at(0), "action,task,mode,e,old_deadline,new_deadline");
}

TEST_F(CliTest, AnalyzeLightSetIsSchedulable)
{
    const CliRun r = run({"analyze", kData + "/light.tasks", "--deadlines-out", path("dl.csv")});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_EQ(lines(path("dl.csv")), (std::vector<std::string>{"task,mode,deadline", "0,1,10"}));
}

TEST_F(CliTest, DbfCurveHasOneRowPerLength)
{
    const CliRun r = run({"dbf", kData + "/ex41.tasks", "--mode", "2", "--kind", "sm", "--emax", "50", "--out",
                       path("curve.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(path("curve.csv"));
    ASSERT_EQ(ls.size(), 51u);
    EXPECT_EQ(ls[0], "e,demand");
    EXPECT_EQ(ls[4], "4,9");
}

TEST_F(CliTest, DbfIsmAndMm)
{
    ASSERT_EQ(run({"dbf", kData + "/ex41.tasks", "--mode", "2", "--kind", "ism", "--emax", "10", "--out",
                   path("ism.csv")})
                  .code,
              0);
    EXPECT_EQ(lines(path("ism.csv")).size(), 11u);

    ASSERT_EQ(run({"dbf", kData + "/ex41.tasks", "--mode", "2", "--kind", "mm", "--emax", "4", "--out",
                   path("mm.csv")})
                  .code,
              0);
    const auto grid = lines(path("mm.csv"));
    EXPECT_EQ(grid[0], "e,s_m,demand");
    EXPECT_EQ(grid.size(), 1u + 2 + 3 + 4 + 5);

    ASSERT_EQ(run({"dbf", kData + "/ex41.tasks", "--mode", "2", "--kind", "mm", "--sm", "3", "--emax", "10",
                   "--out", path("diag.csv")})
                  .code,
              0);
    EXPECT_EQ(lines(path("diag.csv")).size(), 1u + 8);
}

TEST_F(CliTest, UsageAndInputErrorsExitTwo)
{
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"analyze"}).code, 2);
    EXPECT_EQ(run({"analyze", path("missing.tasks")}).code, 2);
    EXPECT_EQ(run({"analyze", kData + "/light.tasks", "--method", "edf"}).code, 2);
    EXPECT_EQ(run({"analyze", write("bad.tasks", "task 10 10 2 4 2\n")}).code, 2);
    EXPECT_EQ(run({"dbf", kData + "/ex41.tasks", "--mode", "3", "--emax", "5", "--out", path("x.csv")}).code, 2);
    EXPECT_EQ(run({"dbf", kData + "/ex41.tasks", "--mode", "2", "--kind", "xx", "--emax", "5", "--out",
                   path("x.csv")})
                  .code,
              2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, GenWritesSetsAndManifest)
{
    const std::string cfg = write("gen.cfg", "level_probs = 0.5, 0.5\nrc = 2\nrd = 0.5\nubound = 0.6, 0.8\n");
    const CliRun r = run({"gen", "--config", cfg, "--count", "3", "--seed", "40", "--outdir", path("sets")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto manifest = lines(path("sets/manifest.csv"));
    ASSERT_EQ(manifest.size(), 7u);
    EXPECT_EQ(manifest[0], "file,seed,ubound,utilization,tasks");
    EXPECT_EQ(manifest[1].substr(0, 19), "set_00000.tasks,40,");
    std::ifstream in(path("sets/set_00005.tasks"));
    const mcdbf::TaskSet set = mcdbf::parse_taskset(in);
    mcdbf::GenParams p;
    p.level_probs = {0.5, 0.5};
    p.rc = {mcdbf::Rational(2)};
    p.rd = mcdbf::Rational(1, 2);
    p.ubound = mcdbf::Rational(4, 5);
    EXPECT_EQ(set, mcdbf::gen_taskset(p, 45));
}

TEST_F(CliTest, ExpWritesTheAcceptanceTable)
{
    const std::string cfg = write("exp.cfg",
                                  "level_probs = 0.25, 0.75\nrc = 3\nrd = 0.5\nt_max = 40\nubound = 0.6, 0.9\n"
                                  "sets_per_point = 3\nmethods = gt, impt\n");
    const CliRun r = run({"exp", "--config", cfg, "--out", path("acc.csv"), "--workers", "2", "--falsify", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("IMPT weighted acceptance"), std::string::npos);
    const auto ls = lines(path("acc.csv"));
    ASSERT_EQ(ls.size(), 5u);
    EXPECT_EQ(ls[0], "ubound,method,accepted,total,ratio");
    EXPECT_EQ(ls[1].substr(0, 7), "0.6,GT,");
}

TEST_F(CliTest, SimReportsMissesAndCleanRuns)
{
    CliRun ok = run({"sim", kData + "/light.tasks", "--scenarios", "10", "--seed", "3", "--trace", path("t.csv")});
    EXPECT_EQ(ok.code, 0) << ok.err;
    EXPECT_EQ(lines(path("t.csv")).at(0), "time,task,mode,event");

    const std::string over = write("over.tasks", "task 4 4 1 3\ntask 4 4 1 2\n");
    CliRun bad = run({"sim", over, "--scenarios", "50", "--seed", "3", "--horizon", "40"});
    EXPECT_EQ(bad.code, 1) << bad.out << bad.err;
    EXPECT_NE(bad.out.find("deadline miss"), std::string::npos);
}

TEST_F(CliTest, SimUsesTunedDeadlines)
{
    ASSERT_EQ(run({"analyze", kData + "/light.tasks", "--deadlines-out", path("dl.csv")}).code, 0);
    EXPECT_EQ(run({"sim", kData + "/light.tasks", "--deadlines", path("dl.csv"), "--scenarios", "5"}).code, 0);
    EXPECT_EQ(run({"sim", kData + "/light.tasks", "--deadlines", write("bad.csv", "0,1,1\n"), "--scenarios", "5"})
                  .code,
              2);
}
