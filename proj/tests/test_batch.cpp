#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include <dssmor/commands.hpp>

#include "support.hpp"

using namespace dssmor;
namespace fs = std::filesystem;

namespace
{

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("dssmor_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string write_bank_file(const fs::path& dir, std::size_t count,
                            Eigen::Index n, std::uint64_t seed)
{
    const std::string path = (dir / "bank.json").string();
    write_bank(path, synthetic_bank(count, n, seed));
    return path;
}

/// Runs the installed CLI when the test harness provides its path.
int run_cli(const std::string& args)
{
    const char* cli = std::getenv("DSSMOR_CLI");
    if (!cli)
    {
        return -1;
    }
    const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(HorizonSpec, Resolution)
{
    EXPECT_TRUE(HorizonSpec::parse("inf").resolve(2048, 0.01).is_infinite());
    EXPECT_EQ(HorizonSpec::parse("L*delta").resolve(2048, 0.01).tau(), 20.48);
    EXPECT_EQ(HorizonSpec::parse("Ldt").resolve(2048, 0.01).tau(), 20.48);
    EXPECT_EQ(HorizonSpec::parse("L").resolve(2048, 0.01).tau(), 2048.0);
    EXPECT_EQ(HorizonSpec::parse("10L").resolve(2048, 0.01).tau(), 20480.0);
    EXPECT_EQ(HorizonSpec::parse("3.5").resolve(2048, 0.01).tau(), 3.5);
    EXPECT_THROW(HorizonSpec::parse("-1"), Error);
    EXPECT_THROW(HorizonSpec::parse("0"), Error);
    EXPECT_THROW(HorizonSpec::parse("5s"), Error);
    EXPECT_THROW(HorizonSpec::parse(""), Error);
}

TEST(Methods, HorizonRules)
{
    EXPECT_EQ(parse_method("fh2"), Method::fh2);
    EXPECT_THROW(parse_method("irka"), Error);
    const HorizonSpec l = HorizonSpec::parse("L");
    EXPECT_EQ(method_horizon(Method::ih2, l).kind, HorizonSpec::Kind::infinite);
    EXPECT_EQ(method_horizon(Method::fbt, l).kind, HorizonSpec::Kind::l);
    EXPECT_THROW(method_horizon(Method::fh2, HorizonSpec::parse("inf")), Error);
}

TEST(ParallelFor, VisitsEveryIndexOnce)
{
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (const int h : hits)
    {
        EXPECT_EQ(h, 1);
    }
}

TEST(ReduceBank, SingleModelFullOrderIsStationary)
{
    ModelBank bank;
    bank.models.push_back(random_stable_model(4, 3, 0.01));
    BatchJob job;
    job.r = 4;
    job.method = Method::ih2;
    const auto rows = reduce_bank(bank, job);
    ASSERT_EQ(rows.size(), 1u);
    const ModelOutcome& o = rows[0];
    EXPECT_EQ(o.status, "ok");
    EXPECT_EQ(o.provenance, Provenance::ibt);
    const double norm =
        h2_norm_sq(exp_params_to_model(bank.models[0]), Horizon::infinite());
    EXPECT_NEAR(o.f_init, -norm, 1e-9 * norm);
    EXPECT_NEAR(o.f_final, -norm, 1e-9 * norm);
    EXPECT_LE(o.iterations, 1);
}

TEST(ReduceBank, MonotoneRowsAndCurve)
{
    const ModelBank bank = synthetic_bank(12, 32, 5);
    BatchJob job;
    job.r = 2;
    job.method = Method::fh2;
    job.horizon = HorizonSpec::parse("Ldt");
    const auto rows = reduce_bank(bank, job);
    for (const ModelOutcome& o : rows)
    {
        EXPECT_EQ(o.status, "ok");
        EXPECT_LE(o.f_final, o.f_init);
        EXPECT_LE(o.err_after, o.err_before + 1e-12 * (1.0 + o.err_before));
    }
    std::istringstream curve(convergence_csv(rows));
    std::string line;
    std::getline(curve, line);
    EXPECT_EQ(line, "k,mean_f,std_f,count");
    double prev = std::numeric_limits<double>::infinity();
    while (std::getline(curve, line))
    {
        std::istringstream ss(line);
        std::string k, mean;
        std::getline(ss, k, ',');
        std::getline(ss, mean, ',');
        const double m = std::stod(mean);
        EXPECT_LE(m, prev);
        prev = m;
    }
}

TEST(ReduceBank, WorkerCountDoesNotChangeResults)
{
    const ModelBank bank = synthetic_bank(6, 16, 9);
    BatchJob job;
    job.r = 3;
    job.workers = 1;
    const std::string one = reduce_report_csv(reduce_bank(bank, job));
    job.workers = 8;
    EXPECT_EQ(reduce_report_csv(reduce_bank(bank, job)), one);
}

TEST(CompareBank, BalancedTruncationRowsAreNotOptimized)
{
    const ModelBank bank = synthetic_bank(4, 16, 2);
    BatchJob base;
    const auto rows = compare_bank(bank, 2, {HorizonSpec::parse("Ldt")},
                                   {Method::ibt, Method::ih2}, base);
    ASSERT_EQ(rows.size(), 8u);
    for (std::size_t i = 0; i < rows.size(); i += 2)
    {
        const CompareRow& bt = rows[i];
        const CompareRow& h2 = rows[i + 1];
        EXPECT_EQ(bt.method, Method::ibt);
        EXPECT_EQ(h2.method, Method::ih2);
        EXPECT_EQ(bt.outcome.err_after, bt.outcome.err_before);
        EXPECT_EQ(bt.outcome.iterations, 0);
        EXPECT_EQ(h2.outcome.err_before, bt.outcome.err_before);
        EXPECT_LE(h2.outcome.err_after,
                  bt.outcome.err_after * (1.0 + 1e-12) + 1e-15);
        EXPECT_EQ(bt.horizon, "inf");
    }
    const std::string csv = compare_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "model,method,horizon,tau,provenance,bt_stable,status,err_before,"
              "err_after,hankel_tail,iterations,termination");
}

TEST(CompareBank, ShortHorizonBalancedTruncationFallsBack)
{
    ModelBank bank;
    for (std::uint64_t i = 0; i < 16; ++i)
    {
        bank.models.push_back(random_stable_model(64, derive_seed(17, i), 1e-4));
    }
    BatchJob base;
    const auto rows = compare_bank(bank, 4, {HorizonSpec::parse("Ldt")},
                                   {Method::fbt}, base);
    std::size_t flagged = 0;
    for (const CompareRow& row : rows)
    {
        if (row.outcome.provenance == Provenance::random)
        {
            ++flagged;
        }
    }
    EXPECT_GE(flagged, 1u);
    EXPECT_NE(compare_csv(rows).find(",random,0,unstable-init,"),
              std::string::npos);
}

TEST(Gradcheck, PassesAndDetectsCorruption)
{
    const ModelBank bank = synthetic_bank(2, 12, 4);
    const HorizonSpec h = HorizonSpec::parse("Ldt");
    for (const auto& row : gradcheck_bank(bank, 3, h, 2048, 3, 1, 1))
    {
        EXPECT_TRUE(row.comparison.passed()) << row.comparison.max_error();
        EXPECT_TRUE(row.comparison.exp_w_im.has_value());
    }
    bool any_failed = false;
    for (const auto& row : gradcheck_bank(bank, 3, h, 2048, 3, 1, 1, true))
    {
        any_failed = any_failed || !row.comparison.passed();
    }
    EXPECT_TRUE(any_failed);
    EXPECT_THROW(gradcheck_bank(bank, 3, h, 2048, 0, 1, 1), Error);
}

TEST(Commands, ReduceWritesArtifacts)
{
    const fs::path dir = scratch("reduce");
    CommonOptions opt;
    opt.bank = write_bank_file(dir, 3, 16, 1);
    opt.r = 2;
    opt.out = (dir / "out").string();
    std::ostringstream log, err;
    EXPECT_EQ(cmd_reduce(opt, "fh2", log, err), exit_code::ok) << err.str();
    EXPECT_TRUE(fs::exists(dir / "out" / "report.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "convergence.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "traces" / "model_0002.csv"));
    const ModelBank reduced = read_bank((dir / "out" / "reduced_bank.json").string());
    EXPECT_EQ(reduced.models.size(), 3u);
    EXPECT_EQ(reduced.models[0].size(), 2);
}

TEST(Commands, ReduceIsByteDeterministic)
{
    const fs::path dir = scratch("determinism");
    CommonOptions opt;
    opt.bank = write_bank_file(dir, 3, 16, 8);
    opt.r = 3;
    std::ostringstream log, err;
    opt.out = (dir / "a").string();
    opt.workers = 1;
    ASSERT_EQ(cmd_reduce(opt, "fh2", log, err), exit_code::ok);
    opt.out = (dir / "b").string();
    opt.workers = 3;
    ASSERT_EQ(cmd_reduce(opt, "fh2", log, err), exit_code::ok);
    for (const char* f : {"report.csv", "convergence.csv", "reduced_bank.json",
                          "traces/model_0001.csv"})
    {
        EXPECT_EQ(read_text_file((dir / "a" / f).string()),
                  read_text_file((dir / "b" / f).string()))
            << f;
    }
}

TEST(Commands, MissingBankIsAnIoError)
{
    CommonOptions opt;
    opt.bank = "/nonexistent/bank.json";
    opt.out = (scratch("missing") / "out").string();
    std::ostringstream log, err;
    EXPECT_EQ(cmd_reduce(opt, "fh2", log, err), exit_code::io);
    EXPECT_NE(err.str().find("/nonexistent/bank.json"), std::string::npos);
}

TEST(Commands, GradcheckExitCodes)
{
    const fs::path dir = scratch("gradcheck");
    CommonOptions opt;
    opt.bank = write_bank_file(dir, 2, 8, 3);
    opt.r = 2;
    std::ostringstream log, err;
    EXPECT_EQ(cmd_gradcheck(opt, 2, false, log, err), exit_code::ok);
    EXPECT_NE(log.str().find("PASS"), std::string::npos);
    EXPECT_EQ(cmd_gradcheck(opt, 2, true, log, err), exit_code::check_failed);
    EXPECT_EQ(cmd_gradcheck(opt, 0, false, log, err), exit_code::usage);
}

TEST(Commands, CompareWritesNotes)
{
    const fs::path dir = scratch("compare");
    CommonOptions opt;
    opt.bank = write_bank_file(dir, 2, 8, 3);
    opt.r = 2;
    opt.out = (dir / "out").string();
    std::ostringstream log, err;
    EXPECT_EQ(cmd_compare(opt, {"ibt", "fh2"}, {"Ldt", "L"}, log, err),
              exit_code::ok)
        << err.str();
    const std::string notes = read_text_file((dir / "out" / "NOTES.txt").string());
    EXPECT_NE(notes.find("NOT reproducible"), std::string::npos);
    EXPECT_NE(notes.find("84.51%"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "out" / "compare_timing.csv"));
}

TEST(Commands, NormAndSimulate)
{
    const fs::path dir = scratch("norm");
    CommonOptions opt;
    opt.bank = write_bank_file(dir, 2, 8, 3);
    opt.tau = "inf";
    std::ostringstream log, err;
    EXPECT_EQ(cmd_norm(opt, log, err), exit_code::ok);
    EXPECT_EQ(log.str().rfind("model,tau,h2_sq,hinf\n0,inf,", 0), 0u);

    opt.sequence_length = 64;
    opt.out = (dir / "y.csv").string();
    SimulateOptions sim;
    sim.kind = "impulse";
    EXPECT_EQ(cmd_simulate(opt, sim, log, err), exit_code::ok);
    const SequenceSignal y =
        parse_signal_csv(read_text_file(opt.out), 1.0);
    EXPECT_EQ(y.length(), 64);

    sim.model = 5;
    EXPECT_EQ(cmd_simulate(opt, sim, log, err), exit_code::usage);
}

TEST(Cli, ExitCodes)
{
    if (!std::getenv("DSSMOR_CLI"))
    {
        GTEST_SKIP() << "DSSMOR_CLI not set";
    }
    const fs::path dir = scratch("cli");
    const std::string bank = write_bank_file(dir, 2, 8, 3);
    EXPECT_EQ(run_cli("reduce --bank /nonexistent.json --r 2 --out " +
                      (dir / "o").string()),
              exit_code::io);
    EXPECT_EQ(run_cli("gradcheck --bank " + bank + " --r 2 --trials 0"),
              exit_code::usage);
    EXPECT_EQ(run_cli("gradcheck --bank " + bank + " --r 2 --trials 2"),
              exit_code::ok);
    EXPECT_EQ(run_cli("gradcheck --bank " + bank +
                      " --r 2 --trials 2 --corrupt-gradient"),
              exit_code::check_failed);
    EXPECT_EQ(run_cli("reduce --bank " + bank + " --r 2 --out " +
                      (dir / "o").string()),
              exit_code::ok);
    EXPECT_EQ(run_cli("bogus"), exit_code::usage);
}
