//
// dssmor: batch front end for H2-optimal reduction of diagonal state-space
// models. See `dssmor --help` and the README for the file formats.
//
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <dssmor/commands.hpp>

namespace
{

void add_common(CLI::App* cmd, dssmor::CommonOptions& opt, bool needs_r)
{
    cmd->add_option("--bank", opt.bank, "Model bank JSON")->required();
    if (needs_r)
    {
        cmd->add_option("--r", opt.r, "Reduced order")->check(CLI::PositiveNumber);
    }
    cmd->add_option("--L", opt.sequence_length, "Sequence length in samples")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opt.seed, "Base seed");
    cmd->add_option("--workers", opt.workers,
                    "Worker threads (default: $DSSMOR_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"H2-optimal model order reduction for diagonal state-space "
                 "models"};
    app.require_subcommand(1);

    dssmor::CommonOptions opt;
    opt.workers = dssmor::default_workers();

    std::string method = "fh2";
    auto* reduce = app.add_subcommand("reduce", "Reduce every model in a bank");
    add_common(reduce, opt, true);
    reduce->add_option("--tau", opt.tau, "Horizon: inf, Ldt, L, 10L or seconds");
    reduce->add_option("--method", method, "ibt, fbt, ih2 or fh2");
    reduce->add_option("--out", opt.out, "Output directory")->required();
    reduce->add_option("--config", opt.config, "Reducer config JSON");

    std::vector<std::string> methods{"ibt", "fbt", "ih2", "fh2"};
    std::vector<std::string> horizons{"Ldt", "L", "10L"};
    auto* compare = app.add_subcommand("compare", "Compare reduction methods");
    add_common(compare, opt, true);
    compare->add_option("--tau", horizons, "Finite horizons for fbt and fh2");
    compare->add_option("--method", methods, "Methods to run");
    compare->add_option("--out", opt.out, "Output directory")->required();
    compare->add_option("--config", opt.config, "Reducer config JSON");

    long trials = 20;
    bool corrupt = false;
    auto* gradcheck =
        app.add_subcommand("gradcheck", "Check gradients against differences");
    add_common(gradcheck, opt, true);
    gradcheck->add_option("--tau", opt.tau, "Horizon");
    gradcheck->add_option("--trials", trials, "Number of random trials");
    gradcheck->add_option("--out", opt.out, "Optional per-trial CSV");
    gradcheck->add_flag("--corrupt-gradient", corrupt,
                        "Perturb the analytic gradient (negative control)")
        ->group("");

    auto* norm = app.add_subcommand("norm", "H2 and H-infinity norms");
    add_common(norm, opt, false);
    norm->add_option("--tau", opt.tau, "Horizon");
    norm->add_option("--out", opt.out, "Optional output CSV");

    dssmor::SimulateOptions sim;
    auto* simulate =
        app.add_subcommand("simulate", "Run the discretized recurrence");
    add_common(simulate, opt, false);
    simulate->add_option("--model", sim.model, "Model index in the bank");
    simulate->add_option("--input", sim.input, "Input signal CSV (k,re,im)");
    simulate->add_option("--signal", sim.kind, "Generated input: white, impulse");
    simulate->add_option("--rom-bank", sim.rom_bank,
                         "Reduced bank for the error-bound check");
    simulate->add_option("--out", opt.out, "Output signal CSV");

    std::size_t count = 512;
    Eigen::Index order = 64;
    double delta_min = 1e-3;
    double delta_max = 1e-1;
    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic bank");
    synth->add_option("--count", count, "Number of models");
    synth->add_option("--n", order, "State dimension");
    synth->add_option("--seed", opt.seed, "Base seed");
    synth->add_option("--delta-min", delta_min, "Smallest sampling time");
    synth->add_option("--delta-max", delta_max, "Largest sampling time");
    synth->add_option("--out", opt.out, "Output bank JSON")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : dssmor::exit_code::usage;
    }

    if (*reduce)
        return dssmor::cmd_reduce(opt, method, std::cout, std::cerr);
    if (*compare)
        return dssmor::cmd_compare(opt, methods, horizons, std::cout, std::cerr);
    if (*gradcheck)
        return dssmor::cmd_gradcheck(opt, trials, corrupt, std::cout, std::cerr);
    if (*norm)
        return dssmor::cmd_norm(opt, std::cout, std::cerr);
    if (*simulate)
        return dssmor::cmd_simulate(opt, sim, std::cout, std::cerr);
    return dssmor::cmd_synth(count, order, opt.seed, delta_min, delta_max,
                             opt.out, std::cout, std::cerr);
}
