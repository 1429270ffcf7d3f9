// tcbm: run strong-convergence experiments and dump sample paths.
//
//   tcbm run <config> [--seed N] [--samples M] [--resolutions LIST] [--out DIR]
//                     [--force] [--jobs J]
//   tcbm dump-path <config> --sample I --n N [--out DIR] [--force] [--brownian]

#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tcbm/cli.hpp"
#include "tcbm/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Time-changed Brownian motion scheme for dX = sigma(t, X) dW"};
    app.set_version_flag("--version", tcbm::version_string());
    app.require_subcommand(1);

    tcbm::cli::RunOptions run;
    std::uint64_t seed = 0;
    std::int64_t samples = 0;
    std::vector<std::int64_t> resolutions;
    auto* run_cmd = app.add_subcommand("run", "Run a convergence experiment");
    run_cmd->add_option("config", run.config_path, "Experiment config file")->required();
    auto* seed_opt = run_cmd->add_option("--seed", seed, "Override master_seed");
    auto* samples_opt = run_cmd->add_option("--samples", samples, "Override samples");
    auto* res_opt = run_cmd->add_option("--resolutions", resolutions, "Override resolutions")
                        ->delimiter(',');
    run_cmd->add_option("--out", run.out_dir, "Output directory");
    run_cmd->add_flag("--force", run.force, "Overwrite existing reports");
    run_cmd->add_option("--jobs", run.jobs, "Worker threads")->check(CLI::PositiveNumber);

    tcbm::cli::DumpOptions dump;
    auto* dump_cmd = app.add_subcommand("dump-path", "Write one sample path as CSV");
    dump_cmd->add_option("config", dump.config_path, "Experiment config file")->required();
    dump_cmd->add_option("--sample", dump.sample, "Sample index")->required();
    dump_cmd->add_option("--n", dump.n, "Resolution (on the ladder or the reference)")->required();
    dump_cmd->add_option("--out", dump.out_dir, "Output directory");
    dump_cmd->add_flag("--force", dump.force, "Overwrite existing files");
    dump_cmd->add_flag("--brownian", dump.brownian, "Also dump the Brownian knots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : tcbm::cli::kConfigError;
    }

    if (*run_cmd) {
        if (*seed_opt) run.seed = seed;
        if (*samples_opt) run.samples = samples;
        if (*res_opt) run.resolutions = resolutions;
        return tcbm::cli::cmd_run(run);
    }
    return tcbm::cli::cmd_dump_path(dump);
}
