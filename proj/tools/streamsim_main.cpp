// Command-line front end: single runs, ablation sweeps and the synthetic
// benchmark suite, emitting per-run metrics JSON and summary CSVs.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "streamsim/cli.hpp"

namespace {

int dispatch(int (*cmd)(const streamsim::RunManifest&), const streamsim::RunManifest& manifest) {
    try {
        return cmd(manifest);
    } catch (const streamsim::SimError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        switch (e.kind()) {
        case streamsim::ErrKind::ConfigParse:
        case streamsim::ErrKind::IoError:
            return streamsim::kExitConfig;
        case streamsim::ErrKind::CorrectnessMismatch:
            return streamsim::kExitCorrectness;
        default:
            return streamsim::kExitError;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return streamsim::kExitError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cycle-level simulator for stream-fed dataflow accelerators"};
    app.require_subcommand(1);

    streamsim::RunManifest manifest;
    std::string flags_text = "6";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", manifest.config_path, "System config JSON");
        cmd->add_option("--workloads", manifest.workloads_path, "Workload list JSON");
        cmd->add_option("--flags", flags_text, "Feature levels, e.g. 6, 1-6 or 2,4");
        cmd->add_option("--out", manifest.out_dir, "Output directory");
        cmd->add_option("--seed", manifest.seed, "Workload data / suite seed");
        cmd->add_option("--jobs", manifest.jobs, "Parallel worker threads");
        cmd->add_option("--deadlock-budget", manifest.deadlock_budget,
                        "No-progress cycle budget (0 = 10x ideal)");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "Run workloads at one or more feature levels");
    add_common(run_cmd);
    run_cmd->add_flag("--inject-fault", manifest.inject_fault,
                      "Corrupt the golden check (test hook)")
        ->group("");

    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "Sweep the feature ladder and aggregate per group");
    add_common(ablate_cmd);

    CLI::App* suite_cmd =
        app.add_subcommand("suite", "Generate and run the seeded synthetic suite");
    add_common(suite_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        manifest.levels = streamsim::parse_levels(flags_text);
    } catch (const streamsim::SimError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return streamsim::kExitConfig;
    }

    if (run_cmd->parsed()) return dispatch(streamsim::cmd_run, manifest);
    if (ablate_cmd->parsed()) return dispatch(streamsim::cmd_ablate, manifest);
    return dispatch(streamsim::cmd_suite, manifest);
}
