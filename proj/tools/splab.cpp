// Batch front-end for the radial semipositone p-Laplacian lab: solves
// problem instances, sweeps the shift parameter, builds and verifies
// barriers, and re-certifies stored profiles.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "splab/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"radial semipositone p-Laplacian lab"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", profile_path;
    long long seed = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config JSON")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "override solver seed");
    };
    auto* c_solve = app.add_subcommand("solve", "solve one instance and certify the solution");
    auto* c_sweep = app.add_subcommand("sweep", "sweep the shift parameter a and estimate a*");
    auto* c_barrier = app.add_subcommand("barrier", "build and verify a closed-form barrier");
    auto* c_verify = app.add_subcommand("verify", "re-certify a stored profile");
    for (auto* c : {c_solve, c_sweep, c_barrier, c_verify}) add_common(c);
    c_verify->add_option("--profile", profile_path, "profile.csv to verify");

    CLI11_PARSE(app, argc, argv);

    splab::RunConfig cfg;
    try {
        cfg = splab::load_config(config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return splab::kExitConfig;
    }
    if (seed >= 0) cfg.solver.seed = static_cast<std::uint64_t>(seed);

    try {
        if (c_solve->parsed()) return splab::cmd_solve(cfg, out_dir);
        if (c_sweep->parsed()) return splab::cmd_sweep(cfg, out_dir);
        if (c_barrier->parsed()) return splab::cmd_barrier(cfg, out_dir);
        if (c_verify->parsed()) return splab::cmd_verify(cfg, out_dir, profile_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return splab::kExitConfig;
}
