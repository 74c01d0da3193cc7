#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "penlab/config.hpp"
#include "penlab/orchestrator.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Penalized reflected SPDE lab"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    app.add_option("--config", config_path, "INI experiment file (default: the standard scenario)");
    app.add_option("--out", out_dir, "Output directory (overrides [output] dir)");
    auto* seed_opt = app.add_option("--seed-override", seed, "Replace the noise seed and the ensemble base seed");
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    const char* names[][2] = {
        {"single", "One trajectory: trajectory.csv, ledger.csv, norms.csv"},
        {"sweep", "Coupled penalty sweep: sweep_report.csv, sweep_norms.csv"},
        {"ensemble", "Monte Carlo ensemble: ensemble_summary.csv"},
        {"capacity", "Capacity estimate and sandwich report: capacity.json"},
        {"validate", "Invariant and acceptance suite: validate_report.csv"},
    };
    for (const auto& [name, help] : names) {
        app.add_subcommand(name, help)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : penlab::kExitConfig;
    }

    penlab::RunOptions opts;
    opts.command = *penlab::parse_command(app.get_subcommands().front()->get_name());
    opts.out_dir = out_dir;
    opts.threads = threads;
    opts.config_source = config_path.empty() ? "standard" : config_path;
    if (*seed_opt) {
        opts.seed_override = seed;
    }

    penlab::ExperimentConfig cfg;
    try {
        cfg = config_path.empty() ? penlab::standard_scenario() : penlab::parse_config_file(config_path);
    } catch (const penlab::ConfigError& e) {
        for (const auto& msg : e.errors()) {
            std::cerr << "config error: " << msg << "\n";
        }
        return penlab::kExitConfig;
    }
    return penlab::run(cfg, opts, std::cout);
}
