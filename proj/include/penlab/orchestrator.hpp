#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "penlab/config.hpp"

namespace penlab {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class Command { Single, Sweep, Ensemble, Capacity, Validate };

std::optional<Command> parse_command(const std::string& name);
std::string command_name(Command c);

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitConfig = 2,
    kExitRuntime = 3,
};

struct RunOptions {
    Command command = Command::Single;
    std::string out_dir;  // empty: the config's output.dir
    std::optional<std::uint64_t> seed_override;
    int threads = 1;
    std::string config_source;  // recorded in the manifest
};

struct RunRecord {
    std::string label;
    std::uint64_t seed = 0;
    std::string fingerprint;
    double wall_time = 0.0;
};

struct OutputFile {
    std::string name;
    std::string hash;  // FNV-1a of the bytes written
    std::size_t bytes = 0;
};

struct RunManifest {
    std::string command;
    std::string config_fingerprint;
    std::string config_canonical;
    std::string config_source;
    std::string version = kArtifactVersion;
    std::string started;
    std::string finished;
    std::vector<RunRecord> runs;
    std::vector<OutputFile> files;
    bool complete = false;
    std::string error;
};

/// Applies --seed-override: replaces both the noise seed and the ensemble base seed.
ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opts);

/**
 * Executes one subcommand and writes its artifacts plus manifest.json into the
 * output directory. Output files are produced by the calling thread only; the
 * worker pool computes. Returns an ExitCode.
 */
int run(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log);

}  // namespace penlab
