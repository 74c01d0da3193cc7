#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "penlab/capacity.hpp"
#include "penlab/field.hpp"
#include "penlab/grid.hpp"
#include "penlab/solver.hpp"

namespace penlab {

/// Thrown by parse_config with every validation error found.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

/**
 * INI experiment description. Sections and keys:
 *
 *   [scenario]  name
 *   [grid]      dim, extent, extent_y, nx, ny, T, nt
 *   [model]     p, convection, reaction, penalty, penalty_exponent, eps_reg, n
 *   [noise]     modes, gamma, amp, seed
 *   [sweep]     n
 *   [ensemble]  num_paths, base_seed
 *   [initial]   profile, scale
 *   [solver]    newton_tol, newton_max_iters
 *   [capacity]  dim, nx, nt, T, extent, cells, max_iters
 *   [output]    dir
 *
 * reaction is "zero" or '+'-joined terms "linear:a", "pospart:b", "power:c".
 */
struct ExperimentConfig {
    std::string scenario = "standard";

    int dim = 1;
    double extent = 1.0;
    double extent_y = 1.0;
    int nx = 64;
    int ny = 64;
    double T = 0.5;
    int nt = 500;

    double p = 3.0;
    double convection = 0.5;
    std::string reaction = "zero";
    PenaltyKind penalty = PenaltyKind::Linear;
    double penalty_exponent = 0.0;  // 0: use p
    double eps_reg = 1e-8;
    double n = 100.0;

    int modes = 16;
    double gamma = 2.0;
    double amp = 0.3;
    std::uint64_t seed = 1;

    std::vector<double> sweep{1.0, 10.0, 100.0, 1000.0, 10000.0};

    int num_paths = 10;
    std::uint64_t base_seed = 1;

    std::string profile = "sine-bump";
    double profile_scale = 1.0;

    double newton_tol = 1e-10;
    int newton_max_iters = 50;

    int cap_dim = 1;
    int cap_nx = 7;
    int cap_nt = 8;
    double cap_T = 1.0;
    double cap_extent = 1.0;
    std::string cap_cells = "3:3,3:3";
    int cap_max_iters = 20000;

    std::string out_dir = "out";

    Grid grid() const;
    ReactionModel reaction_model(double strength) const;
    FluxModel flux_model() const;
    NoiseSpec noise_spec() const;
    Field initial_field(const Grid& g) const;
    SolverConfig solver_config(double strength) const;
    CapacityProblem capacity_problem() const;

    /// Canonical key=value text of every field that affects results.
    std::string canonical() const;
    std::string fingerprint() const;

    /// Collects every violated constraint; empty when valid.
    std::vector<std::string> problems() const;
};

/// The repository's standard scenario (also the parse_config defaults).
ExperimentConfig standard_scenario();

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Named non-negative profiles: sine-bump, plateau, two-bump.
Field initial_profile(const std::string& name, const Grid& g, double scale = 1.0);

std::string penalty_kind_name(PenaltyKind k);

}  // namespace penlab
