#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "penlab/config.hpp"

namespace penlab {

struct CheckResult {
    std::string id;
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;  // deterministic; no timings
    double seconds = 0.0;
};

/// Golden capacity of the single central cell (slab 3, node 3) on the
/// nx=7, nt=8, T=1, unit-interval grid, from the independent SOCP solve in
/// tools/oracles/capacity_golden.py.
inline constexpr double kCentralCellCapacity = 1.21963169059;

// Acceptance criteria; `cfg` is the standard scenario.
CheckResult accept_comparison(const ExperimentConfig& cfg, int threads = 1);
CheckResult accept_monotonicity(const ExperimentConfig& cfg, int threads = 1);
CheckResult accept_penalty_bound(const ExperimentConfig& cfg, int threads = 1);
CheckResult accept_power_penalty(const ExperimentConfig& cfg, int threads = 1);
CheckResult accept_energy_identity(const ExperimentConfig& cfg, int threads = 1);
CheckResult accept_measure(const ExperimentConfig& cfg, int threads = 1);
CheckResult accept_complementarity(const ExperimentConfig& cfg, int threads = 1);
CheckResult accept_heat_regression(const ExperimentConfig& cfg, int threads = 1);
CheckResult accept_noise_sampler(const ExperimentConfig& cfg, int threads = 1);
CheckResult accept_capacity(const ExperimentConfig& cfg, int threads = 1);
CheckResult accept_auditor(const ExperimentConfig& cfg, int threads = 1);

std::vector<CheckResult> acceptance_suite(const ExperimentConfig& cfg, int threads = 1);
/// Module invariants (grid, models, noise, solver, diagnostics, capacity).
std::vector<CheckResult> invariant_suite(const ExperimentConfig& cfg, int threads = 1);
/// invariant_suite followed by acceptance_suite.
std::vector<CheckResult> validation_suite(const ExperimentConfig& cfg, int threads = 1);

void write_report_csv(std::ostream& os, const std::vector<CheckResult>& results);
std::string format_result_line(const CheckResult& r);

}  // namespace penlab
