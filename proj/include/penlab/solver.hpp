#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "penlab/field.hpp"
#include "penlab/grid.hpp"
#include "penlab/models.hpp"
#include "penlab/noise.hpp"

namespace penlab {

struct SolverConfig {
    Grid grid;
    FluxModel flux;
    ReactionModel reaction;
    NoiseSpec noise;
    Field u0;
    double newton_tol = 1e-10;
    int newton_max_iters = 50;

    /// Throws std::invalid_argument listing the first violated precondition.
    void validate() const;
    /// Stable hash of every field that affects the computed trajectory.
    std::string fingerprint() const;
    /// Same hash with the penalty strength left out; equal across an n-sweep.
    std::string base_fingerprint() const;

    SolverConfig with_n(double n) const
    {
        SolverConfig c = *this;
        c.reaction.n = n;
        return c;
    }
};

class StepError : public std::runtime_error {
public:
    enum class Kind { NonConvergence, NonFinite };

    StepError(Kind kind, double residual, int step_index, const std::string& what)
        : std::runtime_error(what), kind_(kind), residual_(residual), step_index_(step_index)
    {
    }

    Kind kind() const { return kind_; }
    double residual() const { return residual_; }
    int step_index() const { return step_index_; }

private:
    Kind kind_;
    double residual_;
    int step_index_;
};

struct StepResult {
    Field u;
    int iterations = 0;
    double residual = 0.0;
    bool used_fallback = false;
};

/**
 * One step of the semi-implicit scheme
 *
 *   u+ - dt div a(x, u, grad u+) + dt f(u) - dt n pen(u+) = u + dW
 *
 * with the lambda-argument of the flux and the reaction frozen at the old
 * state (convection upwinded per cell) and the gradient argument and the
 * penalty implicit. The implicit problem is the minimization of a strictly
 * convex energy and is solved by damped Newton with a fixed-point fallback.
 */
class PenalizedStepper {
public:
    explicit PenalizedStepper(const SolverConfig& cfg);

    StepResult step(const Field& u_old, const Field& dW, int step_index = 0) const;

    /// Residual of the implicit equation at v, per node (strong form).
    Field residual(const Field& u_old, const Field& dW, const Field& v) const;

    /// dt * sum_c |c| a(lambda_c(u_old), grad v) . grad v
    double dissipation(const Field& u_old, const Field& v) const;
    /// sum_c |c| |a(lambda_c(u_old), grad v)|^{p'}
    double flux_dual_power(const Field& u_old, const Field& v) const;

    const SolverConfig& config() const { return cfg_; }
    const GradientStencil& stencil() const { return stencil_; }

private:
    struct Frozen {
        std::vector<double> rhs;                 // u_old + dW - dt f(u_old)
        std::vector<std::array<double, 2>> conv;  // F(lambda_c) per cell
    };

    Frozen freeze(const Field& u_old, const Field& dW) const;
    double upwind_value(const Field& u_old, std::size_t cell) const;
    void cell_gradients(std::span<const double> v, std::vector<double>& grad) const;
    double energy(const Frozen& fz, std::span<const double> v, std::vector<double>& scratch) const;
    void residual_into(const Frozen& fz, std::span<const double> v, std::vector<double>& grad, std::vector<double>& r) const;
    double residual_norm(std::span<const double> r) const;
    bool fixed_point(const Frozen& fz, std::vector<double>& v, int& iterations, double& res) const;

    SolverConfig cfg_;
    GradientStencil stencil_;
    std::vector<int> upwind_vertex_;
};

/// Convenience wrapper around PenalizedStepper::step.
Field step(const Field& u_j, const SolverConfig& cfg, const Field& dW_j);

struct LevelNorms {
    double l2 = 0.0;
    double grad_p = 0.0;
    double neg_l2 = 0.0;
    double neg_p = 0.0;
    double neg_inf = 0.0;
};

/// Per-step terms of the discrete Ito energy balance (all already multiplied by dt where applicable).
struct EnergyEntry {
    double kinetic = 0.0;      // 1/2 |u+|^2 - 1/2 |u|^2
    double dissipation = 0.0;  // dt (a, grad u+)
    double reaction = 0.0;     // dt (f(u), u+)
    double penalty = 0.0;      // dt n (pen(u+), -u+) >= 0
    double noise = 0.0;        // (u, dW)
    double ito = 0.0;          // 1/2 |Phi|_HS^2 dt
    double step_residual = 0.0;
    double cumulative = 0.0;
    double coercivity_bound = 0.0;  // dt (kappa |D| + C1 |grad u+|_p^p)
    double grad_pp = 0.0;           // dt |grad u+|_p^p
    double flux_dual = 0.0;         // dt |a|_{p'}^{p'}
    int newton_iterations = 0;
};

struct TrajectoryRecord {
    std::string fingerprint;
    std::string base_fingerprint;
    std::uint64_t seed = 0;
    double n = 0.0;
    double p = 2.0;
    PenaltyKind penalty_kind = PenaltyKind::Linear;
    double penalty_exponent = 2.0;
    SpaceTimeField u;
    std::vector<LevelNorms> norms;               // nt + 1
    std::vector<double> stochastic_integral;     // nt + 1 partial sums of (u^j, dW^j)
    std::vector<EnergyEntry> ledger;             // nt
    double wall_time = 0.0;

    explicit TrajectoryRecord(const Grid& g) : u(g) {}
    const Grid& grid() const { return u.grid; }
};

TrajectoryRecord solve_trajectory(const SolverConfig& cfg, const NoisePath& path);

/// |LHS - RHS| of the discrete energy balance at the final time.
double energy_residual(const TrajectoryRecord& rec);

LevelNorms level_norms(const Field& u, double p);

struct RunningStat {
    long count = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double x)
    {
        ++count;
        sum += x;
        sumsq += x * x;
    }
    void merge(const RunningStat& o)
    {
        count += o.count;
        sum += o.sum;
        sumsq += o.sumsq;
    }
    double mean() const { return count > 0 ? sum / count : 0.0; }
    double variance() const;
    double std_error() const;
};

struct PathStatistics {
    double sup_l2_sq = 0.0;   // sup_t |u(t)|_2^2
    double grad_pp = 0.0;     // int_0^T |grad u|_p^p
    double flux_dual = 0.0;   // int_0^T |a|_{p'}^{p'}
    double penalty = 0.0;     // int_0^T n |u^-|_2^2
    double neg_l2_sq = 0.0;   // int_0^T |u^-|_2^2
};

PathStatistics path_statistics(const TrajectoryRecord& rec);

struct EnsembleSummary {
    int requested = 0;
    RunningStat sup_l2_sq;
    RunningStat grad_pp;
    RunningStat flux_dual;
    RunningStat penalty;
    RunningStat neg_l2_sq;
    std::vector<std::pair<int, std::string>> failures;

    void add(const PathStatistics& s);
    void merge(const EnsembleSummary& o);
};

/// Per-path seed: base_seed XOR path_index.
std::uint64_t path_seed(std::uint64_t base_seed, int path_index);

EnsembleSummary monte_carlo(const SolverConfig& cfg, int num_paths, std::uint64_t base_seed, int threads = 1);

}  // namespace penlab
