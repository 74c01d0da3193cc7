#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "penlab/field.hpp"
#include "penlab/grid.hpp"

namespace penlab {

/**
 * Truncated Karhunen-Loeve description of the additive noise: K modes of the
 * Dirichlet Laplacian on the box with eigenvalues lambda_k = amp^2 k^-gamma.
 * In 2D the tensor sine modes are ranked by Laplace eigenvalue.
 */
struct NoiseSpec {
    int modes = 16;
    double decay = 2.0;
    double amp = 0.3;

    double eigenvalue(int k) const;  // k = 1..modes
    /// Sup of Sobolev orders s with sum_k lambda_k mu_k^s < inf, i.e. d (gamma - 1) / 2.
    double smoothing_index(int dim) const;
    void validate() const;
};

struct RegularityReport {
    double required_index = 0.0;
    double effective_index = 0.0;
    bool satisfied = false;
    std::string message;
};

/// Compares the noise smoothness against max(d/2, (2+d)/2 - d/p). Never throws on failure.
RegularityReport validate_regularity(const NoiseSpec& spec, double p, int dim);

/// Standard normal draws for nt steps and K modes; a pure function of (seed, nt, K).
class NoisePath {
public:
    NoisePath(std::uint64_t seed, int steps, int modes);

    std::uint64_t seed() const { return seed_; }
    int steps() const { return steps_; }
    int modes() const { return modes_; }
    double draw(int step, int mode) const { return draws_[static_cast<std::size_t>(step) * modes_ + mode]; }

    /// Path on a grid with `factor` times fewer steps: sums of consecutive
    /// draws divided by sqrt(factor), so that both paths share one Brownian motion.
    NoisePath coarsened(int factor) const;

    bool operator==(const NoisePath&) const = default;

private:
    NoisePath() = default;

    std::uint64_t seed_ = 0;
    int steps_ = 0;
    int modes_ = 0;
    std::vector<double> draws_;
};

/// Noise spec bound to a grid: tabulated eigenfunctions at interior nodes.
class QWienerNoise {
public:
    QWienerNoise(const NoiseSpec& spec, const Grid& grid);

    const NoiseSpec& spec() const { return spec_; }
    const Grid& grid() const { return grid_; }
    double eigenvalue(int k) const { return eigenvalues_[static_cast<std::size_t>(k)]; }
    /// amp * k^{-gamma/2}, linear in amp bit for bit.
    double sqrt_eigenvalue(int k) const { return sqrt_eigenvalues_[static_cast<std::size_t>(k)]; }
    /// Value of the k-th (0-based) L^2-normalized mode at a node.
    double mode(int k, std::size_t node) const { return basis_[static_cast<std::size_t>(k) * grid_.num_nodes() + node]; }
    /// Laplace eigenvalue of the k-th (0-based) mode.
    double laplace_eigenvalue(int k) const { return laplace_[static_cast<std::size_t>(k)]; }

    /// Pointwise variance of one increment per unit time: sum_k lambda_k e_k(x)^2.
    double variance_rate(std::size_t node) const;

private:
    NoiseSpec spec_;
    Grid grid_;
    std::vector<double> eigenvalues_;
    std::vector<double> sqrt_eigenvalues_;
    std::vector<double> laplace_;
    std::vector<double> basis_;
};

/// Increment sum_k sqrt(lambda_k) e_k sqrt(dt) zeta_{step,k}, zero on the boundary.
Field sample_increment(const QWienerNoise& noise, const NoisePath& path, int step_index, double dt);

/// sum_k lambda_k ||e_k||^2 with the grid quadrature.
double hs_norm_sq(const QWienerNoise& noise);

}  // namespace penlab
